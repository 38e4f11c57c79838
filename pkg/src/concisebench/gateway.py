"""Generation gateway: remote text-generation endpoints plus an offline mock.

The gateway sends one prompt per request, measures wall-clock latency at
the client around the full network exchange, and retries transient
failures with retries excluded from the reported latency. The mock
backend is fixture-driven and fully deterministic, with a synthetic
latency proportional to answer length so timing analyses stay meaningful
offline.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import requests

from .errors import ConfigurationError, GatewayError
from .metrics import word_count

MOCK_FALLBACK_TEXT = "UNMAPPED"
DEFAULT_MAX_NEW_TOKENS = 512
DEFAULT_TEMPERATURE = 0.0


class GatewayTimeoutError(GatewayError):
    pass


class GatewayConnectionError(GatewayError):
    pass


class GatewayStatusError(GatewayError):
    def __init__(self, message: str, request_id: str | None = None, status: int | None = None):
        super().__init__(message, request_id)
        self.status = status


class GatewayResponseError(GatewayError):
    pass


@dataclass(frozen=True)
class GenerationRequest:
    """One prompt plus decoding parameters."""

    prompt: str
    model: str = "unknown"
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    seed: int | None = None
    chat_template: str | None = None

    def __post_init__(self):
        if self.max_new_tokens < 1:
            raise ConfigurationError(f"max_new_tokens must be >= 1, got {self.max_new_tokens!r}")
        if self.temperature < 0:
            raise ConfigurationError(f"temperature must be >= 0, got {self.temperature!r}")

    def transport_prompt(self) -> str:
        """Prompt as sent on the wire, after the optional chat wrapper."""
        if self.chat_template is None:
            return self.prompt
        return self.chat_template.replace("{prompt}", self.prompt)


@dataclass(frozen=True)
class GenerationResult:
    """One completion with its measured latency."""

    text: str
    latency_s: float
    word_count: int
    backend: str
    token_count: int | None = None
    timestamp: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "latency_s": self.latency_s,
            "word_count": self.word_count,
            "backend": self.backend,
            "token_count": self.token_count,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GenerationResult":
        return cls(
            text=data["text"],
            latency_s=data["latency_s"],
            word_count=data["word_count"],
            backend=data["backend"],
            token_count=data.get("token_count"),
            timestamp=data.get("timestamp", ""),
        )


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def _looks_like_digest(key: str) -> bool:
    return len(key) == 64 and all(c in "0123456789abcdef" for c in key.lower())


@dataclass(frozen=True)
class MockFixture:
    """Canned responses keyed by prompt digest."""

    responses: dict[str, str] = field(default_factory=dict)
    latency_per_word: float = 0.1
    fallback_text: str = MOCK_FALLBACK_TEXT

    def lookup(self, prompt: str) -> str:
        return self.responses.get(prompt_digest(prompt), self.fallback_text)


def mock_fixture_load(path: str | Path) -> MockFixture:
    """Load a mock fixture file.

    Keys under "responses" may be sha256 hex digests or raw prompt texts;
    raw prompts are digested at load time so fixtures stay hand-editable.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot load mock fixture {path}: {exc}") from exc
    if not isinstance(raw, dict) or not isinstance(raw.get("responses", {}), dict):
        raise ConfigurationError(f"mock fixture {path} must be an object with a 'responses' map")
    responses: dict[str, str] = {}
    for key, text in raw.get("responses", {}).items():
        if not isinstance(text, str):
            raise ConfigurationError(f"mock fixture {path}: response for {key[:40]!r} is not text")
        digest = key if _looks_like_digest(key) else prompt_digest(key)
        responses[digest] = text
    return MockFixture(
        responses=responses,
        latency_per_word=float(raw.get("latency_per_word", 0.1)),
        fallback_text=str(raw.get("fallback", MOCK_FALLBACK_TEXT)),
    )


class MockBackend:
    """Deterministic offline stand-in for a generation endpoint.

    Reports a synthetic latency of ``latency_per_word * word_count`` so the
    monotone length/latency relationship survives in offline runs; it never
    sleeps.
    """

    name = "mock"

    def __init__(self, fixture: MockFixture | None = None):
        self.fixture = fixture or MockFixture()
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._calls

    def generate(self, request: GenerationRequest) -> GenerationResult:
        with self._lock:
            self._calls += 1
        text = self.fixture.lookup(request.prompt)
        words = word_count(text)
        return GenerationResult(
            text=text,
            latency_s=self.fixture.latency_per_word * words,
            word_count=words,
            backend=self.name,
            token_count=None,
            timestamp=_utc_now(),
        )


class HTTPBackend:
    """JSON-over-HTTP client for generate-style endpoints.

    Two adapters are provided: "tgi" posts to ``/generate`` with
    ``{inputs, parameters}``; "openai" posts to ``/v1/completions`` with
    ``{model, prompt, ...}``. Transient failures (timeouts, connection
    errors, 5xx) are retried up to ``max_retries`` extra attempts; only the
    successful attempt is timed.
    """

    name = "remote"

    ADAPTERS = ("tgi", "openai")

    def __init__(
        self,
        endpoint: str,
        adapter: str = "tgi",
        token: str | None = None,
        timeout: float = 120.0,
        max_retries: int = 2,
        session: requests.Session | None = None,
    ):
        if adapter not in self.ADAPTERS:
            raise ConfigurationError(f"unknown gateway adapter {adapter!r}; expected one of {self.ADAPTERS}")
        self.endpoint = endpoint.rstrip("/")
        self.adapter = adapter
        self.token = token
        self.timeout = timeout
        self.max_retries = max_retries
        self._session = session or requests.Session()
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._calls

    def _build_payload(self, request: GenerationRequest) -> tuple[str, dict[str, Any]]:
        prompt = request.transport_prompt()
        if self.adapter == "tgi":
            parameters: dict[str, Any] = {
                "max_new_tokens": request.max_new_tokens,
                "temperature": request.temperature,
            }
            if request.seed is not None:
                parameters["seed"] = request.seed
            return f"{self.endpoint}/generate", {"inputs": prompt, "parameters": parameters}
        payload = {
            "model": request.model,
            "prompt": prompt,
            "max_tokens": request.max_new_tokens,
            "temperature": request.temperature,
        }
        if request.seed is not None:
            payload["seed"] = request.seed
        return f"{self.endpoint}/v1/completions", payload

    def _parse_response(self, body: Any, request_id: str) -> tuple[str, int | None]:
        try:
            if self.adapter == "tgi":
                if isinstance(body, list):
                    body = body[0]
                text = body["generated_text"]
                details = body.get("details") or {}
                tokens = details.get("generated_tokens")
            else:
                choice = body["choices"][0]
                text = choice["text"]
                usage = body.get("usage") or {}
                tokens = usage.get("completion_tokens")
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayResponseError(
                f"malformed generation response: {exc}", request_id=request_id
            ) from exc
        if not isinstance(text, str):
            raise GatewayResponseError("generated text is not a string", request_id=request_id)
        return text, tokens

    def generate(self, request: GenerationRequest) -> GenerationResult:
        request_id = uuid.uuid4().hex
        url, payload = self._build_payload(request)
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        last_error: GatewayError | None = None
        for _attempt in range(self.max_retries + 1):
            with self._lock:
                self._calls += 1
            started = time.perf_counter()
            try:
                response = self._session.post(url, json=payload, headers=headers, timeout=self.timeout)
            except requests.Timeout as exc:
                last_error = GatewayTimeoutError(f"request timed out: {exc}", request_id=request_id)
                continue
            except requests.ConnectionError as exc:
                last_error = GatewayConnectionError(f"connection failed: {exc}", request_id=request_id)
                continue
            except requests.RequestException as exc:
                raise GatewayError(f"request failed: {exc}", request_id=request_id) from exc
            elapsed = time.perf_counter() - started
            if response.status_code >= 500:
                last_error = GatewayStatusError(
                    f"server error HTTP {response.status_code}",
                    request_id=request_id,
                    status=response.status_code,
                )
                continue
            if response.status_code != 200:
                raise GatewayStatusError(
                    f"unexpected HTTP {response.status_code}: {response.text[:200]}",
                    request_id=request_id,
                    status=response.status_code,
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise GatewayResponseError(
                    f"response is not JSON: {exc}", request_id=request_id
                ) from exc
            text, tokens = self._parse_response(body, request_id)
            return GenerationResult(
                text=text,
                latency_s=elapsed,
                word_count=word_count(text),
                backend=self.name,
                token_count=tokens,
                timestamp=_utc_now(),
            )
        assert last_error is not None
        raise last_error


def build_backend(
    endpoint: str,
    adapter: str = "tgi",
    fixture_path: str | Path | None = None,
    token: str | None = None,
    timeout: float = 120.0,
    max_retries: int = 2,
) -> MockBackend | HTTPBackend:
    """Construct a backend from an endpoint value ("mock" or a URL)."""
    if endpoint == "mock":
        fixture = mock_fixture_load(fixture_path) if fixture_path else MockFixture()
        return MockBackend(fixture)
    return HTTPBackend(
        endpoint, adapter=adapter, token=token, timeout=timeout, max_retries=max_retries
    )


def generate(
    request: GenerationRequest,
    endpoint: str,
    **backend_options: Any,
) -> GenerationResult:
    """One-shot convenience wrapper: build a backend and send one request."""
    backend = build_backend(endpoint, **backend_options)
    return backend.generate(request)
