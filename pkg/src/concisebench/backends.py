"""Pluggable similarity backends for information-flow scoring.

The lexical backend is built in and fully deterministic; the remote
backend talks JSON-over-HTTP to a sidecar scorer service exposing
``POST /v1/similarity``. Reports record which backend produced the
numbers, so the two are never silently interchangeable.
"""

from __future__ import annotations

from typing import Sequence

import requests

from .conciseness import lexical_similarity
from .errors import BackendError


class LexicalBackend:
    """Term-frequency cosine similarity; always available."""

    name = "lexical"

    def scores(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [lexical_similarity(reference, candidate) for reference, candidate in pairs]

    def describe(self) -> str:
        return "lexical:tf-cosine"


class RemoteSimilarityBackend:
    """Client for the sidecar semantic scorer service.

    Each batch posts ``{"pairs": [{"reference": ..., "candidate": ...}]}``
    and expects ``{"scores": [...], "model_id": ..., "score_variant": ...,
    "rescaled": ...}`` with scores in request order. Failures carry the
    index of the first pair that could not be scored.
    """

    name = "remote"

    def __init__(self, endpoint: str, timeout: float = 60.0, session: requests.Session | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._model_id: str | None = None
        self._score_variant: str | None = None

    def scores(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        if not pairs:
            return []
        payload = {
            "pairs": [{"reference": reference, "candidate": candidate} for reference, candidate in pairs]
        }
        url = f"{self.endpoint}/v1/similarity"
        try:
            response = self._session.post(url, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendError(f"similarity request failed at pair 0 of {len(pairs)}: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(
                f"similarity service returned HTTP {response.status_code} "
                f"for pairs 0..{len(pairs) - 1}: {response.text[:200]}"
            )
        try:
            body = response.json()
            scores = [float(s) for s in body["scores"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendError(f"malformed similarity response: {exc}") from exc
        if len(scores) != len(pairs):
            raise BackendError(
                f"similarity response length mismatch: expected {len(pairs)} scores, "
                f"got {len(scores)} (first missing pair index {len(scores)})"
            )
        self._model_id = body.get("model_id")
        self._score_variant = body.get("score_variant")
        return scores

    def describe(self) -> str:
        detail = f" model={self._model_id} variant={self._score_variant}" if self._model_id else ""
        return f"remote:{self.endpoint}{detail}"


def build_backend(name: str, endpoint: str | None = None) -> LexicalBackend | RemoteSimilarityBackend:
    """Construct a backend from configuration values."""
    if name == "lexical":
        return LexicalBackend()
    if name == "remote":
        if not endpoint:
            raise ValueError("remote similarity backend requires an endpoint URL")
        return RemoteSimilarityBackend(endpoint)
    raise ValueError(f"unknown similarity backend {name!r}")
