"""Run orchestration: dataset x prompt modes x endpoint, with caching.

A run walks every (item, mode) pair, builds the prompt, consults a
content-addressed generation cache, calls the gateway on a miss, grades
the answer, and appends one record per pair to an append-only JSON-lines
log. Interrupted runs resume from the log; identical reruns hit the cache
and never touch the gateway.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

from .conciseness import split_steps
from .datasets import QAItem, load_dataset
from .errors import ConfigurationError, GatewayError
from .extraction import RULE_NONE, answers_equal, extract_answer
from .gateway import (
    DEFAULT_MAX_NEW_TOKENS,
    DEFAULT_TEMPERATURE,
    GenerationRequest,
    GenerationResult,
    build_backend,
)
from .metrics import UNBOUNDED, MetricConfig, ScoredRecord, cca, hca, sca
from .prompts import PromptSpec, build_prompt

RUN_LOG_SCHEMA_VERSION = 1

ENDPOINT_ENV_VAR = "CONCISEBENCH_ENDPOINT"
TOKEN_ENV_VAR = "CONCISEBENCH_API_TOKEN"

DEFAULT_GRID = (
    MetricConfig(k=UNBOUNDED, alpha=10.0, beta=40.0),
    MetricConfig(k=100, alpha=10.0, beta=40.0),
    MetricConfig(k=80, alpha=10.0, beta=40.0),
    MetricConfig(k=40, alpha=10.0, beta=40.0),
)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def parse_mode(value: Any) -> PromptSpec:
    """Parse a config mode entry: "base", "cot", "ccot-45", or an object."""
    if isinstance(value, PromptSpec):
        return value
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("base", "cot"):
            return PromptSpec(mode=text)
        for separator in ("-", "@"):
            prefix = f"ccot{separator}"
            if text.startswith(prefix):
                return PromptSpec(mode="ccot", length_limit=int(text[len(prefix):]))
        raise ConfigurationError(f"cannot parse mode {value!r}")
    if isinstance(value, dict):
        allowed = {"mode", "length_limit", "cot_suffix", "ccot_suffix"}
        unexpected = value.keys() - allowed
        if unexpected:
            raise ConfigurationError(f"unexpected mode fields {sorted(unexpected)}")
        return PromptSpec(**value)
    raise ConfigurationError(f"cannot parse mode {value!r}")


def mode_sort_key(label: str) -> tuple[int, float, str]:
    """Canonical mode ordering: base, cot, then ccot by ascending limit."""
    if label == "base":
        return (0, 0.0, label)
    if label == "cot":
        return (1, 0.0, label)
    if label.startswith("ccot-"):
        try:
            return (2, float(label.split("-", 1)[1]), label)
        except ValueError:
            pass
    return (3, 0.0, label)


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to execute one evaluation run."""

    dataset_path: str
    dataset_source: str
    modes: tuple[PromptSpec, ...]
    endpoint: str = "mock"
    adapter: str = "tgi"
    model: str = "unknown"
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    seed: int | None = None
    chat_template: str | None = None
    fixture: str | None = None
    limit: int | None = None
    sample_seed: int | None = None
    concurrency: int = 1
    cache_dir: str = ".concisebench-cache"
    output_dir: str = "runs"
    auth_token: str | None = None
    run_name: str | None = None
    request_timeout: float = 120.0
    max_retries: int = 2

    def __post_init__(self):
        if not self.modes:
            raise ConfigurationError("at least one prompt mode is required")
        labels = [spec.label for spec in self.modes]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"duplicate mode labels in config: {labels}")
        if self.concurrency < 1:
            raise ConfigurationError("concurrency must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        """Parse a JSON config file; environment variables override the
        endpoint URL and auth token."""
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        dataset = raw.get("dataset") or {}
        decoding = raw.get("decoding") or {}
        config = cls(
            dataset_path=dataset["path"],
            dataset_source=dataset["source"],
            limit=dataset.get("limit"),
            sample_seed=dataset.get("seed"),
            modes=tuple(parse_mode(m) for m in raw.get("modes", [])),
            endpoint=raw.get("endpoint", "mock"),
            adapter=raw.get("adapter", "tgi"),
            model=raw.get("model", "unknown"),
            max_new_tokens=decoding.get("max_new_tokens", DEFAULT_MAX_NEW_TOKENS),
            temperature=decoding.get("temperature", DEFAULT_TEMPERATURE),
            seed=decoding.get("seed"),
            chat_template=raw.get("chat_template"),
            fixture=raw.get("fixture"),
            concurrency=raw.get("concurrency", 1),
            cache_dir=raw.get("cache_dir", ".concisebench-cache"),
            output_dir=raw.get("output_dir", "runs"),
            auth_token=raw.get("auth_token"),
            run_name=raw.get("run_name"),
            request_timeout=raw.get("request_timeout", 120.0),
            max_retries=raw.get("max_retries", 2),
        )
        endpoint = os.environ.get(ENDPOINT_ENV_VAR)
        token = os.environ.get(TOKEN_ENV_VAR)
        if endpoint:
            config = replace(config, endpoint=endpoint)
        if token:
            config = replace(config, auth_token=token)
        return config

    def digest(self) -> str:
        """Stable digest of the run identity (dataset, modes, decoding)."""
        identity = {
            "dataset": [self.dataset_path, self.dataset_source, self.limit, self.sample_seed],
            "modes": [
                [s.mode, s.length_limit, s.cot_suffix, s.ccot_suffix] for s in self.modes
            ],
            "model": self.model,
            "decoding": [self.max_new_tokens, self.temperature, self.seed, self.chat_template],
        }
        blob = json.dumps(identity, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def log_path(self) -> Path:
        name = self.run_name or f"run-{self.digest()[:12]}"
        return Path(self.output_dir) / f"{name}.jsonl"


@dataclass(frozen=True)
class RunRecord:
    """One graded generation, as persisted in the run log."""

    item_id: str
    mode: str
    prompt: str
    answer_text: str
    ground_truth: float
    correct: bool
    word_count: int
    step_count: int
    latency_s: float
    backend: str
    dataset_source: str
    model: str
    cache_key: str
    timestamp: str
    schema_version: int = RUN_LOG_SCHEMA_VERSION
    length_limit: int | None = None
    extracted_value: float | None = None
    extraction_rule: str = RULE_NONE
    token_count: int | None = None
    cache_hit: bool = False
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "item_id": self.item_id,
            "mode": self.mode,
            "length_limit": self.length_limit,
            "prompt": self.prompt,
            "answer_text": self.answer_text,
            "extracted_value": self.extracted_value,
            "extraction_rule": self.extraction_rule,
            "ground_truth": self.ground_truth,
            "correct": self.correct,
            "word_count": self.word_count,
            "step_count": self.step_count,
            "latency_s": self.latency_s,
            "token_count": self.token_count,
            "backend": self.backend,
            "dataset_source": self.dataset_source,
            "model": self.model,
            "cache_key": self.cache_key,
            "cache_hit": self.cache_hit,
            "timestamp": self.timestamp,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunRecord":
        return cls(
            schema_version=data.get("schema_version", RUN_LOG_SCHEMA_VERSION),
            item_id=data["item_id"],
            mode=data["mode"],
            length_limit=data.get("length_limit"),
            prompt=data["prompt"],
            answer_text=data["answer_text"],
            extracted_value=data.get("extracted_value"),
            extraction_rule=data.get("extraction_rule", RULE_NONE),
            ground_truth=data["ground_truth"],
            correct=data["correct"],
            word_count=data["word_count"],
            step_count=data["step_count"],
            latency_s=data["latency_s"],
            token_count=data.get("token_count"),
            backend=data["backend"],
            dataset_source=data["dataset_source"],
            model=data["model"],
            cache_key=data["cache_key"],
            cache_hit=data.get("cache_hit", False),
            timestamp=data["timestamp"],
            error=data.get("error"),
        )


def read_run_log(path: str | Path) -> list[RunRecord]:
    """Read every record of a run log."""
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                records.append(RunRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ConfigurationError(f"{path}:{lineno}: bad run record ({exc})") from exc
    return records


class GenerationCache:
    """Content-addressed cache of generation results on disk."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def key(self, request: GenerationRequest) -> str:
        identity = {
            "model": request.model,
            "prompt": request.prompt,
            "params": {
                "max_new_tokens": request.max_new_tokens,
                "temperature": request.temperature,
                "seed": request.seed,
                "chat_template": request.chat_template,
            },
        }
        blob = json.dumps(identity, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def get(self, key: str) -> GenerationResult | None:
        path = self.directory / f"{key}.json"
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as handle:
            return GenerationResult.from_dict(json.load(handle))

    def put(self, key: str, result: GenerationResult) -> None:
        path = self.directory / f"{key}.json"
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(result.to_dict(), handle, ensure_ascii=False)
        tmp.replace(path)


@dataclass(frozen=True)
class RunResult:
    """Outcome summary of one ``execute_run`` invocation."""

    log_path: Path
    records_written: int
    records_skipped: int
    gateway_calls: int
    cache_hits: int
    failures: int


def _grade(item: QAItem, spec: PromptSpec, prompt: str, result: GenerationResult, cache_key: str, cache_hit: bool, model: str) -> RunRecord:
    extracted = extract_answer(result.text)
    correct = (
        answers_equal(extracted.value, item.ground_truth)
        if extracted.value is not None
        else False
    )
    return RunRecord(
        item_id=item.id,
        mode=spec.label,
        length_limit=spec.length_limit,
        prompt=prompt,
        answer_text=result.text,
        extracted_value=extracted.value,
        extraction_rule=extracted.rule,
        ground_truth=item.ground_truth,
        correct=correct,
        word_count=result.word_count,
        step_count=len(split_steps(result.text)),
        latency_s=result.latency_s,
        token_count=result.token_count,
        backend=result.backend,
        dataset_source=item.source,
        model=model,
        cache_key=cache_key,
        cache_hit=cache_hit,
        timestamp=_utc_now(),
    )


def _failed_record(item: QAItem, spec: PromptSpec, prompt: str, cache_key: str, error: GatewayError, config: RunConfig) -> RunRecord:
    return RunRecord(
        item_id=item.id,
        mode=spec.label,
        length_limit=spec.length_limit,
        prompt=prompt,
        answer_text="",
        extracted_value=None,
        extraction_rule=RULE_NONE,
        ground_truth=item.ground_truth,
        correct=False,
        word_count=0,
        step_count=0,
        latency_s=0.0,
        token_count=None,
        backend="remote" if config.endpoint != "mock" else "mock",
        dataset_source=item.source,
        model=config.model,
        cache_key=cache_key,
        cache_hit=False,
        timestamp=_utc_now(),
        error=str(error),
    )


def execute_run(config: RunConfig) -> RunResult:
    """Execute one run and append its records to the run log.

    Per-item gateway errors become failed records rather than aborting the
    run; configuration problems abort before any request is sent.
    """
    items = load_dataset(
        config.dataset_path, config.dataset_source, limit=config.limit, seed=config.sample_seed
    )
    backend = build_backend(
        config.endpoint,
        adapter=config.adapter,
        fixture_path=config.fixture,
        token=config.auth_token,
        timeout=config.request_timeout,
        max_retries=config.max_retries,
    )
    cache = GenerationCache(config.cache_dir)
    log_path = config.log_path()
    log_path.parent.mkdir(parents=True, exist_ok=True)

    done: set[tuple[str, str]] = set()
    if log_path.exists():
        done = {(r.item_id, r.mode) for r in read_run_log(log_path)}

    tasks = [
        (item, spec)
        for spec in config.modes
        for item in items
        if (item.id, spec.label) not in done
    ]

    def process(item: QAItem, spec: PromptSpec) -> tuple[RunRecord, bool, bool]:
        prompt = build_prompt(item.question, spec)
        request = GenerationRequest(
            prompt=prompt,
            model=config.model,
            max_new_tokens=config.max_new_tokens,
            temperature=config.temperature,
            seed=config.seed,
            chat_template=config.chat_template,
        )
        cache_key = cache.key(request)
        cached = cache.get(cache_key)
        if cached is not None:
            return _grade(item, spec, prompt, cached, cache_key, True, config.model), True, False
        try:
            result = backend.generate(request)
        except GatewayError as exc:
            return _failed_record(item, spec, prompt, cache_key, exc, config), False, True
        cache.put(cache_key, result)
        return _grade(item, spec, prompt, result, cache_key, False, config.model), False, True

    written = failures = cache_hits = gateway_calls = 0
    with open(log_path, "a", encoding="utf-8") as log:
        if config.concurrency == 1 or len(tasks) <= 1:
            outcomes: Iterable[tuple[RunRecord, bool, bool]] = (
                process(item, spec) for item, spec in tasks
            )
            for record, hit, called in outcomes:
                log.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
                written += 1
                cache_hits += int(hit)
                gateway_calls += int(called)
                failures += int(record.failed)
        else:
            with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
                futures = [pool.submit(process, item, spec) for item, spec in tasks]
                for future in as_completed(futures):
                    record, hit, called = future.result()
                    log.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
                    written += 1
                    cache_hits += int(hit)
                    gateway_calls += int(called)
                    failures += int(record.failed)
    return RunResult(
        log_path=log_path,
        records_written=written,
        records_skipped=len(done),
        gateway_calls=gateway_calls,
        cache_hits=cache_hits,
        failures=failures,
    )


def metric_row_label(prefix: str, k: float) -> str:
    return f"{prefix}-∞" if math.isinf(k) else f"{prefix}-{int(k)}"


@dataclass(frozen=True)
class MetricTable:
    """Score grid: one column per mode, one row per metric/budget pair.

    Cell values are fractions in [0, 1]; ``None`` marks a mode with no
    scorable records.
    """

    columns: tuple[str, ...]
    rows: tuple[str, ...]
    cells: dict[str, dict[str, float | None]]
    alpha: float
    beta: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "columns": list(self.columns),
            "rows": list(self.rows),
            "cells": {row: dict(by_mode) for row, by_mode in self.cells.items()},
            "alpha": self.alpha,
            "beta": self.beta,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MetricTable":
        return cls(
            columns=tuple(data["columns"]),
            rows=tuple(data["rows"]),
            cells={row: dict(by_mode) for row, by_mode in data["cells"].items()},
            alpha=data["alpha"],
            beta=data["beta"],
        )


def _scored(records: Sequence[RunRecord], failures_as_wrong: bool) -> list[ScoredRecord]:
    usable = [r for r in records if not r.failed or failures_as_wrong]
    return [ScoredRecord(correct=r.correct and not r.failed, word_count=r.word_count) for r in usable]


def score_run(
    source: str | Path | Sequence[RunRecord],
    grid: Sequence[MetricConfig] | None = None,
    failures_as_wrong: bool = False,
) -> MetricTable:
    """Score a run log across the metric grid.

    The default grid mirrors the usual reporting layout: hard budgets at
    {unbounded, 100, 80, 40} plus soft and consistency rows for the finite
    budgets, with alpha = 10 and beta = 40. Failed generations are
    excluded from denominators unless ``failures_as_wrong`` is set.
    """
    records = (
        read_run_log(source) if isinstance(source, (str, Path)) else list(source)
    )
    configs = tuple(grid) if grid is not None else DEFAULT_GRID
    if not configs:
        raise ConfigurationError("metric grid must not be empty")
    alphas = {c.alpha for c in configs}
    betas = {c.beta for c in configs}
    if len(alphas) != 1 or len(betas) != 1:
        raise ConfigurationError("metric grid must share one alpha and one beta")
    alpha, beta = alphas.pop(), betas.pop()

    by_mode: dict[str, list[RunRecord]] = {}
    for record in records:
        by_mode.setdefault(record.mode, []).append(record)
    columns = tuple(sorted(by_mode, key=mode_sort_key))

    ks = [c.k for c in configs]
    finite_ks = [k for k in ks if not math.isinf(k)]
    rows = (
        [metric_row_label("H", k) for k in ks]
        + [metric_row_label("SCA", k) for k in finite_ks]
        + [metric_row_label("CCA", k) for k in finite_ks]
    )

    cells: dict[str, dict[str, float | None]] = {row: {} for row in rows}
    for mode in columns:
        scored = _scored(by_mode[mode], failures_as_wrong)
        for k in ks:
            label = metric_row_label("H", k)
            cells[label][mode] = hca(scored, k) if scored else None
        for k in finite_ks:
            cells[metric_row_label("SCA", k)][mode] = (
                sca(scored, k, alpha) if scored else None
            )
            cells[metric_row_label("CCA", k)][mode] = (
                cca(scored, k, alpha, beta) if scored else None
            )
    return MetricTable(columns=columns, rows=tuple(rows), cells=cells, alpha=alpha, beta=beta)
