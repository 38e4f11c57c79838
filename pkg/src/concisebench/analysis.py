"""Cross-run analysis: distributions, redundancy reductions, info flow.

``analyze_run`` consumes one or more run logs over the same dataset and
assembles a single report holding the score grid, per-mode latency/length
summaries, step-count distributions, redundancy-by-step-count series,
redundancy reductions of each length-constrained run against the
unconstrained step-by-step run, information-flow tables at chosen step
counts, and length percentile summaries. Every table cell is derived from
the run log alone, so re-analysis is idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from .backends import LexicalBackend
from .conciseness import (
    SimilarityBackend,
    StepList,
    info_flow_table,
    length_stats,
    mrr,
    orr,
    rms,
    split_steps,
    step_distribution,
)
from .errors import ConfigurationError, EmptyInputError
from .metrics import MetricConfig
from .runner import MetricTable, RunRecord, mode_sort_key, read_run_log, score_run

REPORT_SCHEMA_VERSION = 1

SUBSET_CCOT_TRUE_COT_FALSE = "ccot-true-cot-false"


@dataclass
class AnalysisReport:
    """Aggregated tables and figure data for one analysis invocation."""

    dataset: str
    modes: list[str]
    metric_table: MetricTable
    mode_summary: dict[str, dict[str, Any]]
    step_distribution: dict[str, dict[str, Any]]
    rms_by_steps: list[dict[str, Any]]
    redundancy_reduction: dict[str, dict[str, Any]]
    info_flow: list[dict[str, Any]]
    length_stats: dict[str, dict[str, float]]
    subset: dict[str, Any]
    flow_backend: str
    created_at: str
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        data = {
            "schema_version": self.schema_version,
            "created_at": self.created_at,
            "dataset": self.dataset,
            "modes": list(self.modes),
            "metric_table": self.metric_table.to_dict(),
            "mode_summary": self.mode_summary,
            "step_distribution": {
                mode: {
                    "histogram": {str(k): v for k, v in block["histogram"].items()},
                    "q1": block["q1"],
                    "median": block["median"],
                    "q3": block["q3"],
                    "n_answers": block["n_answers"],
                }
                for mode, block in self.step_distribution.items()
            },
            "rms_by_steps": [
                {
                    "label": series["label"],
                    "paired_with": series["paired_with"],
                    "buckets": {
                        str(k): dict(v) for k, v in series["buckets"].items()
                    },
                }
                for series in self.rms_by_steps
            ],
            "redundancy_reduction": self.redundancy_reduction,
            "info_flow": self.info_flow,
            "length_stats": self.length_stats,
            "subset": self.subset,
            "flow_backend": self.flow_backend,
        }
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AnalysisReport":
        return cls(
            schema_version=data["schema_version"],
            created_at=data["created_at"],
            dataset=data["dataset"],
            modes=list(data["modes"]),
            metric_table=MetricTable.from_dict(data["metric_table"]),
            mode_summary=data["mode_summary"],
            step_distribution={
                mode: {
                    "histogram": {int(k): v for k, v in block["histogram"].items()},
                    "q1": block["q1"],
                    "median": block["median"],
                    "q3": block["q3"],
                    "n_answers": block["n_answers"],
                }
                for mode, block in data["step_distribution"].items()
            },
            rms_by_steps=[
                {
                    "label": series["label"],
                    "paired_with": series["paired_with"],
                    "buckets": {
                        int(k): dict(v) for k, v in series["buckets"].items()
                    },
                }
                for series in data["rms_by_steps"]
            ],
            redundancy_reduction=data["redundancy_reduction"],
            info_flow=data["info_flow"],
            length_stats=data["length_stats"],
            subset=data["subset"],
            flow_backend=data["flow_backend"],
        )


def _load_records(source: str | Path | Sequence[RunRecord]) -> list[RunRecord]:
    if isinstance(source, (str, Path)):
        return read_run_log(source)
    return list(source)


def _rms_buckets(step_lists: Sequence[StepList]) -> dict[int, dict[str, float]]:
    by_count: dict[int, list[float]] = {}
    for steps in step_lists:
        by_count.setdefault(len(steps), []).append(rms(steps))
    return {
        count: {"mean_rms": sum(values) / len(values), "n_answers": len(values)}
        for count, values in sorted(by_count.items())
    }


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def analyze_run(
    cot_log: str | Path | Sequence[RunRecord],
    ccot_logs: Sequence[str | Path | Sequence[RunRecord]] = (),
    *,
    base_log: str | Path | Sequence[RunRecord] | None = None,
    subset: str | None = None,
    flow_backend: SimilarityBackend | None = None,
    flow_steps: Sequence[int] | None = None,
    grid: Sequence[MetricConfig] | None = None,
) -> AnalysisReport:
    """Assemble an analysis report from run logs sharing one dataset.

    ``cot_log`` supplies the unconstrained step-by-step records used as the
    reference for redundancy reductions; each entry of ``ccot_logs``
    contributes length-constrained records. The optional subset filter
    restricts the redundancy analyses to items the constrained run solved
    but the reference run did not, per constrained mode; the rest of the
    report stays unfiltered and the provenance block records the filter.
    """
    if subset not in (None, SUBSET_CCOT_TRUE_COT_FALSE):
        raise ConfigurationError(f"unknown subset filter {subset!r}")
    backend = flow_backend or LexicalBackend()

    records: list[RunRecord] = []
    records.extend(_load_records(cot_log))
    for log in ccot_logs:
        records.extend(_load_records(log))
    if base_log is not None:
        records.extend(_load_records(base_log))

    # The same log may be passed through several options; keep one record
    # per (item, mode).
    unique: dict[tuple[str, str], RunRecord] = {}
    for record in records:
        unique.setdefault((record.item_id, record.mode), record)
    records = list(unique.values())
    if not records:
        raise EmptyInputError("no records to analyze")

    datasets = {r.dataset_source for r in records}
    if len(datasets) != 1:
        raise ConfigurationError(f"logs span multiple datasets: {sorted(datasets)}")
    dataset = datasets.pop()

    by_mode: dict[str, list[RunRecord]] = {}
    for record in records:
        by_mode.setdefault(record.mode, []).append(record)
    modes = sorted(by_mode, key=mode_sort_key)

    if "cot" not in by_mode:
        raise ConfigurationError("redundancy reduction needs records for the 'cot' mode")
    ccot_modes = [m for m in modes if m.startswith("ccot-")]

    ok_by_mode = {mode: [r for r in recs if not r.failed] for mode, recs in by_mode.items()}
    steps_by_mode: dict[str, dict[str, StepList]] = {
        mode: {r.item_id: split_steps(r.answer_text) for r in recs}
        for mode, recs in ok_by_mode.items()
    }

    mode_summary = {}
    for mode in modes:
        ok = ok_by_mode[mode]
        mode_summary[mode] = {
            "n_records": len(ok),
            "n_failures": len(by_mode[mode]) - len(ok),
            "mean_word_count": _mean([r.word_count for r in ok]) if ok else None,
            "mean_latency_s": _mean([r.latency_s for r in ok]) if ok else None,
        }

    step_dist = {}
    for mode in modes:
        counts = [len(s) for s in steps_by_mode[mode].values()]
        if not counts:
            continue
        dist = step_distribution(counts)
        step_dist[mode] = {
            "histogram": dist.histogram,
            "q1": dist.q1,
            "median": dist.median,
            "q3": dist.q3,
            "n_answers": dist.n_answers,
        }

    # Redundancy series and reductions, optionally on the solved-only subset.
    cot_steps = steps_by_mode["cot"]
    cot_correct = {r.item_id for r in ok_by_mode["cot"] if r.correct}
    rms_series: list[dict[str, Any]] = []
    reductions: dict[str, dict[str, Any]] = {}
    subset_counts: dict[str, int] = {}

    if subset is None:
        for mode in modes:
            rms_series.append(
                {
                    "label": mode,
                    "paired_with": None,
                    "buckets": _rms_buckets(list(steps_by_mode[mode].values())),
                }
            )

    for mode in ccot_modes:
        mode_steps = steps_by_mode[mode]
        if subset == SUBSET_CCOT_TRUE_COT_FALSE:
            solved = {r.item_id for r in ok_by_mode[mode] if r.correct}
            ids = (solved - cot_correct) & cot_steps.keys()
            subset_counts[mode] = len(ids)
            cot_selection = [cot_steps[i] for i in ids]
            ccot_selection = [mode_steps[i] for i in ids if i in mode_steps]
            rms_series.append(
                {"label": "cot", "paired_with": mode, "buckets": _rms_buckets(cot_selection)}
            )
            rms_series.append(
                {"label": mode, "paired_with": mode, "buckets": _rms_buckets(ccot_selection)}
            )
        else:
            cot_selection = list(cot_steps.values())
            ccot_selection = list(mode_steps.values())

        entry: dict[str, Any] = {
            "n_cot_answers": len(cot_selection),
            "n_ccot_answers": len(ccot_selection),
        }
        if not cot_selection or not ccot_selection:
            entry.update({"mrr": None, "orr": None, "note": "empty selection"})
            reductions[mode] = entry
            continue

        cot_counts = [len(s) for s in cot_selection]
        dist = step_distribution(cot_counts)
        entry["cot_iqr"] = [dist.q1, dist.q3]
        cot_buckets = {
            count: block["mean_rms"]
            for count, block in _rms_buckets(cot_selection).items()
            if dist.q1 <= count <= dist.q3
        }
        ccot_buckets = {
            count: block["mean_rms"]
            for count, block in _rms_buckets(ccot_selection).items()
            if dist.q1 <= count <= dist.q3
        }
        try:
            reduction = mrr(cot_buckets, ccot_buckets)
            entry["mrr"] = reduction.value
            entry["buckets_used"] = list(reduction.buckets_used)
            entry["buckets_excluded"] = list(reduction.buckets_excluded)
        except EmptyInputError as exc:
            entry.update({"mrr": None, "note": str(exc)})
        try:
            entry["orr"] = orr(
                _mean([rms(s) for s in cot_selection]),
                _mean([rms(s) for s in ccot_selection]),
            )
        except ValueError as exc:
            entry.update({"orr": None, "note": str(exc)})
        reductions[mode] = entry

    if flow_steps is None:
        flow_steps = [step_dist["cot"]["median"]] if "cot" in step_dist else []
    flow_tables: list[dict[str, Any]] = []
    for target in flow_steps:
        cells: dict[str, list[float] | None] = {}
        matched: dict[str, int] = {}
        for mode in modes:
            table = info_flow_table(list(steps_by_mode[mode].values()), target, backend)
            cells[mode] = list(table.means) if table.means is not None else None
            matched[mode] = table.n_answers
        flow_tables.append(
            {
                "step_count": target,
                "pairs": [f"{i}=>{i + 1}" for i in range(1, target)],
                "columns": list(modes),
                "cells": cells,
                "n_answers": matched,
            }
        )

    lengths = {}
    for mode in modes:
        ok = ok_by_mode[mode]
        if not ok:
            continue
        stats = length_stats([r.word_count for r in ok])
        lengths[mode] = {
            "p5": stats.p5,
            "p25": stats.p25,
            "median": stats.median,
            "mean": stats.mean,
            "p75": stats.p75,
            "p95": stats.p95,
            "stddev": stats.stddev,
        }

    subset_block: dict[str, Any] = {"filter": subset}
    if subset is not None:
        subset_block["matched_items"] = subset_counts
        subset_block["applies_to"] = ["rms_by_steps", "redundancy_reduction"]

    return AnalysisReport(
        dataset=dataset,
        modes=list(modes),
        metric_table=score_run(records, grid=grid),
        mode_summary=mode_summary,
        step_distribution=step_dist,
        rms_by_steps=rms_series,
        redundancy_reduction=reductions,
        info_flow=flow_tables,
        length_stats=lengths,
        subset=subset_block,
        flow_backend=backend.describe(),
        created_at=datetime.now(timezone.utc).isoformat(),
    )
