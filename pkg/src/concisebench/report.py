"""Report emission: delimited data, JSON, markdown, and rendered figures.

One file per table or figure-data block, with documented stable columns.
Score cells are written as percentages (the internal representation is a
fraction); distribution and similarity values stay raw.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from .analysis import AnalysisReport
from .runner import MetricTable

FORMATS = ("csv", "json", "markdown")

NO_DATA = "no data"


def format_cell(value: float | None, digits: int = 1) -> str:
    """Render one score cell as a percentage string."""
    if value is None:
        return NO_DATA
    return f"{value * 100:.{digits}f}"


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _metric_csv(report: AnalysisReport, out_dir: Path) -> Path:
    table = report.metric_table
    rows = [
        [row] + [format_cell(table.cells[row].get(mode), digits=4) for mode in table.columns]
        for row in table.rows
    ]
    return _write_csv(out_dir / "metric_table.csv", ["metric", *table.columns], rows)


def _mode_summary_csv(report: AnalysisReport, out_dir: Path) -> Path:
    rows = [
        [
            mode,
            block["n_records"],
            block["n_failures"],
            block["mean_word_count"],
            block["mean_latency_s"],
        ]
        for mode, block in report.mode_summary.items()
    ]
    return _write_csv(
        out_dir / "mode_summary.csv",
        ["mode", "n_records", "n_failures", "mean_word_count", "mean_latency_s"],
        rows,
    )


def _step_distribution_csv(report: AnalysisReport, out_dir: Path) -> list[Path]:
    histogram_rows = [
        [mode, steps, percent]
        for mode, block in report.step_distribution.items()
        for steps, percent in sorted(block["histogram"].items())
    ]
    quartile_rows = [
        [mode, block["q1"], block["median"], block["q3"], block["n_answers"]]
        for mode, block in report.step_distribution.items()
    ]
    return [
        _write_csv(
            out_dir / "step_distribution.csv", ["mode", "step_count", "percent"], histogram_rows
        ),
        _write_csv(
            out_dir / "step_quartiles.csv", ["mode", "q1", "median", "q3", "n_answers"], quartile_rows
        ),
    ]


def _rms_csv(report: AnalysisReport, out_dir: Path) -> Path:
    rows = [
        [
            series["label"],
            series["paired_with"] or "",
            step_count,
            block["mean_rms"],
            block["n_answers"],
        ]
        for series in report.rms_by_steps
        for step_count, block in sorted(series["buckets"].items())
    ]
    return _write_csv(
        out_dir / "rms_by_steps.csv",
        ["series", "paired_with", "step_count", "mean_rms", "n_answers"],
        rows,
    )


def _reduction_csv(report: AnalysisReport, out_dir: Path) -> Path:
    rows = []
    for mode, block in report.redundancy_reduction.items():
        rows.append(
            [
                mode,
                "" if block.get("mrr") is None else f"{block['mrr']:.4f}",
                "" if block.get("orr") is None else f"{block['orr']:.4f}",
                " ".join(str(b) for b in block.get("buckets_used", [])),
                " ".join(str(b) for b in block.get("buckets_excluded", [])),
                block.get("note", ""),
            ]
        )
    return _write_csv(
        out_dir / "redundancy_reduction.csv",
        ["ccot_mode", "mrr_percent", "orr_percent", "buckets_used", "buckets_excluded", "note"],
        rows,
    )


def _info_flow_csv(report: AnalysisReport, out_dir: Path) -> Path:
    rows = []
    for table in report.info_flow:
        for mode in table["columns"]:
            values = table["cells"][mode]
            for index, pair in enumerate(table["pairs"]):
                rows.append(
                    [
                        table["step_count"],
                        pair,
                        mode,
                        "" if values is None else f"{values[index]:.6f}",
                    ]
                )
    return _write_csv(
        out_dir / "info_flow.csv", ["step_count", "pair", "mode", "mean_score"], rows
    )


def _length_csv(report: AnalysisReport, out_dir: Path) -> Path:
    rows = [
        [mode, s["p5"], s["p25"], s["median"], s["mean"], s["p75"], s["p95"]]
        for mode, s in report.length_stats.items()
    ]
    return _write_csv(
        out_dir / "length_stats.csv",
        ["mode", "p5", "p25", "median", "mean", "p75", "p95"],
        rows,
    )


def _markdown_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = [
        "| " + " | ".join(str(h) for h in header) + " |",
        "|" + "|".join(" --- " for _ in header) + "|",
    ]
    lines.extend("| " + " | ".join(str(c) for c in row) + " |" for row in rows)
    return "\n".join(lines)


def render_markdown(report: AnalysisReport) -> str:
    """Full markdown report with the score grid and every analysis table."""
    table = report.metric_table
    parts = [
        f"# Analysis report: {report.dataset}",
        "",
        f"Generated {report.created_at}; similarity backend: {report.flow_backend}.",
        "",
        f"## Score grid (alpha = {table.alpha:g}, beta = {table.beta:g})",
        "",
        _markdown_table(
            ["Metric", *table.columns],
            [
                [row, *(format_cell(table.cells[row].get(m)) for m in table.columns)]
                for row in table.rows
            ],
        ),
        "",
        "## Mode summary",
        "",
        _markdown_table(
            ["Mode", "Records", "Failures", "Mean words", "Mean latency (s)"],
            [
                [
                    mode,
                    block["n_records"],
                    block["n_failures"],
                    "" if block["mean_word_count"] is None else f"{block['mean_word_count']:.1f}",
                    "" if block["mean_latency_s"] is None else f"{block['mean_latency_s']:.3f}",
                ]
                for mode, block in report.mode_summary.items()
            ],
        ),
    ]
    if report.redundancy_reduction:
        parts += [
            "",
            "## Redundancy reduction vs cot (%)",
            "",
            _markdown_table(
                ["Mode", "MRR", "ORR", "Buckets"],
                [
                    [
                        mode,
                        "" if block.get("mrr") is None else f"{block['mrr']:.2f}",
                        "" if block.get("orr") is None else f"{block['orr']:.2f}",
                        " ".join(str(b) for b in block.get("buckets_used", [])),
                    ]
                    for mode, block in report.redundancy_reduction.items()
                ],
            ),
        ]
    for flow in report.info_flow:
        rows = []
        for index, pair in enumerate(flow["pairs"]):
            row = [pair]
            for mode in flow["columns"]:
                values = flow["cells"][mode]
                row.append("-" if values is None else f"{values[index]:.4f}")
            rows.append(row)
        parts += [
            "",
            f"## Information flow, answers with {flow['step_count']} steps",
            "",
            _markdown_table(["Steps", *flow["columns"]], rows),
        ]
    if report.length_stats:
        parts += [
            "",
            "## Output length percentiles (words)",
            "",
            _markdown_table(
                ["Mode", "p5", "p25", "median", "mean", "p75", "p95", "stddev"],
                [
                    [
                        mode,
                        s["p5"],
                        s["p25"],
                        s["median"],
                        f"{s['mean']:.1f}",
                        s["p75"],
                        s["p95"],
                        f"{s['stddev']:.1f}",
                    ]
                    for mode, s in report.length_stats.items()
                ],
            ),
        ]
    if report.subset.get("filter"):
        parts += [
            "",
            f"Subset filter `{report.subset['filter']}` applied to the redundancy "
            f"sections; matched items per mode: {report.subset.get('matched_items', {})}.",
        ]
    return "\n".join(parts) + "\n"


def emit_report(
    report: AnalysisReport,
    out_dir: str | Path,
    formats: Sequence[str] = FORMATS,
    figures: bool = True,
) -> list[Path]:
    """Write the report to disk; returns every file written."""
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report formats: {sorted(unknown)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "json" in formats:
        path = out_dir / "report.json"
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(report.to_dict(), handle, indent=2, ensure_ascii=False)
        written.append(path)
    if "csv" in formats:
        written.append(_metric_csv(report, out_dir))
        written.append(_mode_summary_csv(report, out_dir))
        written.extend(_step_distribution_csv(report, out_dir))
        written.append(_rms_csv(report, out_dir))
        written.append(_reduction_csv(report, out_dir))
        written.append(_info_flow_csv(report, out_dir))
        written.append(_length_csv(report, out_dir))
    if "markdown" in formats:
        path = out_dir / "report.md"
        path.write_text(render_markdown(report), encoding="utf-8")
        written.append(path)
    if figures:
        from .plots import render_figures

        written.extend(render_figures(report, out_dir))
    return written
