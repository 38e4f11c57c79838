"""Figure rendering for analysis reports.

Renders the figure-data blocks of a report to PNG files next to the
delimited output: latency/accuracy per mode, step-count distributions,
redundancy by step count with the interquartile band shaded, and the
output-length percentile boxes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analysis import AnalysisReport

_FIGSIZE = (7.0, 4.0)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_mode_summary(report: AnalysisReport, path: Path) -> Path | None:
    """Mean latency bars with the unbounded-budget accuracy line overlaid."""
    modes = [m for m in report.modes if report.mode_summary[m]["mean_latency_s"] is not None]
    if not modes:
        return None
    latency = [report.mode_summary[m]["mean_latency_s"] for m in modes]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.bar(modes, latency, color="#b8cbe4", label="mean latency (s)")
    ax.set_ylabel("mean latency (s)")
    ax.set_xlabel("prompt mode")
    accuracy_row = next((r for r in report.metric_table.rows if r.startswith("H-∞")), None)
    if accuracy_row:
        cells = report.metric_table.cells[accuracy_row]
        points = [(m, cells.get(m)) for m in modes if cells.get(m) is not None]
        if points:
            twin = ax.twinx()
            twin.plot(
                [p[0] for p in points],
                [p[1] * 100 for p in points],
                color="#c0392b",
                marker="o",
                label="accuracy (%)",
            )
            twin.set_ylabel("accuracy (%)")
    ax.set_title(f"Latency and accuracy per mode ({report.dataset})")
    return _save(fig, path)


def plot_step_distribution(report: AnalysisReport, path: Path) -> Path | None:
    """Percentage of answers per reasoning-step count, one line per mode."""
    if not report.step_distribution:
        return None
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for mode in report.modes:
        block = report.step_distribution.get(mode)
        if not block:
            continue
        xs = sorted(block["histogram"])
        ax.plot(xs, [block["histogram"][x] for x in xs], marker="o", label=mode)
    ax.set_xlabel("reasoning steps")
    ax.set_ylabel("% of answers")
    ax.set_title(f"Step-count distribution ({report.dataset})")
    ax.legend()
    return _save(fig, path)


def plot_rms_by_steps(report: AnalysisReport, path: Path) -> Path | None:
    """Mean redundancy per step count, with the reference IQR shaded."""
    if not report.rms_by_steps:
        return None
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for series in report.rms_by_steps:
        buckets = series["buckets"]
        if not buckets:
            continue
        xs = sorted(buckets)
        name = series["label"]
        if series["paired_with"]:
            name = f"{name} (vs {series['paired_with']})"
        ax.plot(xs, [buckets[x]["mean_rms"] for x in xs], marker=".", label=name)
    cot_block = report.step_distribution.get("cot")
    if cot_block:
        ax.axvspan(cot_block["q1"], cot_block["q3"], color="grey", alpha=0.2, label="cot IQR")
    ax.set_xlabel("reasoning steps")
    ax.set_ylabel("mean redundancy")
    ax.set_title(f"Redundancy by step count ({report.dataset})")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_length_distribution(report: AnalysisReport, path: Path) -> Path | None:
    """Percentile boxes of output length, with each word budget marked."""
    if not report.length_stats:
        return None
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    modes = [m for m in report.modes if m in report.length_stats]
    for index, mode in enumerate(modes):
        stats = report.length_stats[mode]
        ax.vlines(index, stats["p5"], stats["p95"], color="#555", linewidth=1)
        box = plt.Rectangle(
            (index - 0.25, stats["p25"]),
            0.5,
            max(stats["p75"] - stats["p25"], 0.01),
            facecolor="#b8cbe4",
            edgecolor="#333",
        )
        ax.add_patch(box)
        ax.hlines(stats["median"], index - 0.25, index + 0.25, color="#c0392b")
        ax.plot([index], [stats["mean"]], marker="o", color="#27ae60")
        if mode.startswith("ccot-"):
            limit = int(mode.split("-", 1)[1])
            ax.hlines(limit, index - 0.35, index + 0.35, color="#2980b9", linestyles="dashed")
    ax.set_xticks(range(len(modes)))
    ax.set_xticklabels(modes, rotation=30)
    ax.set_ylabel("output length (words)")
    ax.set_title(f"Output-length percentiles ({report.dataset})")
    return _save(fig, path)


def render_figures(report: AnalysisReport, out_dir: str | Path) -> list[Path]:
    """Render every figure whose data block is present; returns the files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    produced = [
        plot_mode_summary(report, out_dir / "mode_summary.png"),
        plot_step_distribution(report, out_dir / "step_distribution.png"),
        plot_rms_by_steps(report, out_dir / "rms_by_steps.png"),
        plot_length_distribution(report, out_dir / "length_distribution.png"),
    ]
    return [p for p in produced if p is not None]
