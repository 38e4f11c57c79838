"""Command-line interface."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .analysis import SUBSET_CCOT_TRUE_COT_FALSE, AnalysisReport, analyze_run
from .backends import build_backend as build_similarity_backend
from .datasets import SOURCES, validate_dataset
from .errors import ConcisebenchError
from .metrics import UNBOUNDED, MetricConfig
from .report import FORMATS, emit_report, format_cell, render_markdown
from .runner import RunConfig, execute_run, score_run


def _parse_k(value: str) -> float:
    text = value.strip().lower()
    if text in ("inf", "infinity", "∞", "unbounded", "none"):
        return UNBOUNDED
    return float(int(text))


@click.group()
def main():
    """Benchmark LLM answers for correctness, conciseness, and cost."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--endpoint", default=None, help="Override the configured endpoint URL.")
@click.option("--out-dir", default=None, type=click.Path(), help="Override the output directory.")
def run(config_path: str, endpoint: str | None, out_dir: str | None):
    """Execute a run described by a JSON config file."""
    from dataclasses import replace

    config = RunConfig.from_file(config_path)
    if endpoint:
        config = replace(config, endpoint=endpoint)
    if out_dir:
        config = replace(config, output_dir=out_dir)
    result = execute_run(config)
    click.echo(f"log: {result.log_path}")
    click.echo(
        f"written {result.records_written} records "
        f"(skipped {result.records_skipped} already logged, "
        f"{result.cache_hits} cache hits, {result.gateway_calls} gateway calls, "
        f"{result.failures} failures)"
    )


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--k", "ks", multiple=True, help="Word budget; repeatable; 'inf' for unbounded.")
@click.option("--alpha", default=10.0, show_default=True, type=float)
@click.option("--beta", default=40.0, show_default=True, type=float)
@click.option("--failures-as-wrong", is_flag=True, help="Count failed generations as incorrect.")
@click.option("--format", "fmt", default="markdown", type=click.Choice(["markdown", "json"]), show_default=True)
def score(log_path: str, ks: tuple[str, ...], alpha: float, beta: float, failures_as_wrong: bool, fmt: str):
    """Score a run log across the metric grid."""
    grid = None
    if ks:
        grid = [MetricConfig(k=_parse_k(k), alpha=alpha, beta=beta) for k in ks]
    table = score_run(log_path, grid=grid, failures_as_wrong=failures_as_wrong)
    if fmt == "json":
        click.echo(json.dumps(table.to_dict(), indent=2, ensure_ascii=False))
        return
    header = "| Metric | " + " | ".join(table.columns) + " |"
    click.echo(header)
    click.echo("|" + "|".join(" --- " for _ in range(len(table.columns) + 1)) + "|")
    for row in table.rows:
        cells = " | ".join(format_cell(table.cells[row].get(mode)) for mode in table.columns)
        click.echo(f"| {row} | {cells} |")


@main.command()
@click.option("--cot-log", required=True, type=click.Path(exists=True))
@click.option("--ccot-log", "ccot_logs", multiple=True, type=click.Path(exists=True))
@click.option("--base-log", default=None, type=click.Path(exists=True))
@click.option("--subset", default=None, type=click.Choice([SUBSET_CCOT_TRUE_COT_FALSE]))
@click.option("--flow-backend", default="lexical", type=click.Choice(["lexical", "remote"]), show_default=True)
@click.option("--flow-endpoint", default=None, envvar="CONCISEBENCH_FLOW_ENDPOINT", help="Scorer service URL for the remote backend.")
@click.option("--flow-steps", multiple=True, type=int, help="Step counts for flow tables; repeatable.")
@click.option("--out", "out_path", default="report.json", show_default=True, type=click.Path())
def analyze(cot_log, ccot_logs, base_log, subset, flow_backend, flow_endpoint, flow_steps, out_path):
    """Analyze run logs and write the aggregated report as JSON."""
    backend = build_similarity_backend(flow_backend, endpoint=flow_endpoint)
    report = analyze_run(
        cot_log,
        ccot_logs,
        base_log=base_log,
        subset=subset,
        flow_backend=backend,
        flow_steps=list(flow_steps) or None,
    )
    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, indent=2, ensure_ascii=False)
    click.echo(f"report: {path}")


@main.command()
@click.option("--report", "report_path", required=True, type=click.Path(exists=True))
@click.option("--format", "formats", multiple=True, type=click.Choice(FORMATS), help="Repeatable; defaults to all formats.")
@click.option("--out-dir", default="report", show_default=True, type=click.Path())
@click.option("--figures/--no-figures", default=True, show_default=True)
def report(report_path: str, formats: tuple[str, ...], out_dir: str, figures: bool):
    """Render a JSON report into delimited files, markdown, and figures."""
    with open(report_path, encoding="utf-8") as handle:
        parsed = AnalysisReport.from_dict(json.load(handle))
    written = emit_report(parsed, out_dir, formats=formats or FORMATS, figures=figures)
    for path in written:
        click.echo(str(path))


@main.group()
def datasets():
    """Dataset utilities."""


@datasets.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--source", required=True, type=click.Choice(SOURCES))
def validate(path: str, source: str):
    """Report the item count and parse errors of a dataset file."""
    count, errors = validate_dataset(path, source)
    click.echo(f"items: {count}")
    click.echo(f"errors: {len(errors)}")
    for message in errors:
        click.echo(f"  {message}")
    if errors:
        sys.exit(1)


def cli_entry():
    try:
        main(standalone_mode=True)
    except ConcisebenchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    cli_entry()
