"""Benchmark harness and metrics for the correctness/conciseness/latency
trade-off of LLM answers."""

from .analysis import AnalysisReport, analyze_run
from .backends import LexicalBackend, RemoteSimilarityBackend
from .conciseness import (
    InfoFlowProfile,
    LengthStats,
    MrrResult,
    RedundancySummary,
    StepDistribution,
    StepList,
    info_flow_table,
    information_flow,
    length_stats,
    lexical_similarity,
    mrr,
    orr,
    redundancy,
    rms,
    split_steps,
    step_distribution,
    syntactic_similarity,
)
from .datasets import QAItem, load_dataset, validate_dataset
from .extraction import ExtractedAnswer, answers_equal, extract_answer, parse_ground_truth
from .gateway import (
    GenerationRequest,
    GenerationResult,
    HTTPBackend,
    MockBackend,
    MockFixture,
    build_backend,
    generate,
    mock_fixture_load,
)
from .metrics import (
    UNBOUNDED,
    MetricConfig,
    ScoredRecord,
    accuracy,
    cca,
    hca,
    penalty_hard,
    penalty_soft,
    penalty_var,
    sca,
    word_count,
)
from .prompts import PromptSpec, build_prompt
from .report import emit_report, render_markdown
from .runner import (
    MetricTable,
    RunConfig,
    RunRecord,
    RunResult,
    execute_run,
    read_run_log,
    score_run,
)

__version__ = "0.1.0"
