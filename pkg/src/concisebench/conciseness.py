"""Answer-level conciseness analysis.

Splits a generated answer into sentence-level steps, then quantifies how
much those steps repeat each other (syntactic redundancy) and how much
semantic content spills from one step into the next (information flow).
Also provides the aggregate reductions and distribution statistics the
reporting layer assembles across whole runs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from difflib import SequenceMatcher
from typing import Mapping, Protocol, Sequence

from .errors import EmptyInputError

# Words whose trailing period never ends a step. Matched case-insensitively
# against the token preceding the period, so "e.g." matches via "e.g".
_ABBREVIATIONS = frozenset(
    {
        "e.g", "i.e", "etc", "vs", "cf", "al", "approx",
        "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st",
        "no", "fig", "eq", "sec", "min", "max", "dept", "inc",
    }
)

_TERMINATORS = ".?!"


@dataclass(frozen=True)
class StepList:
    """Ordered sentence-level steps of one answer."""

    steps: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, index):
        return self.steps[index]


def _word_before(text: str, index: int) -> str:
    """The whitespace-delimited token ending right before ``index``."""
    start = index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:index]


def split_steps(answer: str) -> StepList:
    """Deterministic rule-based segmentation of an answer into steps.

    Boundaries open after '.', '?' or '!' followed by a space and an
    uppercase letter or digit, except when the period belongs to a known
    abbreviation. Enumerated markers ("1.", "2.", ...) open a new step in
    front of the marker, provided the numbering runs sequentially from 1;
    that rule is what splits numbered answers whose items are not
    themselves period-terminated. Decimal and equation-internal periods
    never match the base rule because no whitespace follows them.
    """
    normalized = " ".join(answer.split())
    if not normalized:
        return StepList(())

    boundaries = {0}
    last_marker: int | None = None
    i = 0
    n = len(normalized)
    while i < n:
        ch = normalized[i]
        if ch not in _TERMINATORS:
            i += 1
            continue
        # Extend over a run of terminal punctuation ("?!", "...").
        j = i
        while j + 1 < n and normalized[j + 1] in _TERMINATORS:
            j += 1
        followed = j + 2 < n and normalized[j + 1] == " "
        word = _word_before(normalized, i)
        if ch == "." and followed and word.isdigit():
            # Candidate enumerated marker: accept only a sequential run
            # starting at 1 so sentence-final numbers are not misread.
            number = int(word)
            expected = 1 if last_marker is None else last_marker + 1
            if number == expected:
                last_marker = number
                boundaries.add(i - len(word))
                i = j + 1
                continue
        if followed and (normalized[j + 2].isupper() or normalized[j + 2].isdigit()):
            protected = ch == "." and j == i and word.rstrip(".").lower() in _ABBREVIATIONS
            if not protected:
                boundaries.add(j + 2)
        i = j + 1

    cuts = sorted(boundaries)
    pieces = [normalized[a:b].strip() for a, b in zip(cuts, cuts[1:] + [n])]
    return StepList(tuple(p for p in pieces if p))


def _normalize_for_match(text: str) -> str:
    return " ".join(text.split()).lower()


def syntactic_similarity(a: str, b: str) -> float:
    """Gestalt matching-subsequence ratio between two steps.

    Operates on lowercased, whitespace-collapsed character sequences and
    averages both evaluation orders, since the recursive longest-match
    decomposition is not perfectly symmetric. Two empty strings score 1 by
    convention; exactly one empty scores 0.
    """
    na, nb = _normalize_for_match(a), _normalize_for_match(b)
    if not na and not nb:
        return 1.0
    if not na or not nb:
        return 0.0
    forward = SequenceMatcher(None, na, nb, autojunk=False).ratio()
    backward = SequenceMatcher(None, nb, na, autojunk=False).ratio()
    return (forward + backward) / 2.0


@dataclass(frozen=True)
class RedundancySummary:
    """Mean pairwise step similarity, optionally with the full matrix."""

    rms: float
    n_steps: int
    pairwise_matrix: tuple[tuple[float, ...], ...] | None = None


def rms(steps: StepList | Sequence[str]) -> float:
    """Mean syntactic similarity over all ordered step pairs i != j.

    Answers with fewer than two steps have no repeated steps and score 0.
    """
    items = list(steps)
    n = len(items)
    if n < 2:
        return 0.0
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += syntactic_similarity(items[i], items[j])
    return total / (n * (n - 1))


def redundancy(steps: StepList | Sequence[str], with_matrix: bool = False) -> RedundancySummary:
    """Redundancy score for one answer; set ``with_matrix`` to keep pairs."""
    items = list(steps)
    n = len(items)
    if not with_matrix:
        return RedundancySummary(rms=rms(items), n_steps=n)
    matrix = [[1.0] * n for _ in range(n)]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            sim = syntactic_similarity(items[i], items[j])
            matrix[i][j] = matrix[j][i] = sim
            total += 2 * sim
    value = total / (n * (n - 1)) if n >= 2 else 0.0
    return RedundancySummary(
        rms=value, n_steps=n, pairwise_matrix=tuple(tuple(row) for row in matrix)
    )


def lexical_similarity(a: str, b: str) -> float:
    """Cosine similarity of term-frequency vectors over word unigrams.

    Deterministic fallback for semantic similarity so the analysis runs
    without any external scorer. Both empty score 1; one empty scores 0.
    """
    ta, tb = a.lower().split(), b.lower().split()
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    ca, cb = Counter(ta), Counter(tb)
    dot = sum(ca[w] * cb[w] for w in ca.keys() & cb.keys())
    # Counts are integers, so the squared norms are exact; a single sqrt of
    # their product keeps identical inputs at exactly 1.0.
    norm = math.sqrt(sum(v * v for v in ca.values()) * sum(v * v for v in cb.values()))
    return min(1.0, dot / norm)


class SimilarityBackend(Protocol):
    """Scorer for ordered (reference, candidate) step pairs."""

    def scores(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        ...

    def describe(self) -> str:
        ...


@dataclass(frozen=True)
class InfoFlowProfile:
    """Per-step forward-flow scores; the final step is fixed at 0."""

    scores: tuple[float, ...]

    def __post_init__(self):
        if self.scores and self.scores[-1] != 0.0:
            raise ValueError("final information-flow entry must be 0")

    def __len__(self) -> int:
        return len(self.scores)


def information_flow(steps: StepList | Sequence[str], backend: SimilarityBackend) -> InfoFlowProfile:
    """Similarity of each step with its successor; no successor scores 0.

    The earlier step is passed as the reference and the later step as the
    candidate. Backend failures propagate; there is no silent fallback.
    """
    items = list(steps)
    if not items:
        return InfoFlowProfile(())
    pairs = [(items[i], items[i + 1]) for i in range(len(items) - 1)]
    scores = backend.scores(pairs) if pairs else []
    return InfoFlowProfile(tuple(float(s) for s in scores) + (0.0,))


@dataclass(frozen=True)
class MrrResult:
    """Mean per-bucket redundancy reduction, in percent."""

    value: float
    buckets_used: tuple[int, ...]
    buckets_excluded: tuple[int, ...] = ()

    @property
    def has_exclusions(self) -> bool:
        return bool(self.buckets_excluded)


def mrr(
    rms_by_bucket_cot: Mapping[int, float],
    rms_by_bucket_ccot: Mapping[int, float],
) -> MrrResult:
    """Mean percentage reduction of bucketed redundancy scores.

    Buckets present in both maps are averaged; buckets whose reference
    value is 0 cannot express a relative reduction and are excluded with a
    flag. Callers restrict the bucket keys to the step-count interquartile
    range before calling.
    """
    shared = sorted(rms_by_bucket_cot.keys() & rms_by_bucket_ccot.keys())
    if not shared:
        raise EmptyInputError("no shared step-count buckets")
    used, excluded, reductions = [], [], []
    for bucket in shared:
        reference = rms_by_bucket_cot[bucket]
        if reference <= 0:
            excluded.append(bucket)
            continue
        used.append(bucket)
        reductions.append((reference - rms_by_bucket_ccot[bucket]) / reference * 100.0)
    if not used:
        raise EmptyInputError("all shared buckets have zero reference redundancy")
    return MrrResult(
        value=sum(reductions) / len(reductions),
        buckets_used=tuple(used),
        buckets_excluded=tuple(excluded),
    )


def orr(cot_rms_overall: float, ccot_rms_overall: float) -> float:
    """Overall percentage reduction of redundancy between two runs."""
    if cot_rms_overall <= 0:
        raise ValueError(f"reference redundancy must be > 0, got {cot_rms_overall!r}")
    return (cot_rms_overall - ccot_rms_overall) / cot_rms_overall * 100.0


def nearest_rank(values: Sequence[float], fraction: float) -> float:
    """Nearest-rank quantile on sorted data: the ceil(fraction*n)-th value."""
    if not values:
        raise EmptyInputError("quantile of an empty sequence")
    ordered = sorted(values)
    rank = max(1, math.ceil(fraction * len(ordered)))
    return ordered[rank - 1]


@dataclass(frozen=True)
class StepDistribution:
    """Percentage histogram of step counts with nearest-rank quartiles."""

    histogram: dict[int, float]
    q1: int
    median: int
    q3: int
    n_answers: int


def step_distribution(step_counts: Sequence[int]) -> StepDistribution:
    """Distribution of reasoning-step counts across a run's answers."""
    if not step_counts:
        raise EmptyInputError("step distribution of an empty run")
    counts = Counter(step_counts)
    total = len(step_counts)
    histogram = {k: counts[k] / total * 100.0 for k in sorted(counts)}
    return StepDistribution(
        histogram=histogram,
        q1=int(nearest_rank(step_counts, 0.25)),
        median=int(nearest_rank(step_counts, 0.50)),
        q3=int(nearest_rank(step_counts, 0.75)),
        n_answers=total,
    )


@dataclass(frozen=True)
class LengthStats:
    """Percentile summary of answer lengths in words."""

    p5: float
    p25: float
    median: float
    mean: float
    p75: float
    p95: float
    stddev: float


def length_stats(word_counts: Sequence[int]) -> LengthStats:
    """Summary statistics of output lengths; stddev is the population value."""
    if not word_counts:
        raise EmptyInputError("length statistics of an empty run")
    n = len(word_counts)
    mean = sum(word_counts) / n
    variance = sum((x - mean) ** 2 for x in word_counts) / n
    return LengthStats(
        p5=nearest_rank(word_counts, 0.05),
        p25=nearest_rank(word_counts, 0.25),
        median=nearest_rank(word_counts, 0.50),
        mean=mean,
        p75=nearest_rank(word_counts, 0.75),
        p95=nearest_rank(word_counts, 0.95),
        stddev=math.sqrt(variance),
    )


@dataclass(frozen=True)
class InfoFlowTable:
    """Mean consecutive-step flow over answers with one fixed step count.

    ``means`` is None when no answer matches the requested step count; the
    report renders that as an explicit "no data" marker.
    """

    step_count: int
    n_answers: int
    means: tuple[float, ...] | None


def info_flow_table(
    answers: Sequence[StepList],
    target_n: int,
    backend: SimilarityBackend,
) -> InfoFlowTable:
    """Average information flow per consecutive-pair index.

    Only answers with exactly ``target_n`` steps contribute; the table has
    one mean per pair (target_n - 1 entries).
    """
    if target_n < 2:
        raise ValueError(f"step count for a flow table must be >= 2, got {target_n!r}")
    selected = [a for a in answers if len(a) == target_n]
    if not selected:
        return InfoFlowTable(step_count=target_n, n_answers=0, means=None)
    sums = [0.0] * (target_n - 1)
    for answer in selected:
        profile = information_flow(answer, backend)
        for i in range(target_n - 1):
            sums[i] += profile.scores[i]
    means = tuple(s / len(selected) for s in sums)
    return InfoFlowTable(step_count=target_n, n_answers=len(selected), means=means)
