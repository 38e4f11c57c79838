"""Correct-conciseness metrics over scored generation records.

Plain accuracy is reweighted by answer length: ``hca`` keeps only correct
answers within a word budget ``k``, ``sca`` softens the cutoff with an
exponential penalty of tolerance ``alpha``, and ``cca`` additionally
penalizes runs whose output lengths spread more than a tolerance ``beta``.
All scores are fractions in [0, 1]; reports display them as percentages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import pstdev
from typing import Sequence

from .errors import EmptyInputError

UNBOUNDED = math.inf


@dataclass(frozen=True)
class MetricConfig:
    """Parameter triple of the conciseness metrics.

    ``k`` is the word budget (``UNBOUNDED`` lifts it), ``alpha`` the soft
    decay tolerance in words, ``beta`` the length-variability tolerance.
    """

    k: float = UNBOUNDED
    alpha: float = 10.0
    beta: float = 40.0

    def __post_init__(self):
        if self.k is None:
            object.__setattr__(self, "k", UNBOUNDED)
        k = self.k
        if k != UNBOUNDED and (k < 1 or k != int(k)):
            raise ValueError(f"k must be a positive integer or unbounded, got {k!r}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta!r}")


@dataclass(frozen=True)
class ScoredRecord:
    """One graded answer: correctness flag plus word count."""

    correct: bool
    word_count: int

    def __post_init__(self):
        if self.word_count < 0:
            raise ValueError(f"word_count must be >= 0, got {self.word_count!r}")


def word_count(text: str) -> int:
    """Number of maximal non-whitespace runs in ``text``; empty counts 0."""
    return len(text.split())


def _require_records(records: Sequence[ScoredRecord]) -> None:
    if not records:
        raise EmptyInputError("metric requested over an empty record set")


def accuracy(records: Sequence[ScoredRecord]) -> float:
    """Fraction of records whose answer matched the ground truth."""
    _require_records(records)
    return sum(1 for r in records if r.correct) / len(records)


def penalty_hard(n: int, k: float) -> float:
    """1 if the answer fits the budget (n <= k), else 0."""
    return 1.0 if n <= k else 0.0


def penalty_soft(n: int, k: float, alpha: float) -> float:
    """Exponential overshoot penalty: 1 for n <= k, exp(-(n - k)/alpha) above.

    ``alpha = 0`` is the hard-cutoff limit and is handled explicitly.
    """
    if alpha == 0:
        return penalty_hard(n, k)
    if n <= k:
        return 1.0
    return math.exp(-(n - k) / alpha)


def penalty_var(sigma: float, beta: float) -> float:
    """Length-spread penalty: 1 for sigma <= beta, exponential decay above."""
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta!r}")
    if sigma <= beta:
        return 1.0
    return math.exp(-(sigma - beta) / beta)


def length_spread(records: Sequence[ScoredRecord]) -> float:
    """Population standard deviation of word counts over all records."""
    _require_records(records)
    return pstdev(r.word_count for r in records)


def hca(records: Sequence[ScoredRecord], k: float) -> float:
    """Hard-budget concise accuracy: correct answers no longer than ``k``."""
    _require_records(records)
    total = sum(penalty_hard(r.word_count, k) for r in records if r.correct)
    return total / len(records)


def sca(records: Sequence[ScoredRecord], k: float, alpha: float) -> float:
    """Soft-budget concise accuracy; reduces to ``hca`` when alpha = 0."""
    _require_records(records)
    total = sum(penalty_soft(r.word_count, k, alpha) for r in records if r.correct)
    return total / len(records)


def cca(records: Sequence[ScoredRecord], k: float, alpha: float, beta: float) -> float:
    """Consistency-weighted concise accuracy.

    ``sca`` multiplied by the spread penalty on the population standard
    deviation of all word counts, correct and incorrect alike.
    """
    return sca(records, k, alpha) * penalty_var(length_spread(records), beta)


def score(records: Sequence[ScoredRecord], config: MetricConfig) -> dict[str, float]:
    """Evaluate all metrics for one parameter triple."""
    return {
        "accuracy": accuracy(records),
        "hca": hca(records, config.k),
        "sca": sca(records, config.k, config.alpha),
        "cca": cca(records, config.k, config.alpha, config.beta),
    }
