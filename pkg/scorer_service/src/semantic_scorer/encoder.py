"""Deterministic token-embedding similarity scoring.

The built-in encoder assigns each token a pseudo-random unit vector seeded
from its hash and mixes in the neighbouring tokens, so the same word in a
different context gets a different embedding. Pair scores use greedy
token matching over cosine similarities (precision over the candidate,
recall over the reference, combined as F1), which keeps identical texts at
exactly 1.0 and is bit-reproducible across processes and platforms.
"""

from __future__ import annotations

import hashlib
import math
import random
from functools import lru_cache

DEFAULT_MODEL_ID = "hash-context-v1"
_DIM = 64
_CONTEXT_WEIGHT = 0.35


@lru_cache(maxsize=65536)
def _token_vector(token: str) -> tuple[float, ...]:
    seed = hashlib.sha256(token.encode("utf-8")).digest()
    rng = random.Random(seed)
    values = [rng.gauss(0.0, 1.0) for _ in range(_DIM)]
    norm = math.sqrt(sum(v * v for v in values))
    return tuple(v / norm for v in values)


def _normalize(values: list[float]) -> tuple[float, ...]:
    norm = math.sqrt(sum(v * v for v in values))
    if norm == 0.0:
        return tuple(values)
    return tuple(v / norm for v in values)


def _dot(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    return sum(x * y for x, y in zip(a, b))


class HashContextEncoder:
    """Self-contained encoder requiring no model weights."""

    def __init__(self, model_id: str = DEFAULT_MODEL_ID):
        self.model_id = model_id
        self.score_variant = "f1"
        self.rescaled = False

    def embed(self, text: str) -> list[tuple[float, ...]]:
        tokens = text.lower().split()
        vectors = [_token_vector(t) for t in tokens]
        contextual = []
        for i, vector in enumerate(vectors):
            mixed = list(vector)
            for neighbour in (i - 1, i + 1):
                if 0 <= neighbour < len(vectors):
                    for d in range(_DIM):
                        mixed[d] += _CONTEXT_WEIGHT * vectors[neighbour][d]
            contextual.append(_normalize(mixed))
        return contextual

    def score_pair(self, reference: str, candidate: str) -> float:
        ref_vectors = self.embed(reference)
        cand_vectors = self.embed(candidate)
        if not ref_vectors and not cand_vectors:
            return 1.0
        if not ref_vectors or not cand_vectors:
            return 0.0
        recall = sum(
            max(_dot(r, c) for c in cand_vectors) for r in ref_vectors
        ) / len(ref_vectors)
        precision = sum(
            max(_dot(c, r) for r in ref_vectors) for c in cand_vectors
        ) / len(cand_vectors)
        if precision + recall <= 0.0:
            return 0.0
        f1 = 2 * precision * recall / (precision + recall)
        return min(1.0, max(0.0, f1))

    def score_batch(self, pairs: list[tuple[str, str]]) -> list[float]:
        return [self.score_pair(reference, candidate) for reference, candidate in pairs]


def load_encoder(model_id: str) -> HashContextEncoder:
    """Instantiate the configured encoder.

    Only the self-contained hash encoder family is loadable here; anything
    else fails loudly so the service reports itself unhealthy rather than
    silently substituting a different model.
    """
    if model_id == DEFAULT_MODEL_ID:
        return HashContextEncoder(model_id)
    raise ValueError(f"unknown encoder model id {model_id!r}")
