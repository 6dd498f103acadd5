"""Span confidence and the log-odds score used for thresholding."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

#: Clamp margin keeping span confidence strictly inside (0, 1).
EPS = 1e-12


def span_confidence(token_probs: Sequence[float]) -> float:
    """Geometric mean of token probabilities, clamped to ``[EPS, 1 - EPS]``.

    Computed as ``exp(mean(log p))`` so long spans do not underflow.
    """
    if len(token_probs) == 0:
        raise ValueError("token_probs empty")
    total = 0.0
    for p in token_probs:
        if not p > 0.0:
            raise ValueError(f"token probability must be positive, got {p!r}")
        total += math.log(p)
    value = math.exp(total / len(token_probs))
    return min(max(value, EPS), 1.0 - EPS)


def logit_score(conf: float) -> float:
    """Log-odds ``log(p / (1 - p))``; higher means more confident."""
    if not 0.0 < conf < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {conf!r}")
    return math.log(conf) - math.log1p(-conf)


def sigmoid(score: float) -> float:
    """Inverse of :func:`logit_score`; maps ``+inf`` to 1 and ``-inf`` to 0."""
    if score >= 0:
        return 1.0 / (1.0 + math.exp(-score))
    z = math.exp(score)
    return z / (1.0 + z)


def record_score(token_probs: Sequence[float]) -> float:
    return logit_score(span_confidence(token_probs))


def confidences(records: Iterable) -> np.ndarray:
    return np.array([span_confidence(r.token_probs) for r in records], dtype=float)


def scores(records: Iterable) -> np.ndarray:
    return np.array([record_score(r.token_probs) for r in records], dtype=float)
