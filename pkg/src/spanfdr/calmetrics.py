"""Reliability curves, expected calibration error and Brier score.

All functions take parallel arrays of span confidences and binary labels.
Binning is equal-width on [0, 1]: bin ``k`` holds ``k/B <= p < (k+1)/B`` and
the last bin is closed at 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .confidence import confidences

DEFAULT_BINS = 10


@dataclass(frozen=True)
class ReliabilityBin:
    lower: float
    upper: float
    mean_confidence: float
    empirical_accuracy: float
    count: int

    @property
    def gap(self) -> float:
        """Accuracy minus confidence; positive means underconfident."""
        return self.empirical_accuracy - self.mean_confidence


@dataclass(frozen=True)
class ReliabilityCurve:
    bins: tuple[ReliabilityBin, ...]
    num_bins: int

    @property
    def n(self) -> int:
        return sum(b.count for b in self.bins)


@dataclass(frozen=True)
class CalibrationSummary:
    ece: float
    brier: float
    n: int


def _check(conf, labels) -> tuple[np.ndarray, np.ndarray]:
    conf = np.asarray(conf, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if conf.shape != labels.shape or conf.ndim != 1:
        raise ValueError("confidences and labels must be 1-d arrays of equal length")
    if conf.size and (conf.min() < 0.0 or conf.max() > 1.0):
        raise ValueError("confidences must lie in [0, 1]")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    return conf, labels


def bin_index(conf: np.ndarray, num_bins: int) -> np.ndarray:
    idx = np.floor(np.asarray(conf, dtype=float) * num_bins).astype(np.int64)
    return np.clip(idx, 0, num_bins - 1)


def reliability_curve(conf, labels, num_bins: int = DEFAULT_BINS) -> ReliabilityCurve:
    """Per-bin mean confidence and empirical accuracy; empty bins are omitted."""
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    conf, labels = _check(conf, labels)
    idx = bin_index(conf, num_bins)
    counts = np.bincount(idx, minlength=num_bins)
    conf_sum = np.bincount(idx, weights=conf, minlength=num_bins)
    hit_sum = np.bincount(idx, weights=labels, minlength=num_bins)
    bins = []
    for k in map(int, np.flatnonzero(counts)):
        c = int(counts[k])
        bins.append(
            ReliabilityBin(
                lower=k / num_bins,
                upper=(k + 1) / num_bins,
                mean_confidence=float(conf_sum[k] / c),
                empirical_accuracy=float(hit_sum[k] / c),
                count=c,
            )
        )
    return ReliabilityCurve(tuple(bins), num_bins)


def ece(conf, labels, num_bins: int = DEFAULT_BINS) -> float:
    """Count-weighted mean of ``|accuracy - confidence|`` over populated bins."""
    curve = reliability_curve(conf, labels, num_bins)
    n = curve.n
    if n == 0:
        raise ValueError("ECE undefined for an empty dataset")
    return float(sum(b.count * abs(b.gap) for b in curve.bins) / n)


def brier(conf, labels) -> float:
    conf, labels = _check(conf, labels)
    if conf.size == 0:
        raise ValueError("Brier score undefined for an empty dataset")
    return float(np.mean((conf - labels) ** 2))


def summarize(conf, labels, num_bins: int = DEFAULT_BINS) -> CalibrationSummary:
    return CalibrationSummary(ece(conf, labels, num_bins), brier(conf, labels), len(conf))


def record_arrays(records: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Confidences and labels for labeled records; raises on the first unlabeled one."""
    labels = [r.label for r in records]
    missing = [r.record_id for r in records if r.label is None]
    if missing:
        raise ValueError(f"record {missing[0]!r} has no label")
    return confidences(records), np.asarray(labels, dtype=float)


CURVE_COLUMNS = ("bin_lower", "bin_upper", "mean_confidence", "empirical_accuracy", "count")


def write_curve_csv(curve: ReliabilityCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        for b in curve.bins:
            writer.writerow(
                [repr(b.lower), repr(b.upper), repr(b.mean_confidence), repr(b.empirical_accuracy), b.count]
            )
