"""FDR-controlling threshold calibration on log-odds span scores.

The threshold for a group is the smallest observed calibration score ``t``
whose empirical false discovery rate

    #{label == 0 and score >= t} / max(1, #{score >= t})

is at most ``alpha``. When no observed score qualifies the group gets the
reject-all threshold ``+inf``. Records with ``score >= threshold`` are
accepted; everything else goes to human review.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .calmetrics import CalibrationSummary, summarize
from .confidence import confidences, scores as record_scores, sigmoid
from .records import Dataset, group_by

REJECT_ALL = math.inf

#: Stream tag for split permutations; keeps splits independent of any other
#: consumer (e.g. the synthetic generator) seeded with the same integer.
SPLIT_STREAM = 1
GLOBAL: tuple = ()

GROUPINGS = {"global": (), "per-category": ("domain", "category")}


def group_name(key: tuple) -> str:
    return "all" if key == GLOBAL else "/".join(key)


@dataclass(frozen=True)
class Threshold:
    value: float
    alpha: float
    group: tuple = GLOBAL

    @property
    def reject_all(self) -> bool:
        return math.isinf(self.value) and self.value > 0

    @property
    def p_min(self) -> float:
        """Equivalent confidence cutoff."""
        return sigmoid(self.value)


@dataclass(frozen=True)
class EvalMetrics:
    n_test: int
    n_accepted: int
    n_correct_accepted: int

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_test

    @property
    def rejection_pct(self) -> float:
        return 100.0 * (self.n_test - self.n_accepted) / self.n_test

    @property
    def precision(self) -> Optional[float]:
        if self.n_accepted == 0:
            return None
        return self.n_correct_accepted / self.n_accepted

    @property
    def empirical_fdr(self) -> Optional[float]:
        if self.n_accepted == 0:
            return None
        return (self.n_accepted - self.n_correct_accepted) / self.n_accepted


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    threshold: Threshold
    metrics: Optional[EvalMetrics]
    n_cal: int
    n_test: int


@dataclass(frozen=True)
class GroupResult:
    """Threshold, test metrics and calibration diagnostics for one group.

    ``threshold`` is None when the group has no calibration records
    (unsupported); ``metrics`` is None when it has no test records.
    """

    group: tuple
    alpha: float
    threshold: Optional[Threshold]
    metrics: Optional[EvalMetrics]
    summary: Optional[CalibrationSummary]
    n_cal: int
    n_test: int

    @property
    def supported(self) -> bool:
        return self.threshold is not None


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def _arrays(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError(f"scores and labels differ in shape: {s.shape} vs {y.shape}")
    if np.isnan(s).any():
        raise ValueError("scores contain NaN")
    return s, y.astype(np.int64, copy=False)


# -- splitting ---------------------------------------------------------------


def permutation(n: int, seed: int) -> np.ndarray:
    """Seeded permutation of ``range(n)``.

    Sorts indices by raw 64-bit PCG64 outputs, which are fixed by the
    bit-generator algorithm and do not depend on numpy's sampling methods.
    """
    bitgen = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(SPLIT_STREAM,)))
    keys = bitgen.random_raw(n) if n else np.empty(0, np.uint64)
    return np.argsort(keys, kind="stable")


def split(
    dataset: Dataset, seed: int, cal_fraction: float = 0.5, stratify: bool = False
) -> tuple[Dataset, Dataset]:
    """Split into calibration and test halves.

    The first ``ceil(n * cal_fraction)`` records of a seeded permutation go to
    calibration. With ``stratify`` the ceiling is applied per
    ``(domain, category)`` group, walking the same permutation.
    """
    if not 0.0 < cal_fraction < 1.0:
        raise ValueError(f"cal_fraction must lie in (0, 1), got {cal_fraction!r}")
    perm = permutation(len(dataset), seed)
    if not stratify:
        n_cal = math.ceil(len(dataset) * cal_fraction)
        cal_idx, test_idx = perm[:n_cal], perm[n_cal:]
    else:
        by_group: dict[tuple, list[int]] = {}
        for i in perm:
            rec = dataset.records[i]
            by_group.setdefault((rec.domain, rec.category), []).append(int(i))
        cal_idx, test_idx = [], []
        for idx in by_group.values():
            k = math.ceil(len(idx) * cal_fraction)
            cal_idx += idx[:k]
            test_idx += idx[k:]
    return dataset.subset(cal_idx), dataset.subset(test_idx)


# -- threshold search --------------------------------------------------------


def empirical_fdr(scores, labels, t: float) -> float:
    s, y = _arrays(scores, labels)
    accepted = s >= t
    return float(np.count_nonzero(accepted & (y == 0)) / max(1, np.count_nonzero(accepted)))


def fdr_threshold(scores, labels, alpha: float, group: tuple = GLOBAL) -> Threshold:
    """Smallest observed score whose calibration FDR is at most ``alpha``.

    The empirical FDR only changes at observed scores, so searching the
    unique calibration scores is exhaustive. FDR is not monotone in the
    threshold; the first qualifying candidate from below is returned even if
    some larger candidate violates the bound.
    """
    alpha = check_alpha(alpha)
    s, y = _arrays(scores, labels)
    if s.size == 0:
        raise ValueError("empty calibration set")
    order = np.sort(s)
    wrong = np.sort(s[y == 0])
    candidates = np.unique(order)
    n_ge = s.size - np.searchsorted(order, candidates, side="left")
    wrong_ge = wrong.size - np.searchsorted(wrong, candidates, side="left")
    fdr = wrong_ge / np.maximum(1, n_ge)
    ok = np.flatnonzero(fdr <= alpha)
    value = float(candidates[ok[0]]) if ok.size else REJECT_ALL
    return Threshold(value, alpha, group)


def apply_threshold(scores, tau: Threshold | float) -> np.ndarray:
    """Boolean accept mask, aligned with ``scores``; ties at the threshold are accepted."""
    value = tau.value if isinstance(tau, Threshold) else float(tau)
    s = np.asarray(scores, dtype=float)
    if math.isinf(value) and value > 0:
        return np.zeros(s.shape, dtype=bool)
    return s >= value


def evaluate(scores, labels, tau: Threshold | float) -> EvalMetrics:
    s, y = _arrays(scores, labels)
    if s.size == 0:
        raise ValueError("empty test set")
    accepted = apply_threshold(s, tau)
    return EvalMetrics(
        n_test=int(s.size),
        n_accepted=int(np.count_nonzero(accepted)),
        n_correct_accepted=int(np.count_nonzero(accepted & (y == 1))),
    )


# -- dataset-level drivers ---------------------------------------------------


@dataclass(frozen=True)
class Scored:
    """Scores, confidences and labels of a labeled dataset, in record order."""

    scores: np.ndarray
    conf: np.ndarray
    labels: np.ndarray

    @classmethod
    def from_dataset(cls, dataset: Dataset | Sequence) -> "Scored":
        records = list(dataset)
        missing = [r.record_id for r in records if r.label is None]
        if missing:
            raise ValueError(f"record {missing[0]!r} has no label")
        return cls(
            scores=record_scores(records),
            conf=confidences(records),
            labels=np.array([r.label for r in records], dtype=np.int64),
        )

    def __len__(self) -> int:
        return int(self.scores.size)


def _fit_eval(cal: Scored, test: Scored, alpha: float, group: tuple) -> SweepRow:
    tau = fdr_threshold(cal.scores, cal.labels, alpha, group)
    metrics = evaluate(test.scores, test.labels, tau) if len(test) else None
    return SweepRow(alpha, tau, metrics, len(cal), len(test))


def _grouped(cal: Dataset, test: Dataset, keys: tuple) -> list[tuple[tuple, Scored, Scored]]:
    cal_groups = group_by(cal, keys)
    test_groups = group_by(test, keys)
    order = list(cal_groups) + [k for k in test_groups if k not in cal_groups]
    empty = Dataset(())
    return [
        (k, Scored.from_dataset(cal_groups.get(k, empty)), Scored.from_dataset(test_groups.get(k, empty)))
        for k in sorted(order, key=group_name)
    ]


def _map(fn, items: Iterable, jobs: int) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def sweep(
    dataset: Dataset,
    alphas: Sequence[float],
    grouping: str = "global",
    seed: int = 0,
    cal_fraction: float = 0.5,
    stratify: bool = False,
    jobs: int = 1,
) -> dict[tuple, list[SweepRow]]:
    """Fit and evaluate a threshold per group for every alpha.

    One split is drawn and reused for all alphas so rows are comparable.
    Groups without calibration records are left out.
    """
    if len(alphas) == 0:
        raise ValueError("alphas must be non-empty")
    cal, test = split(dataset, seed, cal_fraction, stratify)
    return sweep_split(cal, test, alphas, grouping, jobs)


def sweep_split(
    cal: Dataset, test: Dataset, alphas: Sequence[float], grouping: str = "global", jobs: int = 1
) -> dict[tuple, list[SweepRow]]:
    """:func:`sweep` on an existing calibration/test split."""
    if len(alphas) == 0:
        raise ValueError("alphas must be non-empty")
    alphas = sorted(check_alpha(a) for a in alphas)
    groups = [g for g in _grouped(cal, test, GROUPINGS[grouping]) if len(g[1])]

    def run(item):
        key, c, t = item
        return key, [_fit_eval(c, t, a, key) for a in alphas]

    return dict(_map(run, groups, jobs))


def calibrate(
    dataset: Dataset,
    alpha: float,
    grouping: str = "per-category",
    seed: int = 0,
    cal_fraction: float = 0.5,
    num_bins: int = 10,
    stratify: bool = False,
    jobs: int = 1,
) -> dict[tuple, GroupResult]:
    """Per-group threshold, test metrics and calibration summary at one alpha.

    Calibration diagnostics (ECE, Brier) are computed on every labeled record
    of the group, calibration and test halves together.
    """
    cal, test = split(dataset, seed, cal_fraction, stratify)
    return calibrate_split(cal, test, alpha, grouping, num_bins, jobs)


def calibrate_split(
    cal: Dataset,
    test: Dataset,
    alpha: float,
    grouping: str = "per-category",
    num_bins: int = 10,
    jobs: int = 1,
) -> dict[tuple, GroupResult]:
    """:func:`calibrate` on an existing calibration/test split."""
    alpha = check_alpha(alpha)

    def run(item):
        key, c, t = item
        conf = np.concatenate([c.conf, t.conf])
        labels = np.concatenate([c.labels, t.labels])
        summary = summarize(conf, labels, num_bins) if conf.size else None
        if not len(c):
            return key, GroupResult(key, alpha, None, None, summary, 0, len(t))
        row = _fit_eval(c, t, alpha, key)
        return key, GroupResult(key, alpha, row.threshold, row.metrics, summary, len(c), len(t))

    return dict(_map(run, _grouped(cal, test, GROUPINGS[grouping]), jobs))


def per_category_calibrate(
    dataset: Dataset, alpha: float, seed: int = 0, **kwargs
) -> dict[tuple, GroupResult]:
    return calibrate(dataset, alpha, "per-category", seed, **kwargs)
