import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_brier, brute_ece
from spanfdr import calmetrics
from spanfdr.calmetrics import brier, ece, reliability_curve


def test_single_calibrated_bin():
    curve = reliability_curve([0.75] * 4, [1, 1, 1, 0], 10)
    assert len(curve.bins) == 1
    (b,) = curve.bins
    assert (b.lower, b.upper) == (0.7, 0.8)
    assert b.mean_confidence == pytest.approx(0.75)
    assert b.empirical_accuracy == pytest.approx(0.75)
    assert ece([0.75] * 4, [1, 1, 1, 0]) == pytest.approx(0.0, abs=1e-15)


def test_two_bins_bin_assignment():
    curve = reliability_curve([0.05, 0.95], [0, 1], 2)
    assert [b.count for b in curve.bins] == [1, 1]
    assert [(b.lower, b.upper) for b in curve.bins] == [(0.0, 0.5), (0.5, 1.0)]


def test_top_bin_accuracy():
    curve = reliability_curve([0.95] * 4, [1, 1, 1, 0], 10)
    (b,) = curve.bins
    assert b.empirical_accuracy == 0.75
    assert b.mean_confidence == pytest.approx(0.95)
    assert ece([0.95] * 4, [1, 1, 1, 0]) == pytest.approx(0.20, abs=1e-12)


def test_ece_weighted_sum():
    # two bins of weight 0.5: |0.5 - 0.4| = 0.1 and |0.5 - 0.8| = 0.3
    conf = [0.4] * 10 + [0.8] * 10
    labels = [1] * 5 + [0] * 5 + [1] * 5 + [0] * 5
    assert ece(conf, labels) == pytest.approx(0.2, abs=1e-12)


def test_last_bin_closed_at_one():
    curve = reliability_curve([1.0, 0.95], [1, 1], 10)
    assert [b.count for b in curve.bins] == [2]
    assert curve.bins[0].upper == 1.0


def test_brier_values():
    assert brier([1 - 1e-12], [1]) == pytest.approx(0.0, abs=1e-20)
    assert brier([0.5], [0]) == 0.25
    assert brier([0.9, 0.8], [1, 0]) == pytest.approx(0.325, abs=1e-15)


def test_errors():
    with pytest.raises(ValueError):
        ece([], [])
    with pytest.raises(ValueError):
        brier([], [])
    with pytest.raises(ValueError):
        reliability_curve([0.5], [1], 0)
    with pytest.raises(ValueError):
        ece([0.5], [2])


def test_unlabeled_record_named():
    from spanfdr.records import ExtractionRecord

    recs = [ExtractionRecord("ok", "d", "x", "c", "s", (0.9,), label=1),
            ExtractionRecord("nolabel", "d", "x", "c", "s", (0.9,))]
    with pytest.raises(ValueError, match="nolabel"):
        calmetrics.record_arrays(recs)


def test_curve_csv(tmp_path):
    path = tmp_path / "curve.csv"
    calmetrics.write_curve_csv(reliability_curve([0.05, 0.95], [0, 1], 2), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "bin_lower,bin_upper,mean_confidence,empirical_accuracy,count"
    assert lines[1] == "0.0,0.5,0.05,0.0,1"


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 500), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_matches_oracle(n, bins, seed):
    rng = np.random.default_rng(seed)
    conf = rng.random(n)
    labels = (rng.random(n) < conf ** 0.5).astype(int)
    assert ece(conf, labels, bins) == pytest.approx(brute_ece(list(conf), list(labels), bins), abs=1e-12)
    assert brier(conf, labels) == pytest.approx(brute_brier(list(conf), list(labels)), abs=1e-12)
    assert 0.0 <= ece(conf, labels, bins) <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 300), st.integers(0, 2**32 - 1))
def test_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    conf = rng.random(n)
    labels = rng.integers(0, 2, n)
    perm = rng.permutation(n)
    assert ece(conf[perm], labels[perm]) == pytest.approx(ece(conf, labels), abs=1e-12)
    assert brier(conf[perm], labels[perm]) == pytest.approx(brier(conf, labels), abs=1e-12)


def test_direction_detection():
    rng = np.random.default_rng(3)
    conf = rng.uniform(0.3, 0.7, 5000)
    under = (rng.random(5000) < np.minimum(conf + 0.2, 1)).astype(int)
    over = (rng.random(5000) < conf - 0.2).astype(int)
    assert all(b.gap > 0 for b in reliability_curve(conf, under).bins)
    assert all(b.gap < 0 for b in reliability_curve(conf, over).bins)
