import json
import logging

import numpy as np
import pytest

from spanfdr import synth
from spanfdr.calmetrics import ece, reliability_curve
from spanfdr.conformal import Scored, sweep
from spanfdr.records import parse_record, serialize_record
from spanfdr.synth import BetaSpec, CategorySpec, RegimeConfig, generate, preset

GRID = (0.01, 0.03, 0.05, 0.10, 0.15, 0.20, 0.25)


def arrays(ds):
    sc = Scored.from_dataset(ds)
    return sc.conf, sc.labels


def test_deterministic_in_seed():
    cfg = preset("overconfident-freetext", n=500, seed=7)
    assert generate(cfg) == generate(cfg)
    assert generate(cfg) != generate(preset("overconfident-freetext", n=500, seed=8))


def test_prefix_stable_under_n():
    # ids depend only on position
    a = generate(preset("underconfident-structured", n=10))
    assert [r.record_id for r in a] == [f"structured-{i:07d}" for i in range(10)]


def test_baseline_accuracy_realized():
    _, y = arrays(generate(preset("underconfident-structured", n=100_000, seed=1)))
    assert abs((1 - y.mean()) - 0.023) <= 0.003


def test_perfect_accuracy_accepts_everything():
    cfg = preset("underconfident-structured", n=2000, baseline_accuracy=1.0)
    (row,) = sweep(generate(cfg), [0.01], seed=0)[()]
    assert row.metrics.rejection_pct == 0.0 and row.metrics.precision == 1.0


def test_records_pass_validation():
    for r in generate(preset("overconfident-freetext", n=200)):
        assert parse_record(serialize_record(r)) == r
        assert 0 < r.token_probs[0] <= 1.0


def test_empty_warns(caplog):
    with caplog.at_level(logging.WARNING):
        ds = generate(preset("overconfident-freetext", n=0))
    assert len(ds) == 0 and "empty" in caplog.text


def test_unknown_preset():
    with pytest.raises(ValueError, match="unknown preset"):
        preset("nope")


def test_config_round_trip(tmp_path):
    cfg = RegimeConfig(
        n=300,
        baseline_accuracy=0.9,
        correct_conf=BetaSpec(4, 1, 0.1),
        incorrect_conf=BetaSpec(2, 2),
        categories=(
            CategorySpec("obs-dp", 0.6),
            CategorySpec("obs-u", 0.4, baseline_accuracy=0.5, incorrect_conf=BetaSpec(1, 1)),
        ),
        seed=3,
    )
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert RegimeConfig.from_file(path) == cfg
    ds = generate(cfg)
    assert {r.category for r in ds} == {"obs-dp", "obs-u"}


def test_category_override_accuracy():
    cfg = RegimeConfig(
        n=20_000, baseline_accuracy=0.95, correct_conf=BetaSpec(2, 1), incorrect_conf=BetaSpec(1, 2),
        categories=(CategorySpec("a", 0.5), CategorySpec("b", 0.5, baseline_accuracy=0.5)),
    )
    ds = generate(cfg)
    acc = {c: np.mean([r.label for r in ds if r.category == c]) for c in "ab"}
    assert acc["a"] == pytest.approx(0.95, abs=0.01)
    assert acc["b"] == pytest.approx(0.5, abs=0.02)


@pytest.mark.parametrize(
    "kw",
    [{"n": -1}, {"baseline_accuracy": 0.0}, {"categories": (CategorySpec("a", 0.3),)}],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        preset("overconfident-freetext", **kw)


def test_beta_validation():
    with pytest.raises(ValueError):
        BetaSpec(0, 1)
    with pytest.raises(ValueError):
        BetaSpec(1, 1, saturation=1.5)


# -- regime behaviour across seeds -------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_underconfident_regime(seed):
    ds = generate(preset("underconfident-structured", seed=seed))
    conf, y = arrays(ds)
    for b in reliability_curve(conf, y).bins:
        if b.count >= 100:
            assert b.gap > 0
    rows = sweep(ds, GRID, seed=seed)[()]
    assert rows[0].metrics.rejection_pct == 100.0
    for row in rows[1:4]:
        assert row.metrics.rejection_pct <= 0.5
        assert row.metrics.precision >= 0.97


@pytest.mark.parametrize("seed", range(5))
def test_overconfident_regime(seed):
    ds = generate(preset("overconfident-freetext", seed=seed))
    conf, y = arrays(ds)
    assert ece(conf, y) > 0.10
    for b in reliability_curve(conf, y).bins:
        if b.count >= 100:
            assert b.gap < 0
    rows = {r.alpha: r.metrics for r in sweep(ds, GRID, seed=seed)[()]}
    assert rows[0.05].rejection_pct == 100.0
    assert 5.0 < rows[0.10].rejection_pct < 95.0
    assert rows[0.25].rejection_pct < 5.0
    rej = [rows[a].rejection_pct for a in GRID]
    assert rej == sorted(rej, reverse=True)
