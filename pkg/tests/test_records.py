import json
import logging

import pytest
from hypothesis import given, strategies as st

from spanfdr.records import (
    Dataset,
    DatasetError,
    ExtractionRecord,
    RecordError,
    group_by,
    load_dataset,
    parse_record,
    resolve_labels,
    serialize_record,
)


def line(**kw):
    base = {
        "record_id": "r1",
        "doc_id": "d1",
        "domain": "fda",
        "category": "pregnancy",
        "span_text": "folic acid",
        "token_probs": [0.9, 0.9],
    }
    base.update(kw)
    return json.dumps(base)


def rec(rid, category="a", domain="fda", label=1):
    return ExtractionRecord(rid, "d", domain, category, "x", (0.9,), label=label)


def test_parse_record_fields():
    r = parse_record(line(fact_score=3))
    assert r.num_tokens == 2
    assert r.fact_score == 3
    assert r.token_probs == (0.9, 0.9)
    assert r.resolved_label() == 1


@pytest.mark.parametrize(
    "kw, msg",
    [
        ({"token_probs": []}, "token_probs empty"),
        ({"fact_score": 4}, "fact_score out of range"),
        ({"token_probs": [0.5, 1.2]}, "token_probs"),
        ({"token_probs": [0.0]}, "token_probs"),
        ({"label": 2}, "label"),
        ({"gold_match": "yes"}, "gold_match"),
    ],
)
def test_parse_record_validation(kw, msg):
    with pytest.raises(RecordError, match=msg) as info:
        parse_record(line(**kw), line_no=7)
    assert info.value.line_no == 7
    assert "line 7" in str(info.value)


def test_malformed_line_reports_line_number():
    with pytest.raises(RecordError, match="line 3: malformed JSON"):
        parse_record("{not json", line_no=3)


def test_probability_one_is_accepted():
    assert parse_record(line(token_probs=[1.0])).token_probs == (1.0,)


def test_unknown_keys_warn(caplog):
    with caplog.at_level(logging.WARNING):
        parse_record(line(extra="x"))
    assert "extra" in caplog.text


def test_load_dataset(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text("\n".join(line(record_id=f"r{i}") for i in range(3)) + "\n")
    ds = load_dataset(p)
    assert [r.record_id for r in ds] == ["r0", "r1", "r2"]


def test_load_dataset_duplicate(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text(line(record_id="r1") + "\n" + line(record_id="r1") + "\n")
    with pytest.raises(DatasetError, match="'r1'") as info:
        load_dataset(p)
    assert info.value.duplicates == ["r1"]


def test_load_dataset_aggregates_line_errors(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text("\n".join([line(record_id="a"), "{", line(record_id="b", fact_score=9), line(record_id="c")]))
    with pytest.raises(DatasetError) as info:
        load_dataset(p)
    assert [e.line_no for e in info.value.errors] == [2, 3]


def test_empty_file_warns(tmp_path, caplog):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    with caplog.at_level(logging.WARNING):
        ds = load_dataset(p)
    assert len(ds) == 0
    assert "no records" in caplog.text


def test_group_by_category():
    ds = Dataset(tuple(rec(f"r{i}", c) for i, c in enumerate("aabb")))
    groups = group_by(ds, ("category",))
    assert {k: len(v) for k, v in groups.items()} == {("a",): 2, ("b",): 2}


def test_group_by_nothing_is_global():
    ds = Dataset(tuple(rec(f"r{i}", c) for i, c in enumerate("aabb")))
    groups = group_by(ds, ())
    assert list(groups) == [()]
    assert len(groups[()]) == 4


def test_group_by_domain_and_category():
    recs = [rec("1", "obs-u", "radgraph"), rec("2", "pregnancy", "fda"), rec("3", "obs-u", "radgraph")]
    groups = group_by(Dataset(tuple(recs)), ("domain", "category"))
    assert set(groups) == {("radgraph", "obs-u"), ("fda", "pregnancy")}
    assert [r.record_id for r in groups[("radgraph", "obs-u")]] == ["1", "3"]


def test_resolve_labels_precedence_and_drop():
    recs = [
        ExtractionRecord("a", "d", "fda", "c", "x", (0.9,), fact_score=2),
        ExtractionRecord("b", "d", "fda", "c", "x", (0.9,), fact_score=3),
        ExtractionRecord("c", "d", "rg", "c", "x", (0.9,), gold_match=True, fact_score=0),
        ExtractionRecord("d", "d", "rg", "c", "x", (0.9,)),
    ]
    ds, dropped = resolve_labels(Dataset(tuple(recs)))
    assert dropped == 1
    assert [r.label for r in ds] == [0, 1, 1]


records_st = st.builds(
    ExtractionRecord,
    record_id=st.text(min_size=1, max_size=8),
    doc_id=st.text(max_size=8),
    domain=st.sampled_from(["fda", "radgraph"]),
    category=st.text(max_size=6),
    span_text=st.text(max_size=20),
    token_probs=st.lists(
        st.floats(min_value=1e-300, max_value=1.0, allow_nan=False), min_size=1, max_size=6
    ).map(tuple),
    fact_score=st.none() | st.integers(0, 3),
    gold_match=st.none() | st.booleans(),
    label=st.none() | st.integers(0, 1),
)


@given(records_st)
def test_serialize_round_trip(r):
    assert parse_record(serialize_record(r)) == r


@given(st.lists(st.sampled_from(["a", "b", "c"]), max_size=30), st.sampled_from([(), ("category",), ("domain", "category")]))
def test_group_by_is_partition(cats, keys):
    ds = Dataset(tuple(rec(str(i), c) for i, c in enumerate(cats)))
    groups = group_by(ds, keys)
    ids = [r.record_id for g in groups.values() for r in g]
    assert sorted(ids) == sorted(r.record_id for r in ds)
    assert len(ids) == len(set(ids))
