"""Verification labels and exact-match entity/relation scoring.

Gold annotations are line-delimited JSON, one document per line::

    {"doc_id": "d1",
     "entities": [{"span_text": "lungs", "label": "anat-dp"}, ...],
     "relations": [{"source": {"span_text": "effusion", "label": "obs-dp"},
                    "target": {"span_text": "pleural", "label": "anat-dp"},
                    "relation": "located_at"}, ...]}

Matching is count-aware: two identical predictions against one gold entity
yield one true positive and one false positive.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .records import Dataset, ExtractionRecord

logger = logging.getLogger(__name__)

RELATION_TYPES = frozenset({"located_at", "modify", "suggestive_of"})

_WS = re.compile(r"\s+")


def normalize_span(text: str) -> str:
    """Trim, collapse internal whitespace and case-fold."""
    return _WS.sub(" ", text.strip()).casefold()


def label_from_factscore(score: int, pass_threshold: int = 3) -> int:
    if isinstance(score, bool) or not isinstance(score, int) or not 0 <= score <= 3:
        raise ValueError(f"fact_score out of range: {score!r}")
    return int(score >= pass_threshold)


@dataclass(frozen=True)
class GoldEntity:
    doc_id: str
    span_text: str
    label: str

    def __post_init__(self):
        if not (self.doc_id and self.span_text and self.label):
            raise ValueError("gold entity fields must be non-empty")

    @property
    def key(self) -> tuple[str, str]:
        return normalize_span(self.span_text), self.label


@dataclass(frozen=True)
class RelationTriple:
    doc_id: str
    source: tuple[str, str]
    target: tuple[str, str]
    relation: str

    def __post_init__(self):
        if self.relation not in RELATION_TYPES:
            raise ValueError(f"unknown relation type {self.relation!r}")

    @property
    def key(self) -> tuple:
        return (
            normalize_span(self.source[0]),
            self.source[1],
            normalize_span(self.target[0]),
            self.target[1],
            self.relation,
        )


@dataclass(frozen=True)
class PRF:
    tp: int
    fp: int
    fn: int
    #: Set when there were no predictions at all; precision is reported as 0.
    no_predictions: bool = field(default=False)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _count_match(pred: Counter, gold: Counter) -> int:
    return sum(min(c, gold[k]) for k, c in pred.items())


def _by_doc(items: Iterable, key=lambda x: x.doc_id) -> dict[str, list]:
    out: dict[str, list] = {}
    for it in items:
        out.setdefault(key(it), []).append(it)
    return out


def _entity_key(x) -> tuple[str, str]:
    # ExtractionRecord carries the entity type in ``category``; its ``label`` is correctness.
    kind = x.category if isinstance(x, ExtractionRecord) else x.label
    return normalize_span(x.span_text), kind


def match_entities(
    predicted: Sequence[ExtractionRecord | GoldEntity], gold: Sequence[GoldEntity]
) -> tuple[list[int], PRF]:
    """Label each prediction 1 iff it consumes a gold entity with equal span and label.

    Within a document, predictions claim gold entities in input order, so
    the surplus copies of a duplicated prediction are the later ones.
    Returns per-prediction labels aligned with ``predicted`` and micro PRF.
    """
    gold_docs = {d: Counter(g.key for g in ents) for d, ents in _by_doc(gold).items()}
    missing = sorted({p.doc_id for p in predicted} - set(gold_docs))
    if missing:
        logger.warning("%d predicted doc_id(s) absent from gold, counted as false positives: %s",
                       len(missing), ", ".join(missing[:5]))
    remaining = {d: Counter(c) for d, c in gold_docs.items()}
    labels = []
    for p in predicted:
        pool = remaining.get(p.doc_id)
        key = _entity_key(p)
        if pool is not None and pool[key] > 0:
            pool[key] -= 1
            labels.append(1)
        else:
            labels.append(0)
    tp = sum(labels)
    n_gold = sum(sum(c.values()) for c in gold_docs.values())
    prf = PRF(tp=tp, fp=len(predicted) - tp, fn=n_gold - tp, no_predictions=not predicted)
    return labels, prf


def match_relations(predicted: Sequence[RelationTriple], gold: Sequence[RelationTriple]) -> PRF:
    pred_docs = {d: Counter(t.key for t in ts) for d, ts in _by_doc(predicted).items()}
    gold_docs = {d: Counter(t.key for t in ts) for d, ts in _by_doc(gold).items()}
    tp = sum(_count_match(c, gold_docs.get(d, Counter())) for d, c in pred_docs.items())
    return PRF(tp=tp, fp=len(predicted) - tp, fn=len(gold) - tp, no_predictions=not predicted)


def per_label_prf(
    predicted: Sequence[ExtractionRecord], labels: Sequence[int], gold: Sequence[GoldEntity]
) -> dict[str, PRF]:
    """Entity PRF broken down by category label, from :func:`match_entities` output."""
    out = {}
    cats = sorted({p.category for p in predicted} | {g.label for g in gold})
    for c in cats:
        tp = sum(y for p, y in zip(predicted, labels) if p.category == c)
        n_pred = sum(1 for p in predicted if p.category == c)
        n_gold = sum(1 for g in gold if g.label == c)
        out[c] = PRF(tp, n_pred - tp, n_gold - tp, no_predictions=n_pred == 0)
    return out


def label_dataset(dataset: Dataset, gold: Sequence[GoldEntity]) -> tuple[Dataset, PRF]:
    """Set ``gold_match`` and ``label`` on every record from exact matching."""
    labels, prf = match_entities(dataset.records, gold)
    recs = tuple(replace(r, gold_match=bool(y), label=y) for r, y in zip(dataset.records, labels))
    return Dataset(recs, dataset.provenance), prf


# -- annotation files -------------------------------------------------------


def _pair(obj: Mapping, where: str) -> tuple[str, str]:
    try:
        return str(obj["span_text"]), str(obj["label"])
    except (KeyError, TypeError):
        raise ValueError(f"{where}: relation endpoint needs span_text and label") from None


def parse_annotation(line: str, line_no: int = 0) -> tuple[list[GoldEntity], list[RelationTriple]]:
    where = f"line {line_no}"
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{where}: malformed JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or "doc_id" not in obj:
        raise ValueError(f"{where}: expected an object with doc_id")
    doc = str(obj["doc_id"])
    try:
        ents = [GoldEntity(doc, e["span_text"], e["label"]) for e in obj.get("entities", [])]
        rels = [
            RelationTriple(doc, _pair(r["source"], where), _pair(r["target"], where), r["relation"])
            for r in obj.get("relations", [])
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{where}: missing field {exc}") from None
    except ValueError as exc:
        raise ValueError(f"{where}: {exc}") from None
    return ents, rels


def load_annotations(path) -> tuple[list[GoldEntity], list[RelationTriple]]:
    entities, relations = [], []
    with Path(path).open(encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if line.strip():
                e, r = parse_annotation(line, i)
                entities += e
                relations += r
    return entities, relations


def annotation_line(doc_id: str, entities: Sequence[GoldEntity], relations: Sequence[RelationTriple]) -> str:
    return json.dumps(
        {
            "doc_id": doc_id,
            "entities": [{"span_text": e.span_text, "label": e.label} for e in entities],
            "relations": [
                {
                    "source": {"span_text": r.source[0], "label": r.source[1]},
                    "target": {"span_text": r.target[0], "label": r.target[1]},
                    "relation": r.relation,
                }
                for r in relations
            ],
        },
        ensure_ascii=False,
    )
