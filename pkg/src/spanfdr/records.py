"""Extraction record model, line-delimited ingestion and grouping.

One record per line, each line a JSON object::

    {"record_id": "r1", "doc_id": "d1", "domain": "fda", "category": "pregnancy",
     "span_text": "folic acid", "token_probs": [0.98, 0.91], "fact_score": 3}

Optional keys are ``fact_score`` (0-3), ``gold_match`` (bool) and ``label``
(0 or 1). Unknown keys are ignored with a warning.
"""

from __future__ import annotations

import json
import logging
import math
import sys
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("record_id", "doc_id", "domain", "category", "span_text", "token_probs")
OPTIONAL_KEYS = ("fact_score", "gold_match", "label")
GROUP_KEYS = ("domain", "category")

#: Minimum fact-score counted as correct when no explicit label is given.
DEFAULT_PASS_SCORE = 3


class RecordError(ValueError):
    """A single line failed to parse or validate."""

    def __init__(self, message: str, line_no: Optional[int] = None, field: Optional[str] = None):
        self.line_no = line_no
        self.field = field
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)
        self.message = message


class DatasetError(ValueError):
    """Aggregated ingestion failure for a whole file."""

    def __init__(self, errors: Sequence[RecordError], duplicates: Sequence[str] = ()):
        self.errors = list(errors)
        self.duplicates = list(duplicates)
        parts = []
        if self.errors:
            parts.append(f"{len(self.errors)} invalid line(s); first: {self.errors[0]}")
        if self.duplicates:
            shown = ", ".join(repr(d) for d in self.duplicates[:10])
            more = len(self.duplicates) - 10
            parts.append("duplicate record_id: " + shown + (f" (+{more} more)" if more > 0 else ""))
        super().__init__("; ".join(parts))


@dataclass(frozen=True)
class ExtractionRecord:
    record_id: str
    doc_id: str
    domain: str
    category: str
    span_text: str
    token_probs: tuple[float, ...]
    fact_score: Optional[int] = None
    gold_match: Optional[bool] = None
    label: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "token_probs", tuple(float(p) for p in self.token_probs))
        validate_record(self)

    @property
    def num_tokens(self) -> int:
        return len(self.token_probs)

    def resolved_label(self, pass_score: int = DEFAULT_PASS_SCORE) -> Optional[int]:
        """Binary correctness, preferring ``label`` then ``gold_match`` then ``fact_score``."""
        if self.label is not None:
            return self.label
        if self.gold_match is not None:
            return int(self.gold_match)
        if self.fact_score is not None:
            return int(self.fact_score >= pass_score)
        return None

    def to_dict(self) -> dict:
        out = {
            "record_id": self.record_id,
            "doc_id": self.doc_id,
            "domain": self.domain,
            "category": self.category,
            "span_text": self.span_text,
            "token_probs": list(self.token_probs),
        }
        for key in OPTIONAL_KEYS:
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


def validate_record(rec: ExtractionRecord) -> None:
    for key in ("record_id", "doc_id", "domain", "category", "span_text"):
        if not isinstance(getattr(rec, key), str):
            raise RecordError(f"{key} must be a string", field=key)
    if len(rec.token_probs) == 0:
        raise RecordError("token_probs empty", field="token_probs")
    for p in rec.token_probs:
        if not (math.isfinite(p) and 0.0 < p <= 1.0):
            raise RecordError(f"token_probs value {p!r} outside (0, 1]", field="token_probs")
    if rec.fact_score is not None:
        if isinstance(rec.fact_score, bool) or not isinstance(rec.fact_score, int):
            raise RecordError("fact_score must be an integer", field="fact_score")
        if not 0 <= rec.fact_score <= 3:
            raise RecordError("fact_score out of range", field="fact_score")
    if rec.gold_match is not None and not isinstance(rec.gold_match, bool):
        raise RecordError("gold_match must be a boolean", field="gold_match")
    if rec.label is not None:
        if isinstance(rec.label, bool) or rec.label not in (0, 1):
            raise RecordError("label must be 0 or 1", field="label")


def parse_record(line: str, line_no: Optional[int] = None) -> ExtractionRecord:
    """Parse and validate one JSON line into an :class:`ExtractionRecord`."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"malformed JSON ({exc.msg} at column {exc.colno})", line_no) from None
    if not isinstance(obj, dict):
        raise RecordError("record must be a JSON object", line_no)

    missing = [k for k in REQUIRED_KEYS if k not in obj]
    if missing:
        raise RecordError("missing key(s): " + ", ".join(missing), line_no, missing[0])
    unknown = sorted(set(obj) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        logger.warning("line %s: ignoring unknown key(s) %s", line_no, ", ".join(unknown))

    probs = obj["token_probs"]
    if not isinstance(probs, list) or any(
        isinstance(p, bool) or not isinstance(p, (int, float)) for p in probs
    ):
        raise RecordError("token_probs must be an array of numbers", line_no, "token_probs")
    try:
        return ExtractionRecord(
            record_id=obj["record_id"],
            doc_id=obj["doc_id"],
            domain=obj["domain"],
            category=obj["category"],
            span_text=obj["span_text"],
            token_probs=tuple(probs),
            fact_score=obj.get("fact_score"),
            gold_match=obj.get("gold_match"),
            label=obj.get("label"),
        )
    except RecordError as exc:
        raise RecordError(exc.message, line_no, exc.field) from None


def serialize_record(rec: ExtractionRecord) -> str:
    return json.dumps(rec.to_dict(), ensure_ascii=False)


@dataclass(frozen=True)
class Dataset:
    records: tuple[ExtractionRecord, ...]
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        dups = _duplicates(r.record_id for r in self.records)
        if dups:
            raise DatasetError([], dups)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def subset(self, indices: Iterable[int], provenance: Optional[str] = None) -> "Dataset":
        return Dataset(tuple(self.records[i] for i in indices), provenance or self.provenance)


def _duplicates(ids: Iterable[str]) -> list[str]:
    counts = Counter(ids)
    return [k for k, v in counts.items() if v > 1]


def read_records(lines: Iterable[str]) -> tuple[list[ExtractionRecord], list[RecordError]]:
    """Parse every non-blank line, collecting errors instead of stopping at the first."""
    records, errors = [], []
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(parse_record(line, i))
        except RecordError as exc:
            errors.append(exc)
    return records, errors


def load_dataset(path) -> Dataset:
    """Load a line-delimited record file.

    Raises :class:`DatasetError` listing every bad line and duplicated id.
    An empty file yields an empty dataset and a warning. ``"-"`` reads stdin.
    """
    if str(path) == "-":
        records, errors = read_records(sys.stdin)
        path = "<stdin>"
    else:
        path = Path(path)
        with path.open(encoding="utf-8") as fh:
            records, errors = read_records(fh)
    dups = _duplicates(r.record_id for r in records)
    if errors or dups:
        raise DatasetError(errors, dups)
    if not records:
        logger.warning("%s contains no records", path)
    return Dataset(tuple(records), str(path))


def write_dataset(dataset: Iterable[ExtractionRecord], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for rec in dataset:
            fh.write(serialize_record(rec) + "\n")


def group_by(dataset: Dataset, keys: Sequence[str] = ()) -> dict[tuple, Dataset]:
    """Partition records by the given subset of ``("domain", "category")``.

    Groups appear in first-seen order; record order within a group is kept.
    With no keys the whole dataset is a single group keyed by ``()``.
    """
    bad = [k for k in keys if k not in GROUP_KEYS]
    if bad:
        raise ValueError(f"cannot group by {bad}; allowed keys are {GROUP_KEYS}")
    buckets: dict[tuple, list[ExtractionRecord]] = {}
    for rec in dataset.records:
        buckets.setdefault(tuple(getattr(rec, k) for k in keys), []).append(rec)
    if not keys and not buckets:
        buckets[()] = []
    return {k: Dataset(tuple(v), dataset.provenance) for k, v in buckets.items()}


def resolve_labels(
    dataset: Dataset, pass_score: int = DEFAULT_PASS_SCORE
) -> tuple[Dataset, int]:
    """Fill ``label`` from ``gold_match``/``fact_score`` and drop unresolvable records.

    Returns the labeled dataset and the number of records dropped.
    """
    kept = []
    dropped = 0
    for rec in dataset.records:
        y = rec.resolved_label(pass_score)
        if y is None:
            dropped += 1
            continue
        kept.append(rec if rec.label == y else replace(rec, label=y))
    if dropped:
        logger.warning("dropped %d record(s) without any verification label", dropped)
    return Dataset(tuple(kept), dataset.provenance), dropped
