"""CSV and markdown rendering of calibration, sweep and matching results.

CSV cells carry full-precision values (``repr`` floats, ``inf`` for the
reject-all threshold, ``--`` for undefined metrics). Markdown tables are
rendered from those same CSV cells, so every displayed number can be
recomputed from the CSV.
"""

from __future__ import annotations

import csv
import io
import math
import re
from typing import Iterable, Mapping, Optional, Sequence

from .conformal import GroupResult, SweepRow, group_name
from .matcher import PRF

MISSING = "--"

CALIBRATION_COLUMNS = (
    "group", "alpha", "n", "brier", "ece", "tau", "p_min",
    "rejection_pct", "acceptance_rate", "precision", "n_cal", "n_test",
)
SWEEP_COLUMNS = (
    "group", "alpha", "tau", "p_min", "rejection_pct", "acceptance_rate", "precision", "n_cal", "n_test",
)
PRF_COLUMNS = ("scope", "precision", "recall", "f1", "tp", "fp", "fn")

_HEADERS = {
    "group": "Group", "alpha": "α", "n": "# Entities", "brier": "Brier↓", "ece": "ECE↓",
    "tau": "τ", "p_min": "p̂_min", "rejection_pct": "Rej.%", "acceptance_rate": "Cov.",
    "precision": "Prec.", "n_cal": "n_cal", "n_test": "n_test", "scope": "Scope",
    "recall": "Rec.", "f1": "F1", "tp": "TP", "fp": "FP", "fn": "FN",
}


def _num(x: Optional[float]) -> str:
    if x is None:
        return MISSING
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _threshold_cells(row: dict, tau, metrics) -> None:
    if tau is None:
        row.update(tau=MISSING, p_min=MISSING)
    else:
        row["tau"] = _num(tau.value)
        row["p_min"] = MISSING if tau.reject_all else _num(tau.p_min)
    if metrics is None:
        row.update(rejection_pct=MISSING, acceptance_rate=MISSING, precision=MISSING)
    else:
        row["rejection_pct"] = _num(metrics.rejection_pct)
        row["acceptance_rate"] = _num(metrics.acceptance_rate)
        row["precision"] = _num(metrics.precision)


def calibration_rows(results: Iterable[GroupResult]) -> list[dict]:
    rows = []
    for r in results:
        row = {"group": group_name(r.group), "alpha": _num(r.alpha)}
        row["n"] = str(r.n_cal + r.n_test)
        row["brier"] = _num(r.summary.brier if r.summary else None)
        row["ece"] = _num(r.summary.ece if r.summary else None)
        _threshold_cells(row, r.threshold, r.metrics)
        row["n_cal"], row["n_test"] = str(r.n_cal), str(r.n_test)
        rows.append({k: row[k] for k in CALIBRATION_COLUMNS})
    return rows


def sweep_rows(sweeps: Mapping[tuple, Sequence[SweepRow]]) -> list[dict]:
    rows = []
    for key, group_rows in sweeps.items():
        for s in group_rows:
            row = {"group": group_name(key), "alpha": _num(s.alpha)}
            _threshold_cells(row, s.threshold, s.metrics)
            row["n_cal"], row["n_test"] = str(s.n_cal), str(s.n_test)
            rows.append({k: row[k] for k in SWEEP_COLUMNS})
    return rows


def prf_rows(prfs: Mapping[str, PRF]) -> list[dict]:
    rows = []
    for scope, prf in prfs.items():
        undefined = prf.no_predictions
        rows.append({
            "scope": scope,
            "precision": MISSING if undefined else _num(prf.precision),
            "recall": _num(prf.recall),
            "f1": _num(prf.f1),
            "tp": str(prf.tp), "fp": str(prf.fp), "fn": str(prf.fn),
        })
    return rows


def to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


# -- markdown view -----------------------------------------------------------


def _fixed(cell: str, digits: int) -> str:
    return cell if cell == MISSING else f"{float(cell):.{digits}f}"


def _prob(cell: str) -> str:
    """Probability without the leading zero, as ``.380``; ``>.999`` near one."""
    if cell == MISSING:
        return cell
    p = float(cell)
    if p >= 0.9995:
        return ">.999"
    text = f"{p:.3f}"
    return text[1:] if text.startswith("0") else text


def _tau(cell: str) -> str:
    if cell == "inf":
        return "∞"
    if cell == MISSING:
        return cell
    return f"{float(cell):.2f}"


_FORMAT = {
    "alpha": lambda c: f"{float(c):.2f}",
    "brier": lambda c: _fixed(c, 3),
    "ece": lambda c: _fixed(c, 3),
    "tau": _tau,
    "p_min": _prob,
    "rejection_pct": lambda c: _fixed(c, 1),
    "acceptance_rate": lambda c: _fixed(c, 3),
    "precision": lambda c: _fixed(c, 3),
    "recall": lambda c: _fixed(c, 3),
    "f1": lambda c: _fixed(c, 3),
}


def to_markdown(rows: Sequence[dict], columns: Sequence[str], title: str = "") -> str:
    lines = [f"## {title}", ""] if title else []
    lines.append("| " + " | ".join(_HEADERS.get(c, c) for c in columns) + " |")
    lines.append("|" + "|".join("---" for _ in columns) + "|")
    for row in rows:
        cells = [_FORMAT.get(c, str)(row[c]) for c in columns]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_") or "group"
