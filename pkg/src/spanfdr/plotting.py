"""Matplotlib figures written next to the CSV reports.

Figures are a view only; the CSV files remain the authoritative output.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .calmetrics import ReliabilityCurve  # noqa: E402
from .conformal import SweepRow, group_name  # noqa: E402

FIG_WIDTH = 5.0
GOLDEN = 0.618

_STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "spanfdr",
}


@contextmanager
def report_style():
    with matplotlib.rc_context(_STYLE):
        yield


def _save(fig, path) -> None:
    # Drop timestamps and version strings so identical inputs give identical files.
    meta = {"Software": None} if str(path).endswith(".png") else {"Date": None, "Creator": None}
    fig.savefig(path, dpi=150, metadata=meta, bbox_inches="tight")
    plt.close(fig)


def reliability_diagram(curves: Mapping[str, ReliabilityCurve], path, title: str = "") -> None:
    """Mean confidence vs. empirical accuracy per group, with the diagonal.

    Points above the diagonal indicate underconfidence, below it overconfidence.
    """
    with report_style():
        fig, ax = plt.subplots(figsize=(FIG_WIDTH, FIG_WIDTH * 0.8))
        ax.plot([0, 1], [0, 1], ls="--", color="0.6", lw=0.8, label="perfect calibration")
        for name, curve in curves.items():
            xs = [b.mean_confidence for b in curve.bins]
            ys = [b.empirical_accuracy for b in curve.bins]
            ax.plot(xs, ys, marker="o", label=name)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("predicted span confidence")
        ax.set_ylabel("empirical accuracy")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper left", frameon=False)
        _save(fig, path)


def sweep_plot(sweeps: Mapping[tuple, Sequence[SweepRow]], path, title: str = "") -> None:
    with report_style():
        fig, (ax_rej, ax_prec) = plt.subplots(1, 2, figsize=(FIG_WIDTH * 1.6, FIG_WIDTH * GOLDEN))
        for key, rows in sweeps.items():
            alphas = [r.alpha for r in rows]
            rej = [r.metrics.rejection_pct if r.metrics else float("nan") for r in rows]
            prec = [
                r.metrics.precision if r.metrics and r.metrics.precision is not None else float("nan")
                for r in rows
            ]
            ax_rej.plot(alphas, rej, marker="o", label=group_name(key))
            ax_prec.plot(alphas, prec, marker="o", label=group_name(key))
        lo = min((r.alpha for rows in sweeps.values() for r in rows), default=0.0)
        hi = max((r.alpha for rows in sweeps.values() for r in rows), default=1.0)
        ax_prec.plot([lo, hi], [1 - lo, 1 - hi], ls="--", color="0.6", lw=0.8, label="1 - α")
        ax_rej.set_xlabel("target FDR α")
        ax_rej.set_ylabel("rejected (%)")
        ax_rej.set_ylim(-2, 102)
        ax_prec.set_xlabel("target FDR α")
        ax_prec.set_ylabel("precision among accepted")
        ax_prec.legend(frameon=False)
        if title:
            fig.suptitle(title)
        _save(fig, path)
