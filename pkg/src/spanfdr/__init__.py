"""Conformal false-discovery-rate control for confidence-scored entity extractions."""

from .calmetrics import brier, ece, reliability_curve
from .confidence import logit_score, sigmoid, span_confidence
from .conformal import (
    REJECT_ALL,
    EvalMetrics,
    Threshold,
    apply_threshold,
    calibrate,
    empirical_fdr,
    evaluate,
    fdr_threshold,
    per_category_calibrate,
    split,
    sweep,
)
from .records import Dataset, ExtractionRecord, group_by, load_dataset, parse_record

__version__ = "0.1.0"
