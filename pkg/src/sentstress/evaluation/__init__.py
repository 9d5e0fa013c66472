"""Word-level metrics, the BLSTM baseline, and evaluation reports."""

from .baseline import (
    BaselineModel,
    BaselineWordFeatures,
    BLSTMTagger,
    BoundaryError,
    boundaries_from_starts,
    extract_baseline_features,
    read_alignment_csv,
    train_baseline,
)
from .evaluate import (
    SystemReport,
    comparison,
    evaluate,
    evaluate_baseline,
    evaluate_stress_head,
    markdown_table,
    write_report,
)
from .metrics import Metrics, f1_score, precision_recall_f1

__all__ = [
    "BaselineModel", "BaselineWordFeatures", "BLSTMTagger", "BoundaryError",
    "boundaries_from_starts", "extract_baseline_features", "read_alignment_csv", "train_baseline",
    "SystemReport", "comparison", "evaluate", "evaluate_baseline", "evaluate_stress_head",
    "markdown_table", "write_report", "Metrics", "f1_score", "precision_recall_f1",
]
