"""Micro-averaged word-level precision, recall and F1."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

from ..core import ContractViolation, WordPrediction


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    support_positive: int
    n_samples: int
    n_words: int = 0
    true_positive: int = 0
    false_positive: int = 0
    false_negative: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def f1_score(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def confusion_counts(predictions: Iterable[WordPrediction]) -> tuple[int, int, int, int, int]:
    tp = fp = fn = n_words = n_samples = 0
    for pred in predictions:
        if pred.gold is None:
            raise ContractViolation(f"prediction {pred.sample_id!r} has no gold labels")
        n_samples += 1
        for g, p in zip(pred.gold, pred.predicted):
            n_words += 1
            tp += bool(g and p)
            fp += bool(p and not g)
            fn += bool(g and not p)
    return tp, fp, fn, n_words, n_samples


def precision_recall_f1(predictions: Iterable[WordPrediction]) -> Metrics:
    """Pool all words of all samples; empty denominators give 0."""
    tp, fp, fn, n_words, n_samples = confusion_counts(predictions)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return Metrics(precision, recall, f1_score(precision, recall), tp + fn, n_samples,
                   n_words, tp, fp, fn)
