"""Confusion-matrix classification metrics: accuracy, macro F1, multiclass MCC."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """C x C counts, rows = true class, columns = predicted class."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        n = counts.shape[0]
        if counts.shape != (n, n):
            raise ValueError("confusion matrix must be square")
        if np.any(counts < 0):
            raise ValueError("confusion matrix entries must be >= 0")

    @classmethod
    def from_predictions(cls, y_true, y_pred, n_classes: int) -> "ConfusionMatrix":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(counts, (y_true, y_pred), 1)
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _require_nonempty(cm: ConfusionMatrix) -> None:
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")


def accuracy(cm: ConfusionMatrix) -> float:
    _require_nonempty(cm)
    return float(np.trace(cm.counts)) / cm.total


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1; a class with P+R = 0 scores 0."""
    _require_nonempty(cm)
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    actual = counts.sum(axis=1)
    f1 = np.zeros(counts.shape[0])
    denominator = predicted + actual  # equals (P+R) scaled; zero iff P+R undefined/0
    nonzero = denominator > 0
    f1[nonzero] = 2.0 * tp[nonzero] / denominator[nonzero]
    return float(f1.mean())


def mcc(cm: ConfusionMatrix) -> float:
    """Multiclass Matthews correlation (covariance-of-confusion form)."""
    _require_nonempty(cm)
    counts = cm.counts.astype(np.float64)
    t = counts.sum(axis=1)  # true per class
    p = counts.sum(axis=0)  # predicted per class
    s = counts.sum()
    c = np.trace(counts)
    numerator = c * s - p @ t
    denominator = np.sqrt(s ** 2 - p @ p) * np.sqrt(s ** 2 - t @ t)
    if denominator == 0.0:
        return 0.0
    return float(numerator / denominator)
