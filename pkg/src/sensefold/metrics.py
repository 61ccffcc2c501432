"""Evaluation metrics: support-weighted macro F1 and one-vs-rest AUROC.

AUROC uses the rank statistic with average ranks, so tied scores contribute
one half. Both metrics weight per-class values by true-class support and
ignore classes absent from the truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank range."""
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    cum = np.cumsum(counts)
    avg = cum - (counts - 1) / 2.0
    return avg[inverse]


def binary_auroc(scores: np.ndarray, positive: np.ndarray) -> float:
    """Mann-Whitney AUROC for one class; ties count one half."""
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = int(len(positive) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs both positive and negative examples")
    ranks = _average_ranks(np.asarray(scores, dtype=float))
    u = float(ranks[positive].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def weighted_auroc(y_true: np.ndarray, proba: np.ndarray, classes: np.ndarray) -> float:
    """Support-weighted one-vs-rest AUROC.

    ``proba`` columns align with ``classes`` (the classes the model was
    trained on). A class present in the truth but missing from the model
    scores as a constant zero, i.e. AUROC one half.
    """
    y_true = np.asarray(y_true)
    proba = np.asarray(proba, dtype=float)
    classes = np.asarray(classes)
    present, support = np.unique(y_true, return_counts=True)
    if present.size < 2:
        raise ValueError("AUROC undefined when the truth contains a single class")
    col = {int(c): i for i, c in enumerate(classes)}
    total = 0.0
    for cls, sup in zip(present, support):
        idx = col.get(int(cls))
        scores = proba[:, idx] if idx is not None else np.zeros(len(y_true))
        total += sup * binary_auroc(scores, y_true == cls)
    return total / float(len(y_true))


def weighted_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Per-class F1 averaged with weights proportional to true-class support."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("label arrays must have equal length")
    if y_true.size == 0:
        raise ValueError("labels must be non-empty")
    present, support = np.unique(y_true, return_counts=True)
    total = 0.0
    for cls, sup in zip(present, support):
        tp = float(np.sum((y_true == cls) & (y_pred == cls)))
        fp = float(np.sum((y_true != cls) & (y_pred == cls)))
        fn = float(np.sum((y_true == cls) & (y_pred != cls)))
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        total += sup * f1
    return total / float(len(y_true))


@dataclass
class MetricSummary:
    """Per-run F1/AUROC values with their mean and population std."""

    f1_runs: list[float] = field(default_factory=list)
    auroc_runs: list[float] = field(default_factory=list)

    def add(self, f1: float, auroc: float) -> None:
        self.f1_runs.append(float(f1))
        self.auroc_runs.append(float(auroc))

    @property
    def f1_mean(self) -> float:
        return float(np.mean(self.f1_runs))

    @property
    def f1_std(self) -> float:
        return float(np.std(self.f1_runs))

    @property
    def auroc_mean(self) -> float:
        return float(np.mean(self.auroc_runs))

    @property
    def auroc_std(self) -> float:
        return float(np.std(self.auroc_runs))

    def __len__(self) -> int:
        return len(self.f1_runs)
