"""Confusion matrices and support-weighted classification metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed [actual][predicted]."""

    counts: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(
    preds: Sequence[int], labels: Sequence[int], num_classes: int
) -> ConfusionMatrix:
    if len(preds) != len(labels):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(labels)} labels")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    for p, a in zip(preds, labels):
        if not (0 <= p < num_classes and 0 <= a < num_classes):
            raise ValueError(f"class index out of range for C={num_classes}: pred={p}, label={a}")
        counts[a, p] += 1
    return ConfusionMatrix(counts=counts)


def weighted_metrics(m: ConfusionMatrix) -> dict[str, float]:
    """Accuracy plus precision/recall/F1 weighted by actual-class support.

    Per-class terms with a zero denominator are defined as 0, so the
    aggregates stay finite when a class is never predicted. Weighted recall
    equals accuracy by construction (support-weighted recall is trace/total).
    """
    counts = m.counts.astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise ValueError("cannot compute metrics for an empty confusion matrix")
    tp = np.diag(counts)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)

    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    pr_sum = precision + recall
    f1 = np.divide(2 * precision * recall, pr_sum, out=np.zeros_like(tp), where=pr_sum > 0)

    weights = support / total
    return {
        "accuracy": float(tp.sum() / total),
        "weighted_precision": float((weights * precision).sum()),
        "weighted_recall": float((weights * recall).sum()),
        "weighted_f1": float((weights * f1).sum()),
    }


def confusion_to_csv(m: ConfusionMatrix) -> str:
    """Rows are actual classes, columns predicted; header names both axes."""
    header = "actual\\predicted," + ",".join(str(c) for c in range(m.num_classes))
    lines = [header]
    for a in range(m.num_classes):
        lines.append(str(a) + "," + ",".join(str(int(v)) for v in m.counts[a]))
    return "\n".join(lines) + "\n"
