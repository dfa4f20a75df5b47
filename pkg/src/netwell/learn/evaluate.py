"""F1 evaluation: per-class and macro over the classes present in the
test labels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def per_class_f1(predictions: Sequence[int], labels: Sequence[int]) -> dict[int, float]:
    """F1 per class present in the labels; 2PR/(P+R) with 0 when P+R = 0."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels differ in length")
    if len(labels) == 0:
        raise ValueError("empty evaluation set")
    out: dict[int, float] = {}
    for cls in np.unique(labels):
        tp = int(((predictions == cls) & (labels == cls)).sum())
        fp = int(((predictions == cls) & (labels != cls)).sum())
        fn = int(((predictions != cls) & (labels == cls)).sum())
        denom = 2 * tp + fp + fn
        out[int(cls)] = 2 * tp / denom if denom else 0.0
    return out


def macro_f1(predictions: Sequence[int], labels: Sequence[int]) -> float:
    scores = per_class_f1(predictions, labels)
    return sum(scores.values()) / len(scores)


@dataclass
class EvalReport:
    """Macro and per-class F1 for one test split."""

    macro_f1: float
    per_class: dict[int, float]
    split: dict = field(default_factory=dict)
    unevaluated_classes: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "per_class_f1": {str(k): v for k, v in sorted(self.per_class.items())},
            "split": self.split,
            "unevaluated_classes": self.unevaluated_classes,
        }


def evaluate(
    predictions: Sequence[int],
    labels: Sequence[int],
    split: dict | None = None,
    expected_classes: Sequence[int] | None = None,
) -> EvalReport:
    """Score predictions; classes expected from training but absent from
    the test labels are flagged as unevaluated rather than scored."""
    scores = per_class_f1(predictions, labels)
    unevaluated = []
    if expected_classes is not None:
        unevaluated = [int(c) for c in expected_classes if int(c) not in scores]
    return EvalReport(
        macro_f1=sum(scores.values()) / len(scores),
        per_class=scores,
        split=dict(split or {}),
        unevaluated_classes=unevaluated,
    )
