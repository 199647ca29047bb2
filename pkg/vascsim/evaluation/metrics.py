"""
Confusion counts and the derived binary metrics; the diseased class is positive
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np

from ..core.exceptions import EvaluationException

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise EvaluationException(f"Confusion counts must be non-negative: {self}")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    @classmethod
    def from_predictions(cls, y_true: np.ndarray, y_pred: np.ndarray) -> "ConfusionCounts":
        y_true = np.asarray(y_true, dtype=int)
        y_pred = np.asarray(y_pred, dtype=int)
        if y_true.shape != y_pred.shape:
            raise EvaluationException(f"Label shapes differ: {y_true.shape} vs {y_pred.shape}")
        return cls(
            tp=int(np.sum((y_true == 1) & (y_pred == 1))),
            fn=int(np.sum((y_true == 1) & (y_pred == 0))),
            fp=int(np.sum((y_true == 0) & (y_pred == 1))),
            tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        )

    def to_dict(self) -> Dict[str, int]:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


@dataclass(frozen=True)
class Metrics:
    """Ratios with a zero denominator are reported as 0 and named in ``degenerate``"""
    sensitivity: float
    specificity: float
    precision: float
    f1: float
    degenerate: Tuple[str, ...] = ()

    @property
    def recall(self) -> float:
        return self.sensitivity

    @property
    def is_degenerate(self) -> bool:
        return bool(self.degenerate)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "degenerate": "|".join(self.degenerate),
        }


def _ratio(numerator: int, denominator: int, name: str, flags: list) -> float:
    if denominator == 0:
        flags.append(name)
        return 0.0
    return numerator / denominator


def compute_metrics(counts: ConfusionCounts) -> Metrics:
    if counts.total <= 0:
        raise EvaluationException("Cannot compute metrics on an empty evaluation set")
    flags: list = []
    sensitivity = _ratio(counts.tp, counts.tp + counts.fn, "sensitivity", flags)
    specificity = _ratio(counts.tn, counts.tn + counts.fp, "specificity", flags)
    precision = _ratio(counts.tp, counts.tp + counts.fp, "precision", flags)
    if precision + sensitivity == 0.0:
        flags.append("f1")
        f1 = 0.0
    else:
        f1 = 2.0 * precision * sensitivity / (precision + sensitivity)
    if flags:
        logger.warning(f"Degenerate metric denominators {flags} for counts {counts.to_dict()}")
    return Metrics(sensitivity, specificity, precision, f1, tuple(flags))


def f1_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    return compute_metrics(ConfusionCounts.from_predictions(y_true, y_pred)).f1
