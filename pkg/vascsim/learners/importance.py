"""
Split-improvement feature importance for gradient-boosted models
"""

import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..core.exceptions import LearnerException
from ..core.types import Method
from ..features import DEFAULT_ORDER, MeasurementCombination
from .model import TrainedModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FeatureImportance:
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, rtol=0.0, atol=1e-9):
            raise LearnerException(f"Importances must be non-negative and sum to 1, got sum {weights.sum()}")
        object.__setattr__(self, "weights", weights)


def split_improvement_importance(model: TrainedModel) -> FeatureImportance:
    """Impurity decrease per feature, averaged over the boosted trees"""
    if model.method is not Method.GB:
        raise LearnerException(f"Split-improvement importance is defined for GB models, not {model.method.value}")
    return FeatureImportance(model.estimator.feature_importance())


def aggregate_by_measurement(importance: FeatureImportance, combo: MeasurementCombination,
                             order: int = DEFAULT_ORDER) -> Dict[str, float]:
    """Sum the importances of every coefficient belonging to each measurement"""
    per_site = 2 * order + 1
    per_measurement = per_site * len(combo.laterality.sides)
    expected = per_measurement * combo.size
    if importance.weights.shape[0] != expected:
        raise LearnerException(
            f"Combination {combo.label} has {expected} features, importance has {importance.weights.shape[0]}"
        )
    totals = {}
    for i, measurement in enumerate(combo.canonical):
        block = importance.weights[i * per_measurement:(i + 1) * per_measurement]
        totals[measurement.value] = float(block.sum())
    return totals
