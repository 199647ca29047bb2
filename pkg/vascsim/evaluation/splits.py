"""
Dataset construction: disjoint healthy/diseased halves and re-sampled folds
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..core.exceptions import EvaluationException
from ..core.seeding import derive_rng
from ..core.types import DiseaseKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Fold:
    """Subject ids of one train/test partition; every id is tagged by its class"""
    train_healthy: Tuple[str, ...]
    train_diseased: Tuple[str, ...]
    test_healthy: Tuple[str, ...]
    test_diseased: Tuple[str, ...]

    @property
    def train_size(self) -> int:
        return len(self.train_healthy) + len(self.train_diseased)

    @property
    def test_size(self) -> int:
        return len(self.test_healthy) + len(self.test_diseased)


@dataclass(frozen=True)
class SplitPlan:
    """Healthy subjects used as healthy, the remaining subjects used via their diseased twins"""
    disease: DiseaseKind
    healthy_ids: Tuple[str, ...]
    diseased_ids: Tuple[str, ...]
    folds: Tuple[Fold, ...]

    def validate(self):
        overlap = set(self.healthy_ids) & set(self.diseased_ids)
        if overlap:
            raise EvaluationException(f"Subjects used as both healthy and diseased: {sorted(overlap)[:5]}")
        if len(self.healthy_ids) != len(self.diseased_ids):
            raise EvaluationException("Combined set is not class balanced")
        healthy, diseased = set(self.healthy_ids), set(self.diseased_ids)
        for i, fold in enumerate(self.folds):
            train = set(fold.train_healthy) | set(fold.train_diseased)
            test = set(fold.test_healthy) | set(fold.test_diseased)
            if train & test:
                raise EvaluationException(f"Fold {i} leaks subjects between train and test")
            if not (set(fold.train_healthy) | set(fold.test_healthy)) <= healthy:
                raise EvaluationException(f"Fold {i} uses a subject outside the healthy half")
            if not (set(fold.train_diseased) | set(fold.test_diseased)) <= diseased:
                raise EvaluationException(f"Fold {i} uses a subject outside the diseased half")
        return self

    def to_dict(self) -> Dict:
        return {
            "disease": self.disease.value,
            "healthy_ids": list(self.healthy_ids),
            "diseased_ids": list(self.diseased_ids),
            "folds": [
                {
                    "train_healthy": list(f.train_healthy), "train_diseased": list(f.train_diseased),
                    "test_healthy": list(f.test_healthy), "test_diseased": list(f.test_diseased),
                }
                for f in self.folds
            ],
        }


def build_split_plan(healthy_ids: Sequence[str], diseased_twin_ids: Sequence[str],
                     seed: int, disease: DiseaseKind, n_folds: int = 5) -> SplitPlan:
    """Split subjects into disjoint halves, then draw independent 2:1 folds.

    Only subjects present in both cohorts take part. An odd subject count drops
    the last shuffled subject so both classes have n // 2 members. Each fold
    tests n_class // 3 subjects per class and trains on the rest.
    """
    twins = set(diseased_twin_ids)
    paired = sorted(s for s in set(healthy_ids) if s in twins)
    if len(paired) < 2:
        raise EvaluationException(f"Need at least 2 twin-paired subjects, got {len(paired)}")
    if n_folds < 1:
        raise EvaluationException(f"n_folds must be >= 1, got {n_folds}")

    rng = derive_rng(seed, "split", disease.value)
    shuffled = [paired[i] for i in rng.permutation(len(paired))]
    half = len(shuffled) // 2
    if len(shuffled) % 2:
        logger.info(f"Odd subject count {len(shuffled)}: dropping {shuffled[-1]} from the {disease.value} plan")
    healthy = tuple(sorted(shuffled[:half]))
    diseased = tuple(sorted(shuffled[half:2 * half]))

    n_test = half // 3
    if n_test < 1:
        raise EvaluationException(f"Too few subjects ({len(paired)}) for a 2:1 split")
    folds: List[Fold] = []
    for fold in range(n_folds):
        fold_rng = derive_rng(seed, "fold", disease.value, fold)
        h_order = fold_rng.permutation(half)
        d_order = fold_rng.permutation(half)
        folds.append(Fold(
            train_healthy=tuple(sorted(healthy[i] for i in h_order[n_test:])),
            train_diseased=tuple(sorted(diseased[i] for i in d_order[n_test:])),
            test_healthy=tuple(sorted(healthy[i] for i in h_order[:n_test])),
            test_diseased=tuple(sorted(diseased[i] for i in d_order[:n_test])),
        ))

    plan = SplitPlan(disease=disease, healthy_ids=healthy, diseased_ids=diseased, folds=tuple(folds))
    logger.debug(
        f"{disease.value} split plan: {half} + {half} subjects, "
        f"train {folds[0].train_size} / test {folds[0].test_size} per fold"
    )
    return plan.validate()
