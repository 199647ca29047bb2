"""
Shared fixtures: small synthetic feature stores, split plans and rigged reports
"""

import numpy as np
import pytest
import yaml

from vascsim.core.types import SITE_NAMES, DiseaseKind
from vascsim.evaluation.search import EvaluationReport
from vascsim.evaluation.splits import build_split_plan
from vascsim.features import FeatureStore, MeasurementCombination, all_combinations
from vascsim.haemo.network import NetworkConfig

ORDER = 5
WIDTH = len(SITE_NAMES) * (2 * ORDER + 1)
# Q1_R and Q1_L coefficient columns
Q1_COLUMNS = list(range(0, 2 * (2 * ORDER + 1)))


def subject_ids(n):
    return [f"VP{i:06d}" for i in range(n)]


def make_store(ids, seed, shift=0.0, columns=()):
    rng = np.random.default_rng(seed)
    matrix = rng.normal(size=(len(ids), WIDTH))
    if columns:
        matrix[:, list(columns)] += shift
    return FeatureStore(ids=tuple(ids), matrix=matrix, order=ORDER)


def rigged_report(score, methods=("GB",), disease="AAA", n_folds=1, combinations=None):
    """Report whose every metric equals ``score(method, combination)``"""
    rows = []
    for method in methods:
        for combo in combinations or all_combinations():
            value = score(method, combo)
            for fold in range(n_folds):
                rows.append({
                    "disease": disease,
                    "method": method,
                    "combination": combo.label,
                    "size": combo.size,
                    "fold": fold,
                    "tp": 1, "fn": 1, "fp": 1, "tn": 1,
                    "sensitivity": value,
                    "specificity": value,
                    "precision": value,
                    "recall": value,
                    "f1": value,
                    "degenerate": "",
                    "flagged": False,
                    "error": "",
                })
    return EvaluationReport.from_rows(rows)


@pytest.fixture
def ids():
    return subject_ids(24)


@pytest.fixture
def healthy_store(ids):
    return make_store(ids, seed=1)


@pytest.fixture
def diseased_store(ids):
    # Twins differ from their healthy counterparts mainly in the Q1 coefficients.
    return make_store(ids, seed=2, shift=3.0, columns=Q1_COLUMNS)


@pytest.fixture
def split_plan(ids):
    return build_split_plan(ids, ids, seed=11, disease=DiseaseKind.AAA, n_folds=5)


@pytest.fixture
def small_network_config():
    return NetworkConfig(nodes_per_segment=4)


@pytest.fixture
def q1():
    return MeasurementCombination.parse("Q1")


@pytest.fixture
def tiny_config_path(tmp_path):
    """Run configuration small enough to simulate and sweep in seconds"""
    document = {
        "seed": 5,
        "population": {"healthy": 12, "diseases": {"AAA": 12}},
        "surrogate": {"nodes_per_segment": 2},
        "methods": ["NB"],
        "learners": {"GB": {"n_trees": 5, "max_depth": 2}},
        "grids": {"GB": {"n_trees": [2], "max_depth": [1, 2]}},
        "evaluation": {"n_folds": 2, "gb_importance_folds": 2},
        "output_dir": str(tmp_path / "run"),
        "jobs": 1,
    }
    path = tmp_path / "tiny.yml"
    path.write_text(yaml.safe_dump(document))
    return path
