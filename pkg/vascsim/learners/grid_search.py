"""
Exhaustive hyperparameter grid search scored by mean F1 over evaluation folds
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from ..core.exceptions import LearnerException, VascSimException
from ..core.seeding import derive_int_seed
from ..core.types import Method
from ..evaluation.metrics import f1_score
from .base_learner import Dataset
from .model import Hyperparams, fit, predict

logger = logging.getLogger(__name__)


def _inclusive(start: int, stop: int, step: int) -> List[int]:
    return list(range(start, stop + 1, step))


# Architecture grids; NB, LR and SVM have no architecture to search.
DEFAULT_GRIDS: Dict[Method, Dict[str, List[int]]] = {
    Method.RF: {"n_trees": _inclusive(10, 400, 10), "max_depth": _inclusive(20, 200, 10)},
    Method.GB: {"n_trees": _inclusive(10, 100, 10), "max_depth": _inclusive(2, 20, 1)},
    Method.MLP: {"neurons_per_layer": _inclusive(10, 200, 10), "n_hidden_layers": _inclusive(1, 6, 1)},
}


def default_grid(method: Method) -> Dict[str, List[int]]:
    if method not in DEFAULT_GRIDS:
        raise LearnerException(
            f"{method.value} has no architecture grid; its configuration is problem independent"
        )
    return {k: list(v) for k, v in DEFAULT_GRIDS[method].items()}


def expand_grid_spec(spec: Mapping[str, Any]) -> Dict[str, List[Any]]:
    """Accept explicit value lists or {start, stop, step} ranges with inclusive stop"""
    grid = {}
    for name, values in spec.items():
        if isinstance(values, Mapping):
            try:
                grid[name] = _inclusive(int(values["start"]), int(values["stop"]), int(values.get("step", 1)))
            except KeyError as e:
                raise LearnerException(f"Grid range for {name} is missing {e}")
        else:
            grid[name] = list(values)
    return grid


def grid_cells(grid: Mapping[str, Sequence[Any]]) -> List[Dict[str, Any]]:
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise LearnerException("Hyperparameter grid is empty")
    names = list(grid)
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]


@dataclass
class GridSearchResult:
    best: Hyperparams
    best_score: float
    table: pd.DataFrame


def _score_cell(hyperparams: Hyperparams, folds: Sequence[Tuple[Dataset, Dataset]],
                seed: int, cell: int) -> Tuple[List[float], Optional[str]]:
    scores = []
    try:
        for fold, (train, test) in enumerate(folds):
            model = fit(hyperparams, train, derive_int_seed(seed, "grid", cell, fold))
            scores.append(f1_score(test.y, predict(model, test.X)))
    except VascSimException as e:
        logger.warning(f"Grid cell {hyperparams.describe()} failed: {e}")
        return scores, str(e)
    return scores, None


def grid_search(method: Method, grid: Mapping[str, Sequence[Any]],
                folds: Sequence[Tuple[Dataset, Dataset]], seed: int,
                base: Optional[Hyperparams] = None, n_jobs: Optional[int] = 1,
                progress: bool = False) -> GridSearchResult:
    """Evaluate every grid cell on the given (train, test) folds; the best mean F1 wins.

    Ties keep the earliest cell in grid order.
    """
    cells = grid_cells(grid)
    if not folds:
        raise LearnerException("Grid search needs at least one fold")
    base = base or Hyperparams.default(method)
    candidates = [base.with_overrides(**cell) for cell in cells]
    logger.info(f"Grid search for {method.value}: {len(cells)} cells x {len(folds)} folds")

    outcomes = Parallel(n_jobs=n_jobs or -1, return_as="generator")(
        delayed(_score_cell)(hp, folds, seed, i) for i, hp in enumerate(candidates)
    )
    outcomes = list(tqdm(outcomes, total=len(candidates), desc=f"grid {method.value}", disable=not progress))

    rows = []
    for cell, (scores, error) in zip(cells, outcomes):
        rows.append({
            "method": method.value,
            **cell,
            "mean_f1": float(np.mean(scores)) if error is None else np.nan,
            "fold_f1s": ";".join(f"{s:.4f}" for s in scores),
            "flagged": error is not None,
        })
    table = pd.DataFrame(rows)
    if table["mean_f1"].isna().all():
        raise LearnerException(f"Every grid cell failed for {method.value}")
    best_index = int(table["mean_f1"].fillna(-np.inf).to_numpy().argmax())
    best = candidates[best_index]
    best_score = float(table["mean_f1"].iloc[best_index])
    logger.info(f"Best {method.value} cell: {best.describe()} with mean F1 {best_score:.4f}")
    return GridSearchResult(best=best, best_score=best_score, table=table)
