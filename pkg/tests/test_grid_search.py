import numpy as np
import pytest

from vascsim.core.exceptions import LearnerException
from vascsim.core.types import Method
from vascsim.learners import Dataset, Hyperparams
from vascsim.learners.grid_search import default_grid, expand_grid_spec, grid_cells, grid_search


def separable_folds(n_folds=2, seed=0):
    """1-D folds with training classes in [-3, -1] and [1, 3], test points well inside"""
    rng = np.random.default_rng(seed)
    folds = []
    for f in range(n_folds):
        x_train = np.r_[rng.uniform(-3, -1, 8), rng.uniform(1, 3, 8)][:, None]
        x_test = np.r_[rng.uniform(-2.5, -1.5, 3), rng.uniform(1.5, 2.5, 3)][:, None]
        y_train = np.r_[np.zeros(8, dtype=int), np.ones(8, dtype=int)]
        y_test = np.r_[np.zeros(3, dtype=int), np.ones(3, dtype=int)]
        folds.append((
            Dataset(x_train, y_train, tuple(f"F{f}T{i:02d}" for i in range(16))),
            Dataset(x_test, y_test, tuple(f"F{f}V{i:02d}" for i in range(6))),
        ))
    return folds


class TestGrids:
    def test_default_grid_sizes(self):
        assert len(grid_cells(default_grid(Method.RF))) == 760
        assert len(grid_cells(default_grid(Method.GB))) == 190
        assert len(grid_cells(default_grid(Method.MLP))) == 120

    def test_default_grid_bounds(self):
        grid = default_grid(Method.RF)
        assert grid["n_trees"][0] == 10 and grid["n_trees"][-1] == 400
        assert grid["max_depth"][0] == 20 and grid["max_depth"][-1] == 200

    @pytest.mark.parametrize("method", [Method.NB, Method.LR, Method.SVM])
    def test_no_grid_for_fixed_families(self, method):
        with pytest.raises(LearnerException):
            default_grid(method)

    def test_expand_ranges(self):
        grid = expand_grid_spec({"n_trees": {"start": 10, "stop": 30, "step": 10}, "max_depth": [2, 5]})
        assert grid == {"n_trees": [10, 20, 30], "max_depth": [2, 5]}

    def test_incomplete_range(self):
        with pytest.raises(LearnerException):
            expand_grid_spec({"n_trees": {"start": 10}})

    def test_empty_grid(self):
        with pytest.raises(LearnerException):
            grid_cells({})
        with pytest.raises(LearnerException):
            grid_cells({"n_trees": []})

    def test_cell_order(self):
        cells = grid_cells({"n_trees": [1, 2], "max_depth": [3, 4]})
        assert cells == [
            {"n_trees": 1, "max_depth": 3}, {"n_trees": 1, "max_depth": 4},
            {"n_trees": 2, "max_depth": 3}, {"n_trees": 2, "max_depth": 4},
        ]


class TestGridSearch:
    def test_single_cell(self):
        result = grid_search(Method.GB, {"n_trees": [5], "max_depth": [1]}, separable_folds(), seed=0)
        assert result.best.params.n_trees == 5
        assert result.best.params.max_depth == 1
        assert len(result.table) == 1

    def test_strictly_better_cell_wins(self):
        # A depth-0 booster on balanced data scores 0.5 everywhere and predicts nothing diseased.
        result = grid_search(Method.GB, {"n_trees": [3], "max_depth": [0, 1]}, separable_folds(), seed=0)
        assert result.best.params.max_depth == 1
        assert result.best_score == pytest.approx(1.0)
        assert result.table["mean_f1"].tolist() == pytest.approx([0.0, 1.0])

    def test_ties_keep_earliest_cell(self):
        result = grid_search(Method.GB, {"n_trees": [1, 2], "max_depth": [1]}, separable_folds(), seed=0)
        assert result.best.params.n_trees == 1

    def test_base_hyperparameters_are_kept(self):
        base = Hyperparams.default(Method.GB, learning_rate=0.5)
        result = grid_search(Method.GB, {"n_trees": [2]}, separable_folds(), seed=0, base=base)
        assert result.best.params.learning_rate == 0.5

    def test_table_columns(self):
        result = grid_search(Method.GB, {"n_trees": [1, 2], "max_depth": [1]}, separable_folds(3), seed=0)
        assert list(result.table.columns) == ["method", "n_trees", "max_depth", "mean_f1", "fold_f1s", "flagged"]
        assert result.table["fold_f1s"].iloc[0].count(";") == 2
        assert not result.table["flagged"].any()

    def test_no_folds(self):
        with pytest.raises(LearnerException):
            grid_search(Method.GB, {"n_trees": [1]}, [], seed=0)

    def test_parallel_progress_keeps_cell_order(self):
        grid = {"n_trees": [1, 3], "max_depth": [0, 1, 2]}
        serial = grid_search(Method.GB, grid, separable_folds(), seed=4)
        parallel = grid_search(Method.GB, grid, separable_folds(), seed=4, n_jobs=2, progress=True)
        assert parallel.table.equals(serial.table)
        assert parallel.best == serial.best
