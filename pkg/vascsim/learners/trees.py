"""
CART trees stored as flat arrays, and the two ensembles built on them:
random forests (Gini, bootstrap, majority vote) and gradient boosting
(logistic deviance, regression trees on negative gradients).
"""

import logging
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, List, Optional, Tuple

import numpy as np

from ..core.exceptions import LearnerException
from ..core.types import Method
from .base_learner import BaseClassifier, LearnerParams, require_positive, sigmoid

logger = logging.getLogger(__name__)

LEAF = -1
# Nodes at or below this impurity are treated as pure.
PURE = 1e-12


@dataclass(eq=False)
class Tree:
    """A binary tree in parallel arrays; node 0 is the root.

    Rows with ``x[feature] <= threshold`` go left. ``weighted_decrease`` is the
    impurity decrease of each split weighted by its share of the root's samples.
    ``candidates`` records the features each node was allowed to split on.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity: np.ndarray
    n_samples: np.ndarray
    depth: np.ndarray
    weighted_decrease: np.ndarray
    candidates: List[Optional[List[int]]]

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature == LEAF)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row"""
        node = np.zeros(X.shape[0], dtype=int)
        active = self.feature[node] != LEAF
        while np.any(active):
            rows = np.flatnonzero(active)
            current = node[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[node] != LEAF
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def feature_importance(self, n_features: int) -> np.ndarray:
        """Split-improvement importance of this tree, normalised to sum 1 (zeros if no gain)"""
        importance = np.zeros(n_features)
        splits = self.feature != LEAF
        np.add.at(importance, self.feature[splits], self.weighted_decrease[splits])
        total = importance.sum()
        return importance / total if total > 0 else importance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "impurity": self.impurity.tolist(),
            "n_samples": self.n_samples.tolist(),
            "depth": self.depth.tolist(),
            "weighted_decrease": self.weighted_decrease.tolist(),
            "candidates": self.candidates,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Tree":
        ints = ("feature", "left", "right", "n_samples", "depth")
        floats = ("threshold", "value", "impurity", "weighted_decrease")
        arrays = {k: np.array(data[k], dtype=int) for k in ints}
        arrays.update({k: np.array(data[k], dtype=float) for k in floats})
        return cls(candidates=data.get("candidates", [None] * len(data["feature"])), **arrays)


def _node_impurity(target: np.ndarray, criterion: str) -> float:
    if criterion == "gini":
        p = target.mean()
        return float(2.0 * p * (1.0 - p))
    return float(target.var())


def _best_split(Xn: np.ndarray, target: np.ndarray, features: np.ndarray,
                criterion: str, parent_impurity: float):
    """Vectorised search over all features and cut points; (gain, feature, threshold) or None"""
    m = Xn.shape[0]
    values = Xn[:, features]
    order = np.argsort(values, axis=0, kind="mergesort")
    sorted_x = np.take_along_axis(values, order, axis=0)
    sorted_t = target[order]

    n_left = np.arange(1, m)[:, None].astype(float)
    n_right = m - n_left
    sum_left = np.cumsum(sorted_t, axis=0)[:-1]
    sum_total = sorted_t.sum(axis=0)
    if criterion == "gini":
        p_left = sum_left / n_left
        p_right = (sum_total - sum_left) / n_right
        child = n_left * 2.0 * p_left * (1.0 - p_left) + n_right * 2.0 * p_right * (1.0 - p_right)
    else:
        sq_left = np.cumsum(sorted_t ** 2, axis=0)[:-1]
        sq_total = (sorted_t ** 2).sum(axis=0)
        child = (sq_left - sum_left ** 2 / n_left) + (
            (sq_total - sq_left) - (sum_total - sum_left) ** 2 / n_right
        )
    gain = parent_impurity - child / m
    valid = sorted_x[:-1] < sorted_x[1:]
    if not np.any(valid):
        return None
    gain = np.where(valid, gain, -np.inf)

    # Feature-major tie-breaking: lowest candidate position, then lowest cut.
    flat = int(np.argmax(gain.T))
    col, pos = divmod(flat, m - 1)
    low, high = sorted_x[pos, col], sorted_x[pos + 1, col]
    threshold = 0.5 * (low + high)
    if threshold >= high:
        threshold = low
    return float(gain[pos, col]), int(features[col]), float(threshold)


def build_tree(X: np.ndarray, target: np.ndarray, criterion: str, max_depth: int,
               max_features: Optional[int] = None,
               rng: Optional[np.random.Generator] = None) -> Tree:
    """Grow a CART tree depth-first with an explicit stack.

    Any impure node with a valid cut is split, even at zero gain, until
    ``max_depth`` is reached.
    """
    if criterion not in ("gini", "mse"):
        raise LearnerException(f"Unknown split criterion: {criterion}")
    n, d = X.shape
    k = d if max_features is None else min(max_features, d)
    if k < d and rng is None:
        raise LearnerException("Feature subsampling needs a random generator")

    nodes: List[Dict[str, Any]] = []
    stack = [(np.arange(n), 0, None, False)]
    while stack:
        rows, depth, parent, is_left = stack.pop()
        node_id = len(nodes)
        target_n = target[rows]
        impurity = _node_impurity(target_n, criterion)
        node = {
            "feature": LEAF, "threshold": 0.0, "left": LEAF, "right": LEAF,
            "value": float(target_n.mean()), "impurity": impurity,
            "n_samples": rows.shape[0], "depth": depth, "decrease": 0.0, "candidates": None,
        }
        nodes.append(node)
        if parent is not None:
            nodes[parent]["left" if is_left else "right"] = node_id

        if depth >= max_depth or rows.shape[0] < 2 or impurity <= PURE:
            continue
        features = np.arange(d) if k == d else np.sort(rng.choice(d, size=k, replace=False))
        if k < d:
            node["candidates"] = features.tolist()
        split = _best_split(X[rows], target_n, features, criterion, impurity)
        if split is None:
            continue
        _, feature, threshold = split
        go_left = X[rows, feature] <= threshold
        left_rows, right_rows = rows[go_left], rows[~go_left]
        left_imp = _node_impurity(target[left_rows], criterion)
        right_imp = _node_impurity(target[right_rows], criterion)
        decrease = (rows.shape[0] * impurity - left_rows.shape[0] * left_imp
                    - right_rows.shape[0] * right_imp) / n
        node.update(feature=feature, threshold=threshold, decrease=max(decrease, 0.0))
        # Right pushed first so the left subtree gets the lower node ids.
        stack.append((right_rows, depth + 1, node_id, False))
        stack.append((left_rows, depth + 1, node_id, True))

    return Tree(
        feature=np.array([nd["feature"] for nd in nodes], dtype=int),
        threshold=np.array([nd["threshold"] for nd in nodes], dtype=float),
        left=np.array([nd["left"] for nd in nodes], dtype=int),
        right=np.array([nd["right"] for nd in nodes], dtype=int),
        value=np.array([nd["value"] for nd in nodes], dtype=float),
        impurity=np.array([nd["impurity"] for nd in nodes], dtype=float),
        n_samples=np.array([nd["n_samples"] for nd in nodes], dtype=int),
        depth=np.array([nd["depth"] for nd in nodes], dtype=int),
        weighted_decrease=np.array([nd["decrease"] for nd in nodes], dtype=float),
        candidates=[nd["candidates"] for nd in nodes],
    )


def ensemble_importance(trees: List[Tree], n_features: int) -> np.ndarray:
    """Per-tree normalised importances averaged over trees, renormalised to sum 1"""
    per_tree = [t.feature_importance(n_features) for t in trees]
    per_tree = [imp for imp in per_tree if imp.sum() > 0]
    if not per_tree:
        logger.warning("No split improved impurity; importance is uniform")
        return np.full(n_features, 1.0 / n_features)
    mean = np.mean(per_tree, axis=0)
    return mean / mean.sum()


@dataclass(frozen=True)
class RFParams(LearnerParams):
    """max_features None means ceil(sqrt(n_features))"""
    n_trees: int = 100
    max_depth: int = 20
    max_features: Optional[int] = None
    unstated: ClassVar[Tuple[str, ...]] = ("max_features",)

    def validate(self):
        require_positive("n_trees", self.n_trees)
        require_positive("max_depth", self.max_depth, allow_zero=True)
        require_positive("max_features", self.max_features)


class RandomForestClassifier(BaseClassifier):
    method = Method.RF

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForestClassifier":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.check_training_data(X, y)
        n, d = X.shape
        k = self.params.max_features or int(np.ceil(np.sqrt(d)))
        self.max_features_ = k

        target = y.astype(float)
        self.trees_: List[Tree] = []
        # One independent stream per tree.
        for child in np.random.SeedSequence(self.seed).spawn(self.params.n_trees):
            rng = np.random.default_rng(child)
            # A depth-0 tree is one leaf and votes the training majority.
            if self.params.max_depth == 0:
                sample = np.arange(n)
            else:
                sample = rng.integers(0, n, size=n)
            self.trees_.append(
                build_tree(X[sample], target[sample], "gini", self.params.max_depth, k, rng)
            )
        return self

    def decision_score(self, X: np.ndarray) -> np.ndarray:
        """Fraction of trees voting C2; a leaf at exactly 0.5 votes C1"""
        X = self.check_input(X)
        votes = np.mean([tree.predict_value(X) > 0.5 for tree in self.trees_], axis=0)
        return votes

    def feature_importance(self) -> np.ndarray:
        return ensemble_importance(self.trees_, self.n_features)

    def state_dict(self) -> Dict[str, Any]:
        return {
            "n_features": self.n_features,
            "max_features": self.max_features_,
            "trees": [t.to_dict() for t in self.trees_],
        }

    def load_state(self, state: Dict[str, Any]):
        self.n_features = int(state["n_features"])
        self.max_features_ = int(state["max_features"])
        self.trees_ = [Tree.from_dict(t) for t in state["trees"]]


@dataclass(frozen=True)
class GBParams(LearnerParams):
    n_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    unstated: ClassVar[Tuple[str, ...]] = ("learning_rate",)

    def validate(self):
        require_positive("n_trees", self.n_trees)
        require_positive("max_depth", self.max_depth, allow_zero=True)
        require_positive("learning_rate", self.learning_rate)


class GradientBoostingClassifier(BaseClassifier):
    method = Method.GB

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GradientBoostingClassifier":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.check_training_data(X, y)
        target = y.astype(float)

        prior = target.mean()
        self.init_raw_ = float(np.log(prior / (1.0 - prior)))
        raw = np.full(X.shape[0], self.init_raw_)
        self.trees_: List[Tree] = []
        for stage in range(self.params.n_trees):
            prob = sigmoid(raw)
            residual = target - prob
            tree = build_tree(X, residual, "mse", self.params.max_depth)
            leaf_of = tree.apply(X)
            # Newton step per leaf: sum(g) / sum(h) for the logistic deviance.
            hessian = prob * (1.0 - prob)
            numerator = np.bincount(leaf_of, weights=residual, minlength=tree.n_nodes)
            denominator = np.bincount(leaf_of, weights=hessian, minlength=tree.n_nodes)
            leaves = tree.leaves
            newton = np.zeros(tree.n_nodes)
            ok = denominator[leaves] > 1e-150
            newton[leaves[ok]] = numerator[leaves[ok]] / denominator[leaves[ok]]
            tree.value = np.where(tree.feature == LEAF, newton, tree.value)
            raw += self.params.learning_rate * tree.value[leaf_of]
            self.trees_.append(tree)
        return self

    def staged_raw(self, X: np.ndarray) -> np.ndarray:
        """Raw log-odds after each stage, shape (n_trees + 1, n_samples)"""
        X = self.check_input(X)
        stages = [np.full(X.shape[0], self.init_raw_)]
        for tree in self.trees_:
            stages.append(stages[-1] + self.params.learning_rate * tree.predict_value(X))
        return np.vstack(stages)

    def decision_score(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.staged_raw(X)[-1])

    def feature_importance(self) -> np.ndarray:
        return ensemble_importance(self.trees_, self.n_features)

    def state_dict(self) -> Dict[str, Any]:
        return {
            "n_features": self.n_features,
            "init_raw": self.init_raw_,
            "trees": [t.to_dict() for t in self.trees_],
        }

    def load_state(self, state: Dict[str, Any]):
        self.n_features = int(state["n_features"])
        self.init_raw_ = float(state["init_raw"])
        self.trees_ = [Tree.from_dict(t) for t in state["trees"]]
