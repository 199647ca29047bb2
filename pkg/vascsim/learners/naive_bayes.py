"""
Gaussian naive Bayes
"""

from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Tuple

import numpy as np

from ..core.types import Method
from .base_learner import BaseClassifier, LearnerParams, require_positive, sigmoid


@dataclass(frozen=True)
class NBParams(LearnerParams):
    """variance_floor is a fraction of the largest feature variance added to every class variance"""
    variance_floor: float = 1e-9
    unstated: ClassVar[Tuple[str, ...]] = ("variance_floor",)

    def validate(self):
        require_positive("variance_floor", self.variance_floor, allow_zero=True)


class NaiveBayesClassifier(BaseClassifier):
    method = Method.NB

    def fit(self, X: np.ndarray, y: np.ndarray) -> "NaiveBayesClassifier":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.check_training_data(X, y)

        epsilon = self.params.variance_floor * float(X.var(axis=0).max())
        if epsilon == 0.0:
            epsilon = max(self.params.variance_floor, np.finfo(float).tiny)
        self.epsilon_ = epsilon
        self.class_prior_ = np.array([np.mean(y == c) for c in (0, 1)])
        self.theta_ = np.vstack([X[y == c].mean(axis=0) for c in (0, 1)])
        self.var_ = np.vstack([X[y == c].var(axis=0) for c in (0, 1)]) + epsilon
        return self

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        """log P(c) + sum_j log N(x_j; theta_cj, var_cj), shape (n_samples, 2)"""
        X = self.check_input(X)
        columns = []
        for c in (0, 1):
            log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.var_[c]))
            quad = -0.5 * np.sum((X - self.theta_[c]) ** 2 / self.var_[c], axis=1)
            columns.append(np.log(self.class_prior_[c]) + log_norm + quad)
        return np.column_stack(columns)

    def decision_score(self, X: np.ndarray) -> np.ndarray:
        """Posterior probability of C2"""
        jll = self.joint_log_likelihood(X)
        return sigmoid(jll[:, 1] - jll[:, 0])

    def state_dict(self) -> Dict[str, Any]:
        return {
            "class_prior": self.class_prior_.tolist(),
            "theta": self.theta_.tolist(),
            "var": self.var_.tolist(),
            "epsilon": self.epsilon_,
        }

    def load_state(self, state: Dict[str, Any]):
        self.class_prior_ = np.array(state["class_prior"], dtype=float)
        self.theta_ = np.array(state["theta"], dtype=float)
        self.var_ = np.array(state["var"], dtype=float)
        self.epsilon_ = float(state["epsilon"])
        self.n_features = int(self.theta_.shape[1])
