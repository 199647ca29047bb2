"""
L2-regularised logistic regression fitted by damped Newton iterations
"""

import logging
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Tuple

import numpy as np

from ..core.exceptions import ConvergenceException
from ..core.types import Method
from .base_learner import BaseClassifier, LearnerParams, require_positive, sigmoid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LRParams(LearnerParams):
    l2_strength: float = 1.0
    max_iter: int = 100
    tol: float = 1e-6
    unstated: ClassVar[Tuple[str, ...]] = ("l2_strength",)

    def validate(self):
        require_positive("l2_strength", self.l2_strength, allow_zero=True)
        require_positive("max_iter", self.max_iter)
        require_positive("tol", self.tol)


def objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> Tuple[float, np.ndarray]:
    """Summed log loss plus (l2 / 2) ||w||^2 and its gradient.

    ``theta`` is [w_1..w_d, intercept]; the intercept is not penalised.
    """
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    loss = float(np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    residual = sigmoid(z) - y
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ residual + l2 * w
    grad[-1] = residual.sum()
    return loss, grad


def _hessian(theta: np.ndarray, X: np.ndarray, l2: float) -> np.ndarray:
    p = sigmoid(X @ theta[:-1] + theta[-1])
    weights = p * (1.0 - p)
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    H = Xa.T @ (Xa * weights[:, None])
    H[np.arange(X.shape[1]), np.arange(X.shape[1])] += l2
    return H


class LogisticRegressionClassifier(BaseClassifier):
    method = Method.LR

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticRegressionClassifier":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.check_training_data(X, y.astype(int))
        l2 = self.params.l2_strength

        theta = np.zeros(X.shape[1] + 1)
        loss, grad = objective(theta, X, y, l2)
        for iteration in range(self.params.max_iter + 1):
            grad_norm = float(np.linalg.norm(grad))
            if grad_norm <= self.params.tol:
                logger.debug(f"LR converged in {iteration} Newton steps, |grad|={grad_norm:.2e}")
                break
            if iteration == self.params.max_iter:
                raise ConvergenceException(
                    f"Logistic regression did not reach |grad| <= {self.params.tol} "
                    f"in {self.params.max_iter} iterations (|grad|={grad_norm:.3e})"
                )
            H = _hessian(theta, X, l2)
            try:
                direction = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                direction = -np.linalg.lstsq(H, grad, rcond=None)[0]

            # Armijo backtracking with a rounding allowance near the optimum.
            slope = float(grad @ direction)
            step = 1.0
            while True:
                candidate = theta + step * direction
                new_loss, new_grad = objective(candidate, X, y, l2)
                if new_loss <= loss + 1e-4 * step * slope + 1e-12 * abs(loss) or step < 1e-10:
                    break
                step *= 0.5
            theta, loss, grad = candidate, new_loss, new_grad

        self.coef_ = theta[:-1].copy()
        self.intercept_ = float(theta[-1])
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = self.check_input(X)
        return X @ self.coef_ + self.intercept_

    def decision_score(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def state_dict(self) -> Dict[str, Any]:
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_}

    def load_state(self, state: Dict[str, Any]):
        self.coef_ = np.array(state["coef"], dtype=float)
        self.intercept_ = float(state["intercept"])
        self.n_features = int(self.coef_.shape[0])
