"""
Soft-margin RBF support vector machine trained by SMO with maximal-violating-pair
working set selection
"""

import logging
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Optional, Tuple

import numpy as np

from ..core.types import Method
from .base_learner import BaseClassifier, LearnerParams, require_positive

logger = logging.getLogger(__name__)

TAU = 1e-12


@dataclass(frozen=True)
class SVMParams(LearnerParams):
    """gamma None means 1 / (n_features * var(X))"""
    C: float = 1.0
    gamma: Optional[float] = None
    tol: float = 1e-3
    max_iter: int = 100000
    unstated: ClassVar[Tuple[str, ...]] = ("C", "gamma")

    def validate(self):
        require_positive("C", self.C)
        require_positive("gamma", self.gamma)
        require_positive("tol", self.tol)
        require_positive("max_iter", self.max_iter)


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.sum(A ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


class SVMClassifier(BaseClassifier):
    method = Method.SVM
    threshold = 0.0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "SVMClassifier":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.check_training_data(X, y)

        gamma = self.params.gamma
        if gamma is None:
            variance = float(X.var())
            gamma = 1.0 / (X.shape[1] * variance) if variance > 0 else 1.0 / X.shape[1]
        self.gamma_ = gamma

        signs = np.where(y == 1, 1.0, -1.0)
        alpha, rho, iterations = self._smo(rbf_kernel(X, X, gamma), signs)

        support = alpha > 0
        self.support_vectors_ = X[support]
        self.dual_coef_ = alpha[support] * signs[support]
        self.intercept_ = -rho
        self.alpha_ = alpha
        self.n_iter_ = iterations
        logger.debug(f"SMO finished after {iterations} iterations, {int(support.sum())} support vectors")
        return self

    def _smo(self, K: np.ndarray, signs: np.ndarray):
        n = K.shape[0]
        C, tol = self.params.C, self.params.tol
        Q = (signs[:, None] * signs[None, :]) * K
        QD = np.diag(Q).copy()
        alpha = np.zeros(n)
        G = -np.ones(n)

        iterations = 0
        while True:
            up = ((signs > 0) & (alpha < C)) | ((signs < 0) & (alpha > 0))
            low = ((signs > 0) & (alpha > 0)) | ((signs < 0) & (alpha < C))
            score = -signs * G
            up_scores = np.where(up, score, -np.inf)
            low_scores = np.where(low, score, np.inf)
            i = int(np.argmax(up_scores))
            j = int(np.argmin(low_scores))
            if up_scores[i] - low_scores[j] < tol:
                break
            if iterations >= self.params.max_iter:
                logger.warning(
                    f"SMO stopped at the iteration cap ({self.params.max_iter}) with "
                    f"violation {up_scores[i] - low_scores[j]:.3e}"
                )
                break
            iterations += 1

            old_i, old_j = alpha[i], alpha[j]
            if signs[i] != signs[j]:
                quad = max(QD[i] + QD[j] + 2.0 * Q[i, j], TAU)
                delta = (-G[i] - G[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0:
                    if alpha[j] < 0:
                        alpha[j] = 0.0
                        alpha[i] = diff
                elif alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
                if diff > 0:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = C - diff
                elif alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
            else:
                quad = max(QD[i] + QD[j] - 2.0 * Q[i, j], TAU)
                delta = (G[i] - G[j]) / quad
                total = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if total > C:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = total - C
                elif alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
                if total > C:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = total - C
                elif alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

            G += Q[:, i] * (alpha[i] - old_i) + Q[:, j] * (alpha[j] - old_j)

        return alpha, self._rho(alpha, signs, G, C), iterations

    @staticmethod
    def _rho(alpha: np.ndarray, signs: np.ndarray, G: np.ndarray, C: float) -> float:
        yG = signs * G
        free = (alpha > 0) & (alpha < C)
        if np.any(free):
            return float(yG[free].mean())
        at_upper = alpha >= C
        ub_mask = (at_upper & (signs < 0)) | (~at_upper & (signs > 0))
        lb_mask = ~ub_mask
        ub = float(yG[ub_mask].min()) if np.any(ub_mask) else np.inf
        lb = float(yG[lb_mask].max()) if np.any(lb_mask) else -np.inf
        return 0.5 * (ub + lb)

    def decision_score(self, X: np.ndarray) -> np.ndarray:
        """Signed decision value; positive means C2"""
        X = self.check_input(X)
        if self.support_vectors_.shape[0] == 0:
            return np.full(X.shape[0], self.intercept_)
        return rbf_kernel(X, self.support_vectors_, self.gamma_) @ self.dual_coef_ + self.intercept_

    def state_dict(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma_,
            "support_vectors": self.support_vectors_.tolist(),
            "dual_coef": self.dual_coef_.tolist(),
            "intercept": self.intercept_,
            "n_features": self.n_features,
        }

    def load_state(self, state: Dict[str, Any]):
        self.gamma_ = float(state["gamma"])
        self.n_features = int(state["n_features"])
        self.support_vectors_ = np.array(state["support_vectors"], dtype=float).reshape(-1, self.n_features)
        self.dual_coef_ = np.array(state["dual_coef"], dtype=float)
        self.intercept_ = float(state["intercept"])
