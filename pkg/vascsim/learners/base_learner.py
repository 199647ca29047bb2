import logging
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, fields
from typing import Any, ClassVar, Dict, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import LearnerException
from ..core.types import Method

logger = logging.getLogger(__name__)

# Class labels: C1 is healthy, C2 is diseased (the positive class).
HEALTHY = 0
DISEASED = 1


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-free logistic function; sigmoid(0) is exactly 0.5"""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    ez = np.exp(z[~positive])
    out[~positive] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """Standardised feature rows with binary labels and subject ids"""
    X: np.ndarray
    y: np.ndarray
    subject_ids: Tuple[str, ...]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise LearnerException(f"Feature matrix must be 2-D, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise LearnerException(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if len(self.subject_ids) != X.shape[0]:
            raise LearnerException(f"{X.shape[0]} rows but {len(self.subject_ids)} subject ids")
        if not np.all(np.isin(y, (HEALTHY, DISEASED))):
            raise LearnerException(f"Labels must be binary {{{HEALTHY}, {DISEASED}}}")
        if not np.all(np.isfinite(X)):
            bad = np.flatnonzero(~np.all(np.isfinite(X), axis=1))[:10].tolist()
            raise LearnerException(f"Feature matrix contains NaN/Inf in rows {bad}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(int))
        object.__setattr__(self, "subject_ids", tuple(self.subject_ids))

    @property
    def n_samples(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.X.shape[1])

    def subset(self, rows: Sequence[int]) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.X[rows], self.y[rows], tuple(self.subject_ids[i] for i in rows))

    def canonical(self) -> "Dataset":
        """Rows sorted by subject id, making fits independent of row order"""
        order = sorted(range(self.n_samples), key=lambda i: (self.subject_ids[i], int(self.y[i])))
        return self.subset(order)


@dataclass(frozen=True)
class LearnerParams:
    """Base for per-family hyperparameter records"""
    # Field names whose defaults are our own choice; logged on first use.
    unstated: ClassVar[Tuple[str, ...]] = ()

    def __post_init__(self):
        self.validate()

    def validate(self):
        pass

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LearnerParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise LearnerException(f"Unknown {cls.__name__} fields: {sorted(unknown)}")
        return cls(**data)

    def describe(self) -> str:
        return ", ".join(f"{k}={v}" for k, v in self.to_dict().items())


def require_positive(name: str, value: Optional[float], allow_zero: bool = False):
    if value is None:
        return
    if allow_zero and value < 0 or not allow_zero and value <= 0:
        bound = ">= 0" if allow_zero else "> 0"
        raise LearnerException(f"{name} must be {bound}, got {value}")


class BaseClassifier(ABC):
    """Base class for the binary classifier families"""

    method: ClassVar[Method]
    # Scores strictly above the threshold predict C2; ties predict C1.
    threshold: ClassVar[float] = 0.5

    def __init__(self, params: LearnerParams, seed: int = 0):
        self.params = params
        self.seed = seed
        self.n_features: Optional[int] = None

    @abstractmethod
    def fit(self, X: np.ndarray, y: np.ndarray) -> "BaseClassifier":
        """
        Fit on standardised rows X with labels y in {0, 1}

        Args:
            X: (n_samples, n_features) matrix
            y: (n_samples,) binary labels

        Returns:
            self
        """
        raise NotImplementedError

    @abstractmethod
    def decision_score(self, X: np.ndarray) -> np.ndarray:
        """Real-valued score per row; higher means more likely diseased"""
        raise NotImplementedError

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.decision_score(X) > self.threshold, DISEASED, HEALTHY)

    @abstractmethod
    def state_dict(self) -> Dict[str, Any]:
        """Fitted parameters as JSON-compatible values"""
        raise NotImplementedError

    @abstractmethod
    def load_state(self, state: Dict[str, Any]):
        raise NotImplementedError

    def check_input(self, X: np.ndarray) -> np.ndarray:
        if self.n_features is None:
            raise LearnerException(f"{self.method.value} model used before fit")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise LearnerException(
                f"{self.method.value} model expects {self.n_features} features, got {X.shape[-1]}"
            )
        return X

    def check_training_data(self, X: np.ndarray, y: np.ndarray):
        if X.shape[0] != y.shape[0] or X.shape[0] == 0:
            raise LearnerException(f"Bad training shapes X={X.shape}, y={y.shape}")
        if not np.all(np.isfinite(X)):
            raise LearnerException("Training features contain NaN/Inf")
        present = set(np.unique(y).tolist())
        if present != {HEALTHY, DISEASED}:
            raise LearnerException(f"Training data must contain both classes, got {sorted(present)}")
        self.n_features = int(X.shape[1])
