"""
Uniform fit/predict contract over the six classifier families, plus the
versioned model document
"""

import json
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Set, Type, Union

import numpy as np

from ..core.exceptions import LearnerException, PersistenceException
from ..core.types import Method
from .base_learner import BaseClassifier, Dataset, LearnerParams
from .logistic import LogisticRegressionClassifier, LRParams
from .mlp import MLPClassifier, MLPParams
from .naive_bayes import NaiveBayesClassifier, NBParams
from .svm import SVMClassifier, SVMParams
from .trees import GBParams, GradientBoostingClassifier, RandomForestClassifier, RFParams

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

REGISTRY: Dict[Method, tuple] = {
    Method.NB: (NBParams, NaiveBayesClassifier),
    Method.LR: (LRParams, LogisticRegressionClassifier),
    Method.SVM: (SVMParams, SVMClassifier),
    Method.MLP: (MLPParams, MLPClassifier),
    Method.RF: (RFParams, RandomForestClassifier),
    Method.GB: (GBParams, GradientBoostingClassifier),
}

_announced: Set[Method] = set()


def params_class(method: Method) -> Type[LearnerParams]:
    return REGISTRY[method][0]


@dataclass(frozen=True)
class Hyperparams:
    """A method tag together with its family-specific parameter record"""
    method: Method
    params: LearnerParams

    def __post_init__(self):
        expected = params_class(self.method)
        if not isinstance(self.params, expected):
            raise LearnerException(
                f"{self.method.value} needs {expected.__name__}, got {type(self.params).__name__}"
            )

    @classmethod
    def default(cls, method: Method, **overrides: Any) -> "Hyperparams":
        try:
            return cls(method, params_class(method)(**overrides))
        except TypeError as e:
            raise LearnerException(f"Invalid {method.value} hyperparameters {overrides}: {e}")

    def with_overrides(self, **overrides: Any) -> "Hyperparams":
        merged = {**self.params.to_dict(), **overrides}
        return Hyperparams.default(self.method, **merged)

    def to_dict(self) -> Dict[str, Any]:
        return {"method": self.method.value, **self.params.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Hyperparams":
        data = dict(data)
        method = Method(data.pop("method"))
        return cls(method, params_class(method).from_dict(data))

    def describe(self) -> str:
        return f"{self.method.value}({self.params.describe()})"


def _announce_defaults(hyperparams: Hyperparams):
    if hyperparams.method in _announced:
        return
    _announced.add(hyperparams.method)
    defaults = {f.name: f.default for f in fields(hyperparams.params)}
    used = [
        f"{name}={getattr(hyperparams.params, name)}"
        for name in type(hyperparams.params).unstated
        if getattr(hyperparams.params, name) == defaults.get(name)
    ]
    if used:
        logger.info(f"{hyperparams.method.value} uses built-in defaults: {', '.join(used)}")


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """A fitted classifier with the metadata it was fitted under"""
    method: Method
    hyperparams: Hyperparams
    seed: int
    n_features: int
    estimator: BaseClassifier

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "method": self.method.value,
            "hyperparams": self.hyperparams.to_dict(),
            "seed": self.seed,
            "n_features": self.n_features,
            "state": self.estimator.state_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainedModel":
        version = data.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise PersistenceException(f"Unsupported model format version: {version}")
        hyperparams = Hyperparams.from_dict(data["hyperparams"])
        estimator = REGISTRY[hyperparams.method][1](hyperparams.params, int(data["seed"]))
        estimator.load_state(data["state"])
        return cls(
            method=hyperparams.method,
            hyperparams=hyperparams,
            seed=int(data["seed"]),
            n_features=int(data["n_features"]),
            estimator=estimator,
        )


def fit(hyperparams: Hyperparams, data: Dataset, seed: int) -> TrainedModel:
    """Fit one classifier; rows are put in subject-id order first"""
    if data.n_samples == 0:
        raise LearnerException("Cannot fit on an empty dataset")
    if len(set(data.y.tolist())) < 2:
        raise LearnerException(f"{hyperparams.method.value}: training data has a single class")
    _announce_defaults(hyperparams)
    canonical = data.canonical()
    estimator = REGISTRY[hyperparams.method][1](hyperparams.params, seed)
    estimator.fit(canonical.X, canonical.y)
    return TrainedModel(
        method=hyperparams.method,
        hyperparams=hyperparams,
        seed=seed,
        n_features=data.n_features,
        estimator=estimator,
    )


def predict_score(model: TrainedModel, x: np.ndarray) -> Union[float, np.ndarray]:
    """Score for one vector (returns a float) or a matrix of rows"""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.n_features:
        raise LearnerException(
            f"{model.method.value} model expects {model.n_features} features, got {x.shape[-1]}"
        )
    scores = model.estimator.decision_score(x)
    return float(scores[0]) if x.ndim == 1 else scores


def predict(model: TrainedModel, x: np.ndarray) -> Union[int, np.ndarray]:
    scores = np.atleast_1d(predict_score(model, x))
    labels = np.where(scores > model.estimator.threshold, 1, 0)
    return int(labels[0]) if np.ndim(x) == 1 else labels


def save_model(model: TrainedModel, path: Union[str, Path]):
    from ..io.records import atomic_write_text

    atomic_write_text(Path(path), json.dumps(model.to_dict()))
    logger.info(f"Saved {model.method.value} model to {path}")


def load_model(path: Union[str, Path]) -> TrainedModel:
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Failed to read model from {path}: {e}")
        raise PersistenceException(f"Failed to read model: {e}")
    return TrainedModel.from_dict(data)
