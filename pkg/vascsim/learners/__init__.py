from .base_learner import DISEASED, HEALTHY, BaseClassifier, Dataset, LearnerParams
from .grid_search import GridSearchResult, default_grid, expand_grid_spec, grid_search
from .importance import FeatureImportance, aggregate_by_measurement, split_improvement_importance
from .logistic import LRParams
from .mlp import MLPParams
from .model import Hyperparams, TrainedModel, fit, load_model, predict, predict_score, save_model
from .naive_bayes import NBParams
from .svm import SVMParams
from .trees import GBParams, RFParams

__all__ = [
    "DISEASED", "HEALTHY", "BaseClassifier", "Dataset", "LearnerParams",
    "GridSearchResult", "default_grid", "expand_grid_spec", "grid_search",
    "FeatureImportance", "aggregate_by_measurement", "split_improvement_importance",
    "Hyperparams", "TrainedModel", "fit", "load_model", "predict", "predict_score", "save_model",
    "NBParams", "LRParams", "SVMParams", "MLPParams", "RFParams", "GBParams",
]
