# search and studies import the learners, which import metrics from here;
# keep this package init limited to the dependency-free modules.
from .metrics import ConfusionCounts, Metrics, compute_metrics, f1_score
from .splits import Fold, SplitPlan, build_split_plan

__all__ = [
    "ConfusionCounts", "Metrics", "compute_metrics", "f1_score",
    "Fold", "SplitPlan", "build_split_plan",
]
