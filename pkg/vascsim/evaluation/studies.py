"""
Analyses built on evaluation reports: measurement-count summaries, best
combinations, Q1 inclusion histograms, low-severity ratios, unilateral
measurements and measurement importance
"""

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..core.exceptions import EvaluationException
from ..core.types import DiseaseKind, Laterality, Measurement, Method
from ..features import FULL_COMBINATION, FeatureStore, MeasurementCombination, all_combinations, feature_columns
from ..learners.importance import aggregate_by_measurement, split_improvement_importance
from ..learners.model import Hyperparams, fit
from .search import (
    EvaluationReport, build_fold_data, cell_seed, run_combination_search, select_columns
)
from .splits import SplitPlan

logger = logging.getLogger(__name__)

MethodLike = Union[Method, str]


def _method_names(report: EvaluationReport, methods: Optional[Sequence[MethodLike]]) -> list:
    if methods is None:
        return report.methods
    return [m.value if isinstance(m, Method) else str(m).upper() for m in methods]


def _bilateral_aggregates(report: EvaluationReport, methods: Optional[Sequence[MethodLike]]) -> pd.DataFrame:
    names = _method_names(report, methods)
    labels = [c.label for c in all_combinations()]
    report.require_complete(methods=names, combinations=labels)
    agg = report.aggregates()
    return agg[agg["method"].isin(names) & agg["combination"].isin(labels)].reset_index(drop=True)


def measurement_count_summary(report: EvaluationReport,
                              methods: Optional[Sequence[MethodLike]] = None) -> pd.DataFrame:
    """Mean, max and min F1 over all classifiers for each number of measurements.

    The argmax cell is the first maximum in method then appendix order.
    """
    agg = _bilateral_aggregates(report, methods)
    rows = []
    for k in range(1, len(Measurement) + 1):
        group = agg[agg["size"] == k]
        best = group.loc[group["f1"].idxmax()] if group["f1"].notna().any() else None
        rows.append({
            "k": k,
            "n_combinations": int(group["combination"].nunique()),
            "n_cells": int(len(group)),
            "mean_f1": float(group["f1"].mean()),
            "max_f1": float(group["f1"].max()),
            "min_f1": float(group["f1"].min()),
            "best_method": best["method"] if best is not None else "",
            "best_combination": best["combination"] if best is not None else "",
        })
    return pd.DataFrame(rows)


def best_combinations(report: EvaluationReport,
                      methods: Optional[Sequence[MethodLike]] = None) -> pd.DataFrame:
    """Per method and measurement count, the combination with the highest mean F1"""
    agg = _bilateral_aggregates(report, methods)
    rows = []
    for method in _method_names(report, methods):
        for k in range(1, len(Measurement) + 1):
            group = agg[(agg["method"] == method) & (agg["size"] == k)]
            if not group["f1"].notna().any():
                continue
            best = group.loc[group["f1"].idxmax()]
            rows.append({
                "method": method,
                "k": k,
                "combination": best["combination"],
                "f1": best["f1"],
                "sensitivity": best["sensitivity"],
                "specificity": best["specificity"],
            })
    return pd.DataFrame(rows, columns=["method", "k", "combination", "f1", "sensitivity", "specificity"])


@dataclass(frozen=True, eq=False)
class Q1Histograms:
    edges: np.ndarray
    include: np.ndarray
    exclude: np.ndarray
    include_f1: np.ndarray
    exclude_f1: np.ndarray

    @property
    def include_mean(self) -> float:
        return float(np.mean(self.include_f1))

    @property
    def exclude_mean(self) -> float:
        return float(np.mean(self.exclude_f1))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "bin_low": self.edges[:-1],
            "bin_high": self.edges[1:],
            "include_q1": self.include,
            "exclude_q1": self.exclude,
        })


def q1_inclusion_histograms(report: EvaluationReport, methods: Optional[Sequence[MethodLike]] = None,
                            bins: int = 20) -> Q1Histograms:
    """Histograms of mean F1 for combinations with and without Q1 (32 vs 31 per method)"""
    agg = _bilateral_aggregates(report, methods)
    has_q1 = agg["combination"].map(lambda c: MeasurementCombination.parse(c).includes(Measurement.Q1))
    scores = agg["f1"]
    if scores.isna().any():
        logger.warning(f"Leaving {int(scores.isna().sum())} fully flagged cells out of the Q1 histograms")
    include = scores[has_q1].dropna().to_numpy()
    exclude = scores[~has_q1].dropna().to_numpy()
    edges = np.linspace(0.0, 1.0, bins + 1)
    return Q1Histograms(
        edges=edges,
        include=np.histogram(include, bins=edges)[0],
        exclude=np.histogram(exclude, bins=edges)[0],
        include_f1=include,
        exclude_f1=exclude,
    )


def low_severity_ratio_study(report_aaa: EvaluationReport, report_aaa_l: EvaluationReport,
                             method: MethodLike = Method.GB) -> pd.DataFrame:
    """Per-combination ratio of low-severity to standard aneurysm F1"""
    name = method.value if isinstance(method, Method) else str(method).upper()
    base = report_aaa.for_method(name).aggregates().set_index("combination")["f1"]
    low = report_aaa_l.for_method(name).aggregates().set_index("combination")["f1"]
    if base.empty or set(base.index) != set(low.index):
        only_base = sorted(set(base.index) - set(low.index))
        only_low = sorted(set(low.index) - set(base.index))
        raise EvaluationException(
            f"{name} coverage differs: {len(only_base)} combinations only in the first report, "
            f"{len(only_low)} only in the second"
        )
    low = low.reindex(base.index)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(base.to_numpy() > 0, low.to_numpy() / base.to_numpy(), np.nan)
    if np.isnan(ratio).any():
        logger.warning(f"{int(np.isnan(ratio).sum())} combinations have an undefined F1 ratio")
    return pd.DataFrame({
        "combination": base.index,
        "f1_reference": base.to_numpy(),
        "f1_low_severity": low.to_numpy(),
        "ratio": ratio,
    })


def unilateral_study(plan: SplitPlan, healthy: FeatureStore, diseased: FeatureStore, seed: int,
                     measurements: Sequence[Measurement] = (Measurement.Q1, Measurement.P3),
                     hyperparams: Optional[Hyperparams] = None,
                     n_jobs: Optional[int] = 1) -> pd.DataFrame:
    """GB sensitivity and specificity from right, left and both sides of each measurement"""
    combos = [
        MeasurementCombination.of(m, laterality=lat)
        for m in measurements
        for lat in (Laterality.RIGHT, Laterality.LEFT, Laterality.BOTH)
    ]
    hp = {Method.GB: hyperparams} if hyperparams is not None else None
    report = run_combination_search(
        plan.disease, [Method.GB], plan, healthy, diseased, seed,
        combinations=combos, hyperparams=hp, n_jobs=n_jobs,
    )
    agg = report.aggregates().set_index("combination")
    rows = []
    for combo in combos:
        cell = agg.loc[combo.label]
        rows.append({
            "measurement": next(iter(combo.measurements)).value,
            "sides": "Both" if combo.laterality is Laterality.BOTH else combo.laterality.value,
            "n_features": len(feature_columns(combo, healthy.order)),
            "sensitivity": cell["sensitivity"],
            "specificity": cell["specificity"],
            "f1": cell["f1"],
        })
    return pd.DataFrame(rows)


def measurement_importance(plan: SplitPlan, healthy: FeatureStore, diseased: FeatureStore, seed: int,
                           hyperparams: Optional[Hyperparams] = None,
                           n_folds: Optional[int] = None) -> pd.DataFrame:
    """Share of GB split improvement attributed to each bilateral measurement, fold-averaged"""
    hyperparams = hyperparams or Hyperparams.default(Method.GB)
    if hyperparams.method is not Method.GB:
        raise EvaluationException("Measurement importance is computed from GB models")
    folds = build_fold_data(plan, healthy, diseased)
    if n_folds is not None:
        folds = folds[:n_folds]
    if not folds:
        raise EvaluationException("No folds to compute importances on")

    per_fold = []
    for f, (train, _) in enumerate(folds):
        model = fit(
            hyperparams,
            select_columns(train, FULL_COMBINATION, healthy.order),
            cell_seed(seed, plan.disease, Method.GB, FULL_COMBINATION, f),
        )
        importance = split_improvement_importance(model)
        per_fold.append(aggregate_by_measurement(importance, FULL_COMBINATION, healthy.order))
        logger.debug(f"{plan.disease.value} fold {f} importances: {per_fold[-1]}")

    frame = pd.DataFrame(per_fold)[[m.value for m in FULL_COMBINATION.canonical]]
    mean = frame.mean(axis=0)
    return pd.DataFrame({
        "measurement": mean.index,
        "importance": mean.to_numpy(),
        "percent": 100.0 * mean.to_numpy(),
    })


def gb_disease_table(reports: Mapping[Union[DiseaseKind, str], EvaluationReport],
                     method: MethodLike = Method.GB) -> pd.DataFrame:
    """Mean F1 of one method for every combination (rows) and disease cohort (columns)"""
    if not reports:
        raise EvaluationException("No reports given")
    name = method.value if isinstance(method, Method) else str(method).upper()
    columns: Dict[str, pd.Series] = {}
    for key, report in reports.items():
        kind = key if isinstance(key, DiseaseKind) else DiseaseKind.parse(key)
        agg = report.for_method(name).aggregates()
        if agg.empty:
            raise EvaluationException(f"Report for {kind.value} has no {name} cells")
        columns[kind.value] = agg.set_index("combination")["f1"]
    ordered = [k.value for k in DiseaseKind if k.value in columns]
    table = pd.DataFrame({k: columns[k] for k in ordered})
    labels = [c.label for c in all_combinations()]
    table = table.reindex([c for c in labels if c in table.index] + [c for c in table.index if c not in labels])
    table.index.name = "combination"
    return table
