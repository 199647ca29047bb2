"""
Combination search: every method on every measurement combination and fold,
accumulated into an EvaluationReport
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from ..core.exceptions import EvaluationException, VascSimException
from ..core.seeding import derive_int_seed
from ..core.types import DiseaseKind, Laterality, Method
from ..features import (
    FeatureStore, MeasurementCombination, all_combinations, apply_standardizer,
    feature_columns, fit_standardizer
)
from ..learners.base_learner import DISEASED, HEALTHY, Dataset
from ..learners.model import Hyperparams, fit, predict
from .metrics import ConfusionCounts, compute_metrics
from .splits import SplitPlan

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("sensitivity", "specificity", "precision", "recall", "f1")
ROW_COLUMNS = (
    "disease", "method", "combination", "size", "fold", "tp", "fn", "fp", "tn",
    *METRIC_COLUMNS, "degenerate", "flagged", "error",
)
METHOD_ORDER = [m.value for m in Method]

FoldData = Tuple[Dataset, Dataset]


@lru_cache(maxsize=None)
def _appendix_labels() -> Tuple[str, ...]:
    return tuple(c.label for c in all_combinations())


def combination_rank(label: str) -> Tuple[int, int]:
    """Sort key placing labels in appendix order, unilateral variants after 'both'"""
    combo = MeasurementCombination.parse(label)
    bilateral = _appendix_labels()
    side = {Laterality.BOTH: 0, Laterality.RIGHT: 1, Laterality.LEFT: 2}[combo.laterality]
    return bilateral.index(combo.bilateral().label), side


def cell_seed(seed: int, disease: DiseaseKind, method: Method, combo: MeasurementCombination,
              fold: int) -> int:
    """Depends on the combination label only, so unilateral 'both' cells match the main search"""
    return derive_int_seed(seed, disease.value, method.value, combo.label, fold)


def build_fold_data(plan: SplitPlan, healthy: FeatureStore, diseased: FeatureStore) -> List[FoldData]:
    """Standardised full-width (train, test) datasets per fold.

    The standardiser is fitted on the fold's training rows only. Statistics are
    per column, so slicing a combination out afterwards equals fitting on it.
    """
    folds = []
    for fold in plan.folds:
        def stack(h_ids, d_ids):
            X = np.vstack([healthy.rows(h_ids), diseased.rows(d_ids)])
            y = np.concatenate([np.full(len(h_ids), HEALTHY), np.full(len(d_ids), DISEASED)])
            return X, y, tuple(h_ids) + tuple(d_ids)

        X_train, y_train, train_ids = stack(fold.train_healthy, fold.train_diseased)
        X_test, y_test, test_ids = stack(fold.test_healthy, fold.test_diseased)
        stats = fit_standardizer(X_train)
        folds.append((
            Dataset(apply_standardizer(stats, X_train), y_train, train_ids),
            Dataset(apply_standardizer(stats, X_test), y_test, test_ids),
        ))
    return folds


def select_columns(data: Dataset, combo: MeasurementCombination, order: int) -> Dataset:
    return Dataset(data.X[:, feature_columns(combo, order)], data.y, data.subject_ids)


def _run_cell(disease: DiseaseKind, hyperparams: Hyperparams, combo: MeasurementCombination,
              fold: int, train: Dataset, test: Dataset, seed: int) -> Dict:
    row = {
        "disease": disease.value,
        "method": hyperparams.method.value,
        "combination": combo.label,
        "size": combo.size,
        "fold": fold,
    }
    try:
        model = fit(hyperparams, train, seed)
        counts = ConfusionCounts.from_predictions(test.y, predict(model, test.X))
        metrics = compute_metrics(counts)
    except (VascSimException, FloatingPointError, np.linalg.LinAlgError) as e:
        logger.warning(f"Flagged cell {disease.value}/{hyperparams.method.value}/{combo.label}/fold {fold}: {e}")
        row.update({k: 0 for k in ("tp", "fn", "fp", "tn")})
        row.update({k: np.nan for k in METRIC_COLUMNS})
        row.update(degenerate="", flagged=True, error=str(e))
        return row
    row.update(counts.to_dict())
    row.update(metrics.to_dict())
    row.update(flagged=False, error="")
    return row


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    """Per-fold metric rows keyed by (disease, method, combination, fold)"""
    rows: pd.DataFrame

    def __post_init__(self):
        missing = [c for c in ROW_COLUMNS if c not in self.rows.columns]
        if missing:
            raise EvaluationException(f"Report rows lack columns {missing}")
        if self.rows.duplicated(subset=["disease", "method", "combination", "fold"]).any():
            raise EvaluationException("Report has duplicate (disease, method, combination, fold) rows")

    @classmethod
    def from_rows(cls, rows: Sequence[Dict]) -> "EvaluationReport":
        frame = pd.DataFrame(list(rows), columns=list(ROW_COLUMNS))
        frame["degenerate"] = frame["degenerate"].fillna("").astype(str)
        frame["error"] = frame["error"].fillna("").astype(str)
        frame["flagged"] = frame["flagged"].astype(bool)
        return cls(frame)

    @property
    def diseases(self) -> List[str]:
        return sorted(self.rows["disease"].unique().tolist())

    @property
    def disease(self) -> DiseaseKind:
        diseases = self.diseases
        if len(diseases) != 1:
            raise EvaluationException(f"Report covers {len(diseases)} diseases, expected one")
        return DiseaseKind(diseases[0])

    @property
    def methods(self) -> List[str]:
        present = set(self.rows["method"])
        return [m for m in METHOD_ORDER if m in present]

    @property
    def combinations(self) -> List[str]:
        return sorted(set(self.rows["combination"]), key=combination_rank)

    @property
    def flagged(self) -> pd.DataFrame:
        return self.rows[self.rows["flagged"]]

    @property
    def has_flagged(self) -> bool:
        return bool(self.rows["flagged"].any())

    def for_method(self, method: Union[Method, str]) -> "EvaluationReport":
        name = method.value if isinstance(method, Method) else str(method).upper()
        return EvaluationReport(self.rows[self.rows["method"] == name].reset_index(drop=True))

    def aggregates(self) -> pd.DataFrame:
        """Mean over folds per (disease, method, combination); flagged folds are left out"""
        ok = self.rows[~self.rows["flagged"]]
        keys = ["disease", "method", "combination"]
        means = ok.groupby(keys, sort=False)[list(METRIC_COLUMNS)].mean()
        info = self.rows.groupby(keys, sort=False).agg(
            size=("size", "first"), n_folds=("fold", "count"), flagged=("flagged", "any")
        )
        frame = info.join(means).reset_index()
        frame["_rank"] = frame["combination"].map(combination_rank)
        frame["_method"] = frame["method"].map(METHOD_ORDER.index)
        frame = frame.sort_values(["disease", "_method", "_rank"], kind="stable")
        return frame.drop(columns=["_rank", "_method"]).reset_index(drop=True)

    def appendix_table(self, metric: str = "f1") -> pd.DataFrame:
        """Combinations as rows (appendix order), methods as columns"""
        if metric not in METRIC_COLUMNS:
            raise EvaluationException(f"Unknown metric {metric!r}")
        if len(self.diseases) != 1:
            raise EvaluationException(f"Appendix tables cover one disease, report has {self.diseases}")
        agg = self.aggregates()
        table = agg.pivot(index="combination", columns="method", values=metric)
        table = table.reindex(index=self.combinations, columns=self.methods)
        table.index.name = "combination"
        table.columns.name = None
        return table

    def require_complete(self, methods: Optional[Sequence[str]] = None,
                         combinations: Optional[Sequence[str]] = None, n_folds: Optional[int] = None):
        methods = list(methods or self.methods)
        combinations = list(combinations or [c.label for c in all_combinations()])
        if self.rows.empty:
            raise EvaluationException("Report is empty")
        counts = self.rows.groupby(["method", "combination"])["fold"].nunique()
        expected = n_folds or int(counts.max())
        missing = []
        for m in methods:
            for c in combinations:
                got = int(counts.get((m, c), 0))
                if got != expected:
                    missing.append(f"{m}/{c} has {got} of {expected} folds")
        if missing:
            raise EvaluationException(
                f"Incomplete report: {len(missing)} cells missing, e.g. {missing[:3]}"
            )
        return self

    def write_csvs(self, out_dir: Union[str, Path], prefix: Optional[str] = None) -> List[Path]:
        """Appendix tables for F1, sensitivity and specificity plus the raw fold rows"""
        from ..io.records import atomic_write_text

        out_dir = Path(out_dir)
        prefix = prefix or self.disease.value
        written = []
        for metric in ("f1", "sensitivity", "specificity"):
            path = out_dir / f"{prefix}_{metric}.csv"
            atomic_write_text(path, self.appendix_table(metric).to_csv(float_format="%.4f"))
            written.append(path)
        rows_path = out_dir / f"{prefix}_folds.csv"
        atomic_write_text(rows_path, self.rows.to_csv(index=False, float_format="%.17g"))
        written.append(rows_path)
        logger.info(f"Wrote {prefix} report tables to {out_dir}")
        return written

    @classmethod
    def read_csv(cls, path: Union[str, Path]) -> "EvaluationReport":
        """Load the raw fold rows written by ``write_csvs``"""
        try:
            frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=False,
                                na_values={m: ["", "NaN", "nan"] for m in METRIC_COLUMNS})
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise EvaluationException(f"Cannot read report {path}: {e}")
        frame["flagged"] = frame["flagged"].astype(str).str.lower().isin(["true", "1"])
        return cls.from_rows(frame.to_dict("records"))


def run_combination_search(disease: DiseaseKind, methods: Sequence[Method], plan: SplitPlan,
                           healthy: FeatureStore, diseased: FeatureStore, seed: int,
                           combinations: Optional[Sequence[MeasurementCombination]] = None,
                           hyperparams: Optional[Dict[Method, Hyperparams]] = None,
                           n_jobs: Optional[int] = 1, progress: bool = False) -> EvaluationReport:
    """Train and test every method on every combination and fold of ``plan``.

    Cells run in parallel; each has its own derived seed, so the report does not
    depend on scheduling. Failing cells become flagged rows.
    """
    if not methods:
        raise EvaluationException("No methods requested")
    if plan.disease is not disease:
        raise EvaluationException(f"Split plan is for {plan.disease.value}, not {disease.value}")
    if healthy.order != diseased.order:
        raise EvaluationException("Healthy and diseased feature stores use different orders")
    combinations = list(combinations or all_combinations())
    hyperparams = hyperparams or {}
    chosen = {m: hyperparams.get(m) or Hyperparams.default(m) for m in methods}
    folds = build_fold_data(plan, healthy, diseased)

    tasks = [
        (m, combo, f)
        for m in methods
        for combo in combinations
        for f in range(len(folds))
    ]
    logger.info(
        f"Combination search for {disease.value}: {len(methods)} methods x "
        f"{len(combinations)} combinations x {len(folds)} folds = {len(tasks)} cells"
    )
    order = healthy.order
    rows = Parallel(n_jobs=n_jobs or -1, return_as="generator")(
        delayed(_run_cell)(
            disease, chosen[m], combo, f,
            select_columns(folds[f][0], combo, order),
            select_columns(folds[f][1], combo, order),
            cell_seed(seed, disease, m, combo, f),
        )
        for m, combo, f in tasks
    )
    rows = list(tqdm(rows, total=len(tasks), desc=f"sweep {disease.value}", disable=not progress))
    report = EvaluationReport.from_rows(rows)
    if report.has_flagged:
        logger.warning(f"{len(report.flagged)} of {len(tasks)} {disease.value} cells were flagged")
    return report
