import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from .core.exceptions import EvaluationException, PersistenceException, RecordValidationException
from .core.types import Cohort, DiseaseKind, Laterality, Measurement, Method, RunConfig
from .evaluation.search import EvaluationReport, build_fold_data, run_combination_search, select_columns
from .evaluation.splits import SplitPlan, build_split_plan
from .evaluation.studies import (
    best_combinations, gb_disease_table, low_severity_ratio_study, measurement_count_summary,
    measurement_importance, q1_inclusion_histograms, unilateral_study
)
from .features import FULL_COMBINATION, FeatureStore, MeasurementCombination, all_combinations
from .haemo.population import generate_population
from .io.records import (
    PatientRecord, atomic_write_text, check_twins, manifest_matches, read_cohort,
    sweep_fingerprint, write_cohort, write_manifest
)
from .learners.grid_search import GridSearchResult, default_grid, expand_grid_spec, grid_search
from .learners.model import Hyperparams

logger = logging.getLogger(__name__)

REPORT_DIR = "reports"


@dataclass
class SweepOutcome:
    reports: Dict[DiseaseKind, EvaluationReport]
    outputs: List[Path] = field(default_factory=list)
    skipped: bool = False

    @property
    def n_flagged(self) -> int:
        return sum(len(r.flagged) for r in self.reports.values())


def write_table(path: Path, frame: pd.DataFrame, index: bool = False) -> Path:
    atomic_write_text(path, frame.to_csv(index=index, float_format="%.4f"))
    return path


class Experiment:
    """
    Central orchestrator: configuration -> cohorts -> split plans -> reports
    """

    def __init__(self, config: RunConfig, output_dir: Optional[str] = None,
                 n_jobs: Optional[int] = None, progress: bool = False):
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir)
        self.n_jobs = n_jobs if n_jobs is not None else config.jobs
        self.progress = progress
        self._records: Dict[Cohort, List[PatientRecord]] = {}
        logger.info(f"Initialized experiment (seed {config.seed}) in {self.output_dir}")

    @property
    def report_dir(self) -> Path:
        return self.output_dir / REPORT_DIR

    def cohort_path(self, cohort: Cohort) -> Path:
        return self.output_dir / cohort.filename

    def configured_diseases(self) -> List[DiseaseKind]:
        return [k for k in DiseaseKind if self.config.population.count(k) > 0]

    # ------------------------------------------------------------------
    # Cohorts
    # ------------------------------------------------------------------

    def generate(self, diseases: Optional[Sequence[DiseaseKind]] = None) -> Dict[Cohort, Path]:
        """Simulate VPD_H and the requested diseased twin cohorts"""
        diseases = list(diseases) if diseases is not None else self.configured_diseases()
        seed = self.config.seed
        surrogate = self.config.surrogate
        written = {}

        plan = [(Cohort.H, None, self.config.population.healthy)]
        for kind in diseases:
            count = self.config.population.count(kind)
            if count == 0:
                logger.warning(f"Skipping {kind.value}: population count is 0")
                continue
            plan.append((Cohort(kind.value), kind, count))

        for cohort, kind, count in plan:
            subjects = generate_population(
                count, disease=kind, seed=seed, config=surrogate,
                n_jobs=self.n_jobs, progress=self.progress,
            )
            records = [
                PatientRecord.from_waveform_set(waveforms, cohort, subject.disease)
                for subject, waveforms in subjects
            ]
            path = self.cohort_path(cohort)
            write_cohort(path, records, cohort)
            self._records[cohort] = records
            written[cohort] = path
        return written

    def load_cohort(self, cohort: Cohort) -> List[PatientRecord]:
        if cohort not in self._records:
            path = self.cohort_path(cohort)
            if not path.exists():
                raise PersistenceException(f"Missing cohort file {path}; run 'generate' first")
            self._records[cohort] = read_cohort(path, cohort)
        return self._records[cohort]

    def feature_store(self, cohort: Cohort) -> FeatureStore:
        return FeatureStore.from_records(self.load_cohort(cohort))

    def split_plan(self, disease: DiseaseKind) -> SplitPlan:
        healthy = self.load_cohort(Cohort.H)
        diseased = self.load_cohort(Cohort(disease.value))
        problems = check_twins(healthy, diseased)
        if problems:
            raise RecordValidationException(f"{disease.value} cohort is not twin-paired with VPD_H", problems)
        return build_split_plan(
            [r.id for r in healthy], [r.id for r in diseased],
            seed=self.config.seed, disease=disease, n_folds=self.config.evaluation.n_folds,
        )

    def hyperparams(self, method: Method) -> Hyperparams:
        overrides = self.config.learners.get(method.value, {})
        return Hyperparams.default(method, **overrides)

    # ------------------------------------------------------------------
    # Searches and studies
    # ------------------------------------------------------------------

    def run_search(self, disease: DiseaseKind, methods: Optional[Sequence[Method]] = None,
                   combinations: Optional[Sequence[MeasurementCombination]] = None) -> EvaluationReport:
        methods = list(methods or self.config.method_list)
        return run_combination_search(
            disease, methods, self.split_plan(disease),
            self.feature_store(Cohort.H), self.feature_store(Cohort(disease.value)),
            seed=self.config.seed,
            combinations=combinations,
            hyperparams={m: self.hyperparams(m) for m in methods},
            n_jobs=self.n_jobs,
            progress=self.progress,
        )

    def sweep(self, diseases: Optional[Sequence[DiseaseKind]] = None,
              methods: Optional[Sequence[Method]] = None,
              combinations: Optional[Sequence[MeasurementCombination]] = None) -> SweepOutcome:
        """Search every disease, export report tables and summaries; resumable"""
        diseases = list(diseases or self.configured_diseases())
        methods = list(methods or self.config.method_list)
        combos = list(combinations or all_combinations())
        inputs = [self.cohort_path(Cohort.H)] + [self.cohort_path(Cohort(d.value)) for d in diseases]
        missing = [str(p) for p in inputs if not p.exists()]
        if missing:
            raise PersistenceException(f"Missing cohort files: {missing}; run 'generate' first")

        settings = self.config.to_dict()
        settings.pop("output_dir")
        settings.pop("jobs")
        settings.update(
            sweep_diseases=[d.value for d in diseases],
            sweep_methods=[m.value for m in methods],
            sweep_combinations=[c.label for c in combos],
        )
        fingerprint = sweep_fingerprint(settings, inputs)
        if manifest_matches(self.report_dir, fingerprint):
            logger.info("Sweep outputs are up to date; nothing to do")
            reports = {
                d: EvaluationReport.read_csv(self.report_dir / f"{d.value}_folds.csv") for d in diseases
            }
            return SweepOutcome(reports=reports, skipped=True)

        reports: Dict[DiseaseKind, EvaluationReport] = {}
        outputs: List[Path] = []
        for disease in diseases:
            report = self.run_search(disease, methods, combos)
            reports[disease] = report
            outputs.extend(report.write_csvs(self.report_dir))
            outputs.extend(self._write_summaries(disease, report, combos))
        outputs.extend(self._write_cross_disease(reports, methods, combos))

        write_manifest(self.report_dir, fingerprint, outputs)
        outcome = SweepOutcome(reports=reports, outputs=outputs)
        logger.info(f"Sweep finished: {len(outputs)} files, {outcome.n_flagged} flagged cells")
        return outcome

    def _write_summaries(self, disease: DiseaseKind, report: EvaluationReport,
                         combos: Sequence[MeasurementCombination]) -> List[Path]:
        if len(combos) != len(all_combinations()) or any(c.laterality is not Laterality.BOTH for c in combos):
            logger.info(f"Skipping {disease.value} summaries: they need the full bilateral search")
            return []
        try:
            return self.write_summaries(disease, report)
        except EvaluationException as e:
            logger.warning(f"Skipping {disease.value} summaries: {e}")
            return []

    def _write_cross_disease(self, reports: Dict[DiseaseKind, EvaluationReport],
                             methods: Sequence[Method],
                             combos: Sequence[MeasurementCombination]) -> List[Path]:
        outputs = []
        if Method.GB in methods and len(reports) > 1:
            outputs.append(write_table(self.report_dir / "GB_by_disease_f1.csv",
                                       gb_disease_table(reports), index=True))
        if Method.GB in methods and DiseaseKind.AAA in reports and DiseaseKind.AAA_L in reports:
            outputs.append(self.write_ratio_study(reports[DiseaseKind.AAA], reports[DiseaseKind.AAA_L]))
        return outputs

    def load_report(self, disease: DiseaseKind) -> EvaluationReport:
        path = self.report_dir / f"{disease.value}_folds.csv"
        if not path.exists():
            raise PersistenceException(f"No sweep results for {disease.value} at {path}; run 'sweep' first")
        return EvaluationReport.read_csv(path)

    def write_summaries(self, disease: DiseaseKind, report: Optional[EvaluationReport] = None) -> List[Path]:
        """Measurement-count summary, best combinations and Q1 histograms"""
        report = report or self.load_report(disease)
        histograms = q1_inclusion_histograms(report, bins=self.config.evaluation.histogram_bins)
        out = self.report_dir
        return [
            write_table(out / f"{disease.value}_measurement_count.csv", measurement_count_summary(report)),
            write_table(out / f"{disease.value}_best_combinations.csv", best_combinations(report)),
            write_table(out / f"{disease.value}_q1_histogram.csv", histograms.to_frame()),
        ]

    def write_ratio_study(self, report_aaa: Optional[EvaluationReport] = None,
                          report_aaa_l: Optional[EvaluationReport] = None) -> Path:
        report_aaa = report_aaa or self.load_report(DiseaseKind.AAA)
        report_aaa_l = report_aaa_l or self.load_report(DiseaseKind.AAA_L)
        table = low_severity_ratio_study(report_aaa, report_aaa_l)
        return write_table(self.report_dir / "AAA_L_vs_AAA_ratio.csv", table)

    def grid_search(self, method: Method, disease: DiseaseKind,
                    combination: MeasurementCombination = FULL_COMBINATION) -> GridSearchResult:
        # Raises for the families without an architecture grid, whatever the config says.
        grid = default_grid(method)
        spec = self.config.grids.get(method.value)
        if spec:
            grid = expand_grid_spec(spec)
        plan = self.split_plan(disease)
        healthy = self.feature_store(Cohort.H)
        folds = [
            (select_columns(train, combination, healthy.order), select_columns(test, combination, healthy.order))
            for train, test in build_fold_data(plan, healthy, self.feature_store(Cohort(disease.value)))
        ]
        result = grid_search(
            method, grid, folds, seed=self.config.seed, base=self.hyperparams(method),
            n_jobs=self.n_jobs, progress=self.progress,
        )
        stem = f"{disease.value}_{method.value}"
        if combination != FULL_COMBINATION:
            stem = f"{stem}_{combination.label}"
        write_table(self.report_dir / f"{stem}_grid.csv", result.table)
        return result

    def unilateral(self, disease: DiseaseKind = DiseaseKind.AAA,
                   measurements: Sequence[Measurement] = (Measurement.Q1, Measurement.P3)) -> pd.DataFrame:
        table = unilateral_study(
            self.split_plan(disease), self.feature_store(Cohort.H),
            self.feature_store(Cohort(disease.value)), self.config.seed,
            measurements=measurements, hyperparams=self.hyperparams(Method.GB), n_jobs=self.n_jobs,
        )
        write_table(self.report_dir / f"{disease.value}_unilateral.csv", table)
        return table

    def importance(self, disease: DiseaseKind) -> pd.DataFrame:
        table = measurement_importance(
            self.split_plan(disease), self.feature_store(Cohort.H),
            self.feature_store(Cohort(disease.value)), self.config.seed,
            hyperparams=self.hyperparams(Method.GB),
            n_folds=self.config.evaluation.gb_importance_folds,
        )
        write_table(self.report_dir / f"{disease.value}_importance.csv", table)
        return table
