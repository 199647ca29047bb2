import numpy as np
import pandas as pd
import pytest

from conftest import WIDTH, rigged_report, subject_ids
from vascsim.core.exceptions import EvaluationException
from vascsim.core.types import DiseaseKind, Measurement, Method
from vascsim.evaluation.metrics import ConfusionCounts, compute_metrics, f1_score
from vascsim.evaluation.search import (
    EvaluationReport, build_fold_data, combination_rank, run_combination_search
)
from vascsim.evaluation.splits import Fold, SplitPlan, build_split_plan
from vascsim.evaluation.studies import (
    best_combinations, gb_disease_table, low_severity_ratio_study, measurement_count_summary,
    measurement_importance, q1_inclusion_histograms, unilateral_study
)
from vascsim.features import FeatureStore, MeasurementCombination, all_combinations
from vascsim.learners import Hyperparams

SMALL_GB = Hyperparams.default(Method.GB, n_trees=5, max_depth=2)


class TestSplitPlan:
    def test_eight_subjects(self):
        ids = subject_ids(8)
        plan = build_split_plan(ids, ids, seed=1, disease=DiseaseKind.CAS)
        assert len(plan.healthy_ids) == len(plan.diseased_ids) == 4
        assert set(plan.healthy_ids).isdisjoint(plan.diseased_ids)
        assert set(plan.healthy_ids) | set(plan.diseased_ids) == set(ids)
        assert len(plan.folds) == 5
        for fold in plan.folds:
            assert fold.train_size == 6
            assert fold.test_size == 2
            assert len(fold.test_healthy) == len(fold.test_diseased) == 1

    def test_folds_do_not_leak(self, split_plan):
        for fold in split_plan.folds:
            train = set(fold.train_healthy) | set(fold.train_diseased)
            test = set(fold.test_healthy) | set(fold.test_diseased)
            assert not train & test
            assert set(fold.train_healthy) | set(fold.test_healthy) == set(split_plan.healthy_ids)

    def test_odd_count_drops_one_subject(self):
        ids = subject_ids(9)
        plan = build_split_plan(ids, ids, seed=1, disease=DiseaseKind.PAD)
        assert len(plan.healthy_ids) == len(plan.diseased_ids) == 4

    def test_only_twin_paired_subjects(self):
        healthy = subject_ids(12)
        plan = build_split_plan(healthy, healthy[:8], seed=1, disease=DiseaseKind.SAS)
        assert set(plan.healthy_ids) | set(plan.diseased_ids) == set(healthy[:8])

    def test_deterministic(self):
        ids = subject_ids(30)
        a = build_split_plan(ids, ids, seed=5, disease=DiseaseKind.AAA)
        b = build_split_plan(list(reversed(ids)), ids, seed=5, disease=DiseaseKind.AAA)
        assert a == b

    def test_too_few_subjects(self):
        with pytest.raises(EvaluationException):
            build_split_plan(["VP000000"], ["VP000000"], seed=1, disease=DiseaseKind.AAA)
        ids = subject_ids(4)
        with pytest.raises(EvaluationException):
            build_split_plan(ids, ids, seed=1, disease=DiseaseKind.AAA)

    def test_validate_rejects_overlap(self):
        fold = Fold(("a",), ("b",), (), ())
        plan = SplitPlan(DiseaseKind.AAA, ("a", "b"), ("b", "c"), (fold,))
        with pytest.raises(EvaluationException):
            plan.validate()


class TestMetrics:
    def test_symmetric_counts(self):
        m = compute_metrics(ConfusionCounts(tp=2, fn=1, fp=1, tn=2))
        for value in (m.sensitivity, m.specificity, m.precision, m.recall, m.f1):
            assert value == pytest.approx(2.0 / 3.0)
        assert not m.is_degenerate

    def test_perfect_classifier(self):
        m = compute_metrics(ConfusionCounts(tp=100, fn=0, fp=0, tn=100))
        assert (m.sensitivity, m.specificity, m.precision, m.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_no_positive_predictions(self):
        m = compute_metrics(ConfusionCounts(tp=0, fn=5, fp=0, tn=5))
        assert m.precision == 0.0 and m.f1 == 0.0
        assert m.degenerate == ("precision", "f1")
        assert m.to_dict()["degenerate"] == "precision|f1"

    def test_recount_oracle(self):
        rng = np.random.default_rng(0)
        y_true = rng.integers(0, 2, 200)
        y_pred = rng.integers(0, 2, 200)
        counts = ConfusionCounts.from_predictions(y_true, y_pred)
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == 1 and p == 1)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t == 0 and p == 1)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == 1 and p == 0)
        assert (counts.tp, counts.fp, counts.fn) == (tp, fp, fn)
        assert counts.total == 200
        assert f1_score(y_true, y_pred) == pytest.approx(2 * tp / (2 * tp + fp + fn))

    def test_empty_evaluation_set(self):
        with pytest.raises(EvaluationException):
            compute_metrics(ConfusionCounts(0, 0, 0, 0))

    def test_negative_counts(self):
        with pytest.raises(EvaluationException):
            ConfusionCounts(-1, 0, 0, 0)


class TestFoldData:
    def test_standardised_on_training_rows(self, split_plan, healthy_store, diseased_store):
        folds = build_fold_data(split_plan, healthy_store, diseased_store)
        assert len(folds) == 5
        train, test = folds[0]
        assert train.n_features == test.n_features == 132
        np.testing.assert_allclose(train.X.mean(axis=0), 0.0, atol=1e-12)
        assert train.n_samples == 16 and test.n_samples == 8
        assert int(train.y.sum()) == 8 and int(test.y.sum()) == 4


class TestCombinationSearch:
    def test_one_method_one_combination(self, split_plan, healthy_store, diseased_store, q1):
        report = run_combination_search(
            DiseaseKind.AAA, [Method.NB], split_plan, healthy_store, diseased_store, seed=3,
            combinations=[q1],
        )
        assert len(report.rows) == 5
        assert len(report.aggregates()) == 1
        assert report.aggregates()["n_folds"].iloc[0] == 5
        # Q1 carries the class shift, so NB separates the classes well.
        assert report.aggregates()["f1"].iloc[0] > 0.8

    def test_full_search_two_methods(self, ids, healthy_store, diseased_store):
        plan = build_split_plan(ids, ids, seed=11, disease=DiseaseKind.AAA, n_folds=1)
        report = run_combination_search(
            DiseaseKind.AAA, [Method.NB, Method.LR], plan, healthy_store, diseased_store, seed=3,
        )
        assert len(report.aggregates()) == 126
        table = report.appendix_table("f1")
        assert list(table.columns) == ["NB", "LR"]
        assert list(table.index) == [c.label for c in all_combinations()]
        report.require_complete(n_folds=1)

    def test_deterministic(self, split_plan, healthy_store, diseased_store, q1):
        kwargs = dict(combinations=[q1], hyperparams={Method.GB: SMALL_GB})
        a = run_combination_search(DiseaseKind.AAA, [Method.GB], split_plan, healthy_store, diseased_store, 3, **kwargs)
        b = run_combination_search(DiseaseKind.AAA, [Method.GB], split_plan, healthy_store, diseased_store, 3, **kwargs)
        assert a.rows.equals(b.rows)

    def test_plan_for_other_disease(self, split_plan, healthy_store, diseased_store):
        with pytest.raises(EvaluationException):
            run_combination_search(DiseaseKind.CAS, [Method.NB], split_plan, healthy_store, diseased_store, 3)

    def test_boosting_beats_logistic_on_nonlinear_classes(self):
        # Diseased twins sit in a disc, healthy subjects in a surrounding annulus.
        ids = subject_ids(500)
        rng = np.random.default_rng(42)

        def ring(inner, outer):
            radius = np.sqrt(rng.uniform(inner ** 2, outer ** 2, size=len(ids)))
            angle = rng.uniform(0.0, 2.0 * np.pi, size=len(ids))
            matrix = rng.normal(size=(len(ids), WIDTH))
            matrix[:, 0] = radius * np.cos(angle)
            matrix[:, 1] = radius * np.sin(angle)
            return FeatureStore(ids=tuple(ids), matrix=matrix, order=5)

        healthy, diseased = ring(0.7, 1.0), ring(0.0, 0.5)
        plan = build_split_plan(ids, ids, seed=1, disease=DiseaseKind.CAS, n_folds=5)
        report = run_combination_search(
            DiseaseKind.CAS, [Method.LR, Method.GB], plan, healthy, diseased, seed=2,
            combinations=[MeasurementCombination.parse("Q1")],
        )
        assert not report.has_flagged
        assert set(report.aggregates()["n_folds"]) == {5}
        f1 = report.appendix_table("f1").loc["Q1"]
        assert f1["GB"] - f1["LR"] >= 0.15

    def test_failing_cell_is_flagged(self, ids, healthy_store, diseased_store):
        # One Newton step cannot reach this tolerance.
        plan = build_split_plan(ids, ids, seed=11, disease=DiseaseKind.AAA, n_folds=1)
        bad = Hyperparams.default(Method.LR, max_iter=1, tol=1e-300)
        report = run_combination_search(
            DiseaseKind.AAA, [Method.LR], plan, healthy_store, diseased_store, seed=3,
            combinations=[MeasurementCombination.parse("Q1")], hyperparams={Method.LR: bad},
        )
        assert report.has_flagged
        row = report.rows.iloc[0]
        assert row["flagged"] and np.isnan(row["f1"]) and row["error"]


class TestEvaluationReport:
    def test_csv_round_trip(self, tmp_path):
        report = rigged_report(lambda m, c: 0.1 * c.size, methods=("NB", "GB"), n_folds=2)
        written = report.write_csvs(tmp_path)
        assert sorted(p.name for p in written) == ["AAA_f1.csv", "AAA_folds.csv",
                                                   "AAA_sensitivity.csv", "AAA_specificity.csv"]
        loaded = EvaluationReport.read_csv(tmp_path / "AAA_folds.csv")
        np.testing.assert_array_equal(loaded.aggregates()["f1"], report.aggregates()["f1"])
        assert loaded.methods == ["NB", "GB"]

    def test_appendix_csv_shape(self, tmp_path):
        report = rigged_report(lambda m, c: 0.5, methods=("GB",))
        report.write_csvs(tmp_path)
        lines = (tmp_path / "AAA_f1.csv").read_text().strip().splitlines()
        assert lines[0] == "combination,GB"
        assert len(lines) == 64
        assert lines[1] == "Q3,0.5000"

    def test_flagged_folds_left_out_of_means(self):
        report = rigged_report(lambda m, c: 0.6, n_folds=2, combinations=[MeasurementCombination.parse("Q1")])
        rows = report.rows.copy()
        rows.loc[1, ["f1", "sensitivity", "specificity", "precision", "recall"]] = np.nan
        rows.loc[1, "flagged"] = True
        agg = EvaluationReport(rows).aggregates()
        assert agg["f1"].iloc[0] == pytest.approx(0.6)
        assert bool(agg["flagged"].iloc[0])

    def test_duplicate_rows_rejected(self):
        report = rigged_report(lambda m, c: 0.5, combinations=[MeasurementCombination.parse("Q1")])
        with pytest.raises(EvaluationException):
            EvaluationReport(pd.concat([report.rows, report.rows]))

    def test_incomplete_report(self):
        report = rigged_report(lambda m, c: 0.5, combinations=all_combinations()[:10])
        with pytest.raises(EvaluationException):
            report.require_complete()

    def test_combination_rank(self):
        assert combination_rank("Q3") < combination_rank("Q2") < combination_rank("Q3+Q2")
        assert combination_rank("Q1") < combination_rank("Q1@R") < combination_rank("Q1@L")


class TestSummaries:
    def test_measurement_count_summary(self):
        report = rigged_report(lambda m, c: 0.1 * c.size)
        summary = measurement_count_summary(report)
        assert summary["k"].tolist() == [1, 2, 3, 4, 5, 6]
        assert summary["n_combinations"].tolist() == [6, 15, 20, 15, 6, 1]
        np.testing.assert_allclose(summary["mean_f1"], 0.1 * np.arange(1, 7))
        assert summary["best_combination"].iloc[-1] == "Q3+Q2+Q1+P3+P2+P1"

    def test_best_combination_per_count(self):
        report = rigged_report(lambda m, c: 0.9 if c.label == "Q1+P3" else 0.4, methods=("NB", "GB"))
        best = best_combinations(report)
        pairs = best[best["k"] == 2]
        assert pairs["combination"].tolist() == ["Q1+P3", "Q1+P3"]
        assert len(best) == 12

    def test_summary_needs_all_combinations(self):
        report = rigged_report(lambda m, c: 0.5, combinations=all_combinations()[:6])
        with pytest.raises(EvaluationException):
            measurement_count_summary(report)

    def test_q1_histograms(self):
        report = rigged_report(lambda m, c: 0.5 + (0.2 if c.includes(Measurement.Q1) else 0.0))
        hist = q1_inclusion_histograms(report)
        assert int(hist.include.sum()) == 32
        assert int(hist.exclude.sum()) == 31
        assert hist.include_mean - hist.exclude_mean == pytest.approx(0.2)
        assert len(hist.to_frame()) == 20

    def test_ratio_identical_reports(self):
        report = rigged_report(lambda m, c: 0.3 + 0.01 * c.size)
        table = low_severity_ratio_study(report, report)
        np.testing.assert_allclose(table["ratio"], 1.0)
        assert len(table) == 63

    def test_ratio_scaled_report(self):
        base = rigged_report(lambda m, c: 0.3 + 0.01 * c.size)
        low = rigged_report(lambda m, c: 0.95 * (0.3 + 0.01 * c.size), disease="AAA_L")
        np.testing.assert_allclose(low_severity_ratio_study(base, low)["ratio"], 0.95)

    def test_ratio_zero_reference(self):
        base = rigged_report(lambda m, c: 0.0 if c.label == "Q3" else 0.5)
        table = low_severity_ratio_study(base, base).set_index("combination")
        assert np.isnan(table.loc["Q3", "ratio"])

    def test_ratio_coverage_mismatch(self):
        base = rigged_report(lambda m, c: 0.5)
        low = rigged_report(lambda m, c: 0.5, combinations=all_combinations()[:5], disease="AAA_L")
        with pytest.raises(EvaluationException):
            low_severity_ratio_study(base, low)

    def test_gb_disease_table(self):
        reports = {
            DiseaseKind.PAD: rigged_report(lambda m, c: 0.7, disease="PAD"),
            DiseaseKind.CAS: rigged_report(lambda m, c: 0.4, disease="CAS"),
        }
        table = gb_disease_table(reports)
        assert list(table.columns) == ["CAS", "PAD"]
        assert table.index[0] == "Q3"
        assert table.loc["Q1", "PAD"] == pytest.approx(0.7)


class TestStudies:
    def test_unilateral_rows_and_both_matches_search(self, split_plan, healthy_store, diseased_store, q1):
        table = unilateral_study(split_plan, healthy_store, diseased_store, seed=3, hyperparams=SMALL_GB)
        assert len(table) == 6
        assert table["measurement"].tolist() == ["Q1", "Q1", "Q1", "P3", "P3", "P3"]
        assert table["sides"].tolist() == ["R", "L", "Both"] * 2
        assert table["n_features"].tolist() == [11, 11, 22] * 2

        main = run_combination_search(
            DiseaseKind.AAA, [Method.GB], split_plan, healthy_store, diseased_store, seed=3,
            combinations=[q1], hyperparams={Method.GB: SMALL_GB},
        ).aggregates().iloc[0]
        both = table.iloc[2]
        assert both["sensitivity"] == main["sensitivity"]
        assert both["specificity"] == main["specificity"]

    def test_measurement_importance(self, split_plan, healthy_store, diseased_store):
        table = measurement_importance(split_plan, healthy_store, diseased_store, seed=3,
                                       hyperparams=SMALL_GB, n_folds=2)
        assert table["measurement"].tolist() == ["Q1", "Q2", "Q3", "P1", "P2", "P3"]
        assert table["importance"].sum() == pytest.approx(1.0)
        assert table["percent"].sum() == pytest.approx(100.0)
        assert table.set_index("measurement")["importance"].idxmax() == "Q1"

    def test_importance_needs_boosting(self, split_plan, healthy_store, diseased_store):
        with pytest.raises(EvaluationException):
            measurement_importance(split_plan, healthy_store, diseased_store, seed=3,
                                   hyperparams=Hyperparams.default(Method.NB))
