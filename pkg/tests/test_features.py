import numpy as np
import pytest

from vascsim.core.exceptions import FeatureException
from vascsim.core.types import Laterality, Measurement
from vascsim.features import (
    FULL_COMBINATION, FeatureStore, FourierSeries, MeasurementCombination, all_combinations,
    apply_standardizer, feature_columns, feature_names, fit_fourier, fit_standardizer,
    invert_standardizer, parse_combinations, sample_times
)


def dft_oracle(samples, order):
    m = samples.shape[0]
    k = np.arange(m)
    sine = [2.0 / m * np.sum(samples * np.sin(2 * np.pi * n * k / m)) for n in range(1, order + 1)]
    cosine = [2.0 / m * np.sum(samples * np.cos(2 * np.pi * n * k / m)) for n in range(1, order + 1)]
    return np.concatenate(([samples.mean()], sine, cosine))


class TestFitFourier:
    def test_pure_cosine(self):
        period = 0.8
        t = sample_times(period, 64)
        fs = fit_fourier(3.0 * np.cos(2 * np.pi * t / period), period, order=5)
        assert fs.cosine[1] == pytest.approx(3.0, abs=1e-10)
        others = np.delete(fs.coefficients(), 6)
        assert np.all(np.abs(others) <= 1e-10)

    def test_constant(self):
        fs = fit_fourier(np.full(32, 7.0), 1.0, order=5)
        assert fs.cosine[0] == pytest.approx(7.0, abs=1e-12)
        assert np.all(np.abs(fs.coefficients()[1:]) <= 1e-10)

    def test_matches_direct_dft(self):
        rng = np.random.default_rng(0)
        t = sample_times(1.0, 128)
        smooth = sum(rng.normal() * np.cos(2 * np.pi * n * t + rng.uniform(0, 2 * np.pi))
                     for n in range(0, 9))
        fs = fit_fourier(smooth, 1.0, order=5)
        np.testing.assert_allclose(fs.coefficients(), dft_oracle(smooth, 5), rtol=1e-9, atol=1e-12)

    def test_fit_is_linear(self):
        rng = np.random.default_rng(1)
        x, y = rng.normal(size=40), rng.normal(size=40)
        combined = fit_fourier(2.0 * x - 3.0 * y, 0.9).coefficients()
        separate = 2.0 * fit_fourier(x, 0.9).coefficients() - 3.0 * fit_fourier(y, 0.9).coefficients()
        np.testing.assert_allclose(combined, separate, atol=1e-12)

    def test_too_few_samples(self):
        with pytest.raises(FeatureException):
            fit_fourier(np.zeros(10), 1.0, order=5)

    def test_non_finite_samples(self):
        samples = np.zeros(16)
        samples[3] = np.nan
        with pytest.raises(FeatureException):
            fit_fourier(samples, 1.0, order=5)


class TestFourierSeries:
    def test_constant_series(self):
        fs = FourierSeries(period=1.0, sine=np.zeros(3), cosine=[4.0, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(fs.evaluate(np.linspace(0, 1, 7)), 4.0)

    def test_sine_vanishes_at_half_period(self):
        fs = FourierSeries(period=2.0, sine=[1.0], cosine=[0.0, 0.0])
        assert fs.evaluate(1.0) == pytest.approx(0.0, abs=1e-12)

    def test_periodic(self):
        rng = np.random.default_rng(3)
        fs = FourierSeries.from_coefficients(0.75, rng.normal(size=11))
        t = np.linspace(0.0, 0.75, 13)
        np.testing.assert_allclose(fs.evaluate(t), fs.evaluate(t + 0.75), atol=1e-10)

    def test_coefficient_layout(self):
        coeffs = np.arange(11.0)
        fs = FourierSeries.from_coefficients(1.0, coeffs)
        assert fs.cosine[0] == 0.0
        np.testing.assert_array_equal(fs.sine, [1, 2, 3, 4, 5])
        np.testing.assert_array_equal(fs.cosine[1:], [6, 7, 8, 9, 10])
        np.testing.assert_array_equal(fs.coefficients(), coeffs)

    def test_even_coefficient_count_rejected(self):
        with pytest.raises(FeatureException):
            FourierSeries.from_coefficients(1.0, np.zeros(10))


class TestCombinations:
    def test_sixty_three_combinations(self):
        combos = all_combinations()
        assert len(combos) == 63
        sizes = [sum(1 for c in combos if c.size == k) for k in range(1, 7)]
        assert sizes == [6, 15, 20, 15, 6, 1]
        assert combos[0].label == "Q3"
        assert combos[-1].label == "Q3+Q2+Q1+P3+P2+P1"

    def test_label_uses_table_order(self):
        combo = MeasurementCombination.of("P1", "Q1")
        assert combo.label == "Q1+P1"
        assert combo.canonical == [Measurement.Q1, Measurement.P1]

    def test_parse_unilateral(self):
        combo = MeasurementCombination.parse("q1+p3@R")
        assert combo.laterality is Laterality.RIGHT
        assert combo.label == "Q1+P3@R"
        assert combo.sites == ["Q1_R", "P3_R"]
        assert combo.bilateral().label == "Q1+P3"

    def test_parse_list(self):
        assert len(parse_combinations("all")) == 63
        assert [c.label for c in parse_combinations("q1, q2+p2")] == ["Q1", "Q2+P2"]
        with pytest.raises(FeatureException):
            parse_combinations(" , ")
        with pytest.raises(FeatureException):
            parse_combinations("Q9")

    def test_empty_combination(self):
        with pytest.raises(FeatureException):
            MeasurementCombination(frozenset())


class TestFeatureColumns:
    def test_lengths(self):
        assert len(feature_columns(MeasurementCombination.of("Q1"))) == 22
        assert len(feature_columns(FULL_COMBINATION)) == 132
        assert len(feature_columns(MeasurementCombination.of("P3", laterality=Laterality.RIGHT))) == 11

    def test_positions(self):
        np.testing.assert_array_equal(feature_columns(MeasurementCombination.of("Q1")), np.arange(22))
        np.testing.assert_array_equal(feature_columns(MeasurementCombination.of("P3")), np.arange(110, 132))
        np.testing.assert_array_equal(
            feature_columns(MeasurementCombination.of("P3", laterality=Laterality.LEFT)), np.arange(121, 132)
        )
        np.testing.assert_array_equal(feature_columns(FULL_COMBINATION), np.arange(132))

    def test_names(self):
        names = feature_names(MeasurementCombination.of("Q1"))
        assert names[:3] == ["Q1_R_b0", "Q1_R_a1", "Q1_R_a2"]
        assert names[11] == "Q1_L_b0"
        assert names[-1] == "Q1_L_b5"


class TestStandardizer:
    def test_simple_column(self):
        stats = fit_standardizer(np.array([[1.0], [2.0], [3.0]]))
        assert stats.mean[0] == pytest.approx(2.0)
        assert stats.std[0] == pytest.approx(np.sqrt(2.0 / 3.0))
        assert apply_standardizer(stats, np.array([[1.0], [2.0], [3.0]])).mean() == pytest.approx(0.0)

    def test_constant_column(self):
        train = np.column_stack([np.full(5, 4.2), np.arange(5.0)])
        stats = fit_standardizer(train)
        assert stats.degenerate.tolist() == [True, False]
        assert stats.std[0] == 1.0
        np.testing.assert_array_equal(apply_standardizer(stats, train)[:, 0], 0.0)

    def test_train_statistics_only(self):
        rng = np.random.default_rng(4)
        train = rng.normal(size=(30, 4))
        z = apply_standardizer(fit_standardizer(train), train)
        np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-12)

    def test_inverse(self):
        rng = np.random.default_rng(5)
        matrix = rng.normal(3.0, 2.0, size=(100, 5))
        stats = fit_standardizer(matrix)
        restored = invert_standardizer(stats, apply_standardizer(stats, matrix))
        np.testing.assert_allclose(restored, matrix, rtol=1e-12, atol=1e-12)

    def test_width_mismatch(self):
        stats = fit_standardizer(np.ones((3, 2)) * [[1.0, 2.0]] + np.arange(3)[:, None])
        with pytest.raises(FeatureException):
            apply_standardizer(stats, np.zeros((2, 3)))

    def test_empty_training_matrix(self):
        with pytest.raises(FeatureException):
            fit_standardizer(np.zeros((0, 3)))


class TestFeatureStore:
    def test_rows_by_id(self, healthy_store, ids):
        rows = healthy_store.rows([ids[3], ids[0]])
        np.testing.assert_array_equal(rows[0], healthy_store.matrix[3])
        np.testing.assert_array_equal(rows[1], healthy_store.matrix[0])
        assert ids[5] in healthy_store
        assert len(healthy_store) == 24

    def test_unknown_id(self, healthy_store):
        with pytest.raises(FeatureException):
            healthy_store.rows(["VP999999"])

    def test_shape_checked(self):
        with pytest.raises(FeatureException):
            FeatureStore(ids=("a", "b"), matrix=np.zeros((2, 131)))

    def test_duplicate_ids(self):
        with pytest.raises(FeatureException):
            FeatureStore(ids=("a", "a"), matrix=np.zeros((2, 132)))
