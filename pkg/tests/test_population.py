import numpy as np
import pytest

from vascsim.core.exceptions import NetworkException
from vascsim.core.types import SEVERITY_BOUNDS, SITE_NAMES, DiseaseKind, Side, SurrogateConfig
from vascsim.haemo.population import (
    SubjectScalings, generate_population, make_subject, network_config_for, subject_id
)

TINY = SurrogateConfig(nodes_per_segment=2)


class TestSubjects:
    def test_ids(self):
        assert subject_id(7) == "VP000007"

    def test_twins_share_scalings(self):
        healthy = make_subject(3, 5, None, TINY)
        twin = make_subject(3, 5, DiseaseKind.PAD, TINY)
        assert healthy.scalings == twin.scalings
        assert healthy.is_healthy and not twin.is_healthy
        assert twin.disease.side in (Side.RIGHT, Side.LEFT)

    def test_subjects_differ(self):
        assert make_subject(3, 0, None, TINY).scalings != make_subject(3, 1, None, TINY).scalings

    @pytest.mark.parametrize("kind", [DiseaseKind.AAA, DiseaseKind.AAA_L])
    def test_aneurysm_severity_bounds(self, kind):
        low, high = SEVERITY_BOUNDS[kind]
        for index in range(50):
            spec = make_subject(11, index, kind, TINY).disease
            assert low <= spec.severity <= high
            assert spec.side is Side.NOT_APPLICABLE

    def test_period_within_range(self):
        for index in range(30):
            period = make_subject(1, index, None, TINY).scalings.heart_period
            assert TINY.period_range[0] <= period <= TINY.period_range[1]

    def test_network_follows_scalings(self):
        scalings = SubjectScalings(heart_period=0.45, stiffness_scale=1.2, resistance_scale=0.9, area_scale=1.1)
        config = network_config_for(scalings, TINY)
        assert config.heart_rate_scale == pytest.approx(2.0)
        assert config.nodes_per_segment == 2

    def test_scalings_dict_round_trip(self):
        scalings = make_subject(2, 0, None, TINY).scalings
        assert SubjectScalings.from_dict(scalings.to_dict()) == scalings


@pytest.mark.slow
class TestGeneratePopulation:
    def test_deterministic(self):
        a = generate_population(2, DiseaseKind.CAS, seed=4, config=TINY)
        b = generate_population(2, DiseaseKind.CAS, seed=4, config=TINY)
        for (sa, wa), (sb, wb) in zip(a, b):
            assert sa == sb
            for site in SITE_NAMES:
                np.testing.assert_array_equal(wa.series[site].coefficients(), wb.series[site].coefficients())

    def test_twin_waveforms_differ_only_by_disease(self):
        healthy = generate_population(2, None, seed=4, config=TINY)
        diseased = generate_population(2, DiseaseKind.AAA, seed=4, config=TINY)
        for (h, hw), (d, dw) in zip(healthy, diseased):
            assert h.id == d.id == hw.patient_id
            assert hw.period == dw.period
            assert any(
                not np.allclose(hw.series[s].coefficients(), dw.series[s].coefficients()) for s in SITE_NAMES
            )

    def test_harmonics_set_waveform_order(self):
        config = SurrogateConfig(nodes_per_segment=2, harmonics=3)
        (_, waveforms), = generate_population(1, seed=0, config=config)
        assert waveforms.order == 3

    def test_empty_population(self):
        with pytest.raises(NetworkException):
            generate_population(0)

    def test_parallel_progress_matches_serial(self):
        serial = generate_population(3, DiseaseKind.SAS, seed=4, config=TINY, n_jobs=1)
        parallel = generate_population(3, DiseaseKind.SAS, seed=4, config=TINY, n_jobs=2, progress=True)
        assert [s for s, _ in parallel] == [s for s, _ in serial]
        for (_, wa), (_, wb) in zip(serial, parallel):
            for site in SITE_NAMES:
                np.testing.assert_array_equal(wa.series[site].coefficients(), wb.series[site].coefficients())
