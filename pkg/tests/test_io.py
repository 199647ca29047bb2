import json

import numpy as np
import pandas as pd
import pytest
import yaml

from vascsim.core.exceptions import ConfigException, PersistenceException, RecordValidationException
from vascsim.core.types import SITE_NAMES, Cohort, DiseaseKind, DiseaseSpec, Side
from vascsim.features import FourierSeries, sample_times
from vascsim.io.importer import ImportDescriptor, export_cohort_table, import_vpd, load_descriptor
from vascsim.io.records import (
    MANIFEST_NAME, PatientRecord, atomic_write_text, check_twins, load_config, manifest_matches,
    read_cohort, sweep_fingerprint, write_cohort, write_manifest
)

AAA_SPEC = DiseaseSpec(kind=DiseaseKind.AAA, severity=8.0, b=0.2, e=0.8, r=0.5)


def record(subject, cohort=Cohort.H, disease=None, seed=0, period=0.9):
    rng = np.random.default_rng(seed)
    sites = {site: rng.normal(size=11) for site in SITE_NAMES}
    return PatientRecord(id=subject, cohort=cohort, period=period, sites=sites, disease=disease)


def cohort(cohort=Cohort.H, disease=None, n=3):
    return [record(f"VP{i:06d}", cohort, disease, seed=i) for i in range(n)]


def assert_same_records(actual, expected):
    assert [r.id for r in actual] == [r.id for r in expected]
    for a, e in zip(actual, expected):
        assert a.cohort is e.cohort
        assert a.period == e.period
        assert a.disease == e.disease
        for site in SITE_NAMES:
            np.testing.assert_array_equal(a.sites[site], e.sites[site])


class TestPatientRecord:
    def test_valid_record(self):
        assert record("VP000001").problems() == []

    def test_problems_are_collected(self):
        bad = record("VP000001", cohort=Cohort.CAS)
        del bad.sites["P3_L"]
        bad.sites["Q1_R"] = np.array([1.0, np.nan, 2.0])
        problems = bad.problems()
        assert any("missing sites ['P3_L']" in p for p in problems)
        assert any("Q1_R has non-finite" in p for p in problems)
        assert any("lacks its disease" in p for p in problems)

    def test_disease_must_match_cohort(self):
        spec = DiseaseSpec(kind=DiseaseKind.PAD, severity=0.6, b=0.2, e=0.8, r=0.5, side=Side.LEFT)
        assert any("does not match" in p for p in record("VP1", Cohort.CAS, spec).problems())
        assert any("no disease" in p for p in record("VP1", Cohort.H, spec).problems())

    def test_from_dict_reports_every_problem(self):
        data = record("VP000001").to_dict()
        data["period"] = -1.0
        data["sites"]["Q2_L"] = [1.0, 2.0]
        with pytest.raises(RecordValidationException) as info:
            PatientRecord.from_dict(data)
        assert len(info.value.problems) >= 2

    def test_waveform_set_round_trip(self):
        r = record("VP000002")
        back = PatientRecord.from_waveform_set(r.to_waveform_set(), Cohort.H)
        assert_same_records([back], [r])
        assert r.order == 5
        assert r.feature_vector().shape == (132,)


class TestCohortFiles:
    def test_write_and_read(self, tmp_path):
        records = cohort(Cohort.AAA, AAA_SPEC)
        path = tmp_path / Cohort.AAA.filename
        write_cohort(path, records, Cohort.AAA)
        assert path.name == "VPD_AAA.jsonl"
        assert_same_records(read_cohort(path, Cohort.AAA), records)

    def test_bad_line_is_located(self, tmp_path):
        path = tmp_path / "VPD_H.jsonl"
        path.write_text(json.dumps(record("VP000000").to_dict()) + "\n{broken\n")
        with pytest.raises(RecordValidationException) as info:
            read_cohort(path)
        assert info.value.problems[0].startswith("line 2")

    def test_wrong_cohort_and_duplicates(self, tmp_path):
        records = cohort(n=2) + [record("VP000000", seed=5)]
        with pytest.raises(RecordValidationException) as info:
            write_cohort(tmp_path / "x.jsonl", records)
        assert any("duplicate id VP000000" in p for p in info.value.problems)
        with pytest.raises(RecordValidationException):
            write_cohort(tmp_path / "y.jsonl", cohort(n=2), Cohort.CAS)

    def test_missing_file(self, tmp_path):
        with pytest.raises(PersistenceException):
            read_cohort(tmp_path / "absent.jsonl")

    def test_atomic_write_leaves_no_temporaries(self, tmp_path):
        target = tmp_path / "nested" / "out.txt"
        atomic_write_text(target, "first")
        atomic_write_text(target, "second")
        assert target.read_text() == "second"
        assert [p.name for p in target.parent.iterdir()] == ["out.txt"]

    def test_check_twins(self):
        healthy = cohort(n=2)
        diseased = [
            record("VP000000", Cohort.AAA, AAA_SPEC),
            record("VP000001", Cohort.AAA, AAA_SPEC, period=1.0),
            record("VP000009", Cohort.AAA, AAA_SPEC),
        ]
        problems = check_twins(healthy, diseased)
        assert len(problems) == 2
        assert "VP000001" in problems[0]
        assert "no healthy twin" in problems[1]


class TestImporter:
    def test_export_then_import_is_lossless(self, tmp_path):
        records = cohort(Cohort.AAA, AAA_SPEC)
        table = tmp_path / "table.csv"
        descriptor_path = tmp_path / "descriptor.yml"
        export_cohort_table(records, table, descriptor_path)
        result = import_vpd(table, load_descriptor(descriptor_path), out_path=tmp_path / "VPD_AAA.jsonl")
        assert result.problems == []
        assert_same_records(result.records, records)
        assert_same_records(read_cohort(tmp_path / "VPD_AAA.jsonl"), records)

    def test_healthy_export_has_no_disease(self, tmp_path):
        records = cohort()
        descriptor = export_cohort_table(records, tmp_path / "h.csv")
        frame = pd.read_csv(tmp_path / "h.csv")
        assert list(frame.columns[:3]) == ["id", "period", "disease"]
        assert frame.shape == (3, 3 + 132)
        assert all(r.disease is None for r in import_vpd(tmp_path / "h.csv", descriptor).records)

    def test_descriptor_must_map_every_site(self):
        data = export_descriptor_dict()
        del data["sites"]["P3_L"]
        with pytest.raises(PersistenceException, match="P3_L"):
            ImportDescriptor.from_dict(data)

    def test_descriptor_column_count(self):
        data = export_descriptor_dict()
        data["sites"]["Q1_R"] = {"coefficients": ["a", "b", "c"]}
        with pytest.raises(PersistenceException, match="Q1_R"):
            ImportDescriptor.from_dict(data)

    def test_non_finite_row(self, tmp_path):
        table = tmp_path / "table.csv"
        descriptor = export_cohort_table(cohort(), table)
        frame = pd.read_csv(table, float_precision="round_trip", dtype={"id": str})
        frame.loc[1, "Q1_R_a2"] = np.nan
        frame.to_csv(table, index=False, float_format="%.17g")

        with pytest.raises(RecordValidationException) as info:
            import_vpd(table, descriptor, out_path=tmp_path / "none.jsonl")
        assert info.value.problems == ["row 1: site Q1_R has non-finite values"]
        assert not (tmp_path / "none.jsonl").exists()

        result = import_vpd(table, descriptor, out_path=tmp_path / "VPD_H.jsonl", skip_invalid=True)
        assert [r.id for r in result.records] == ["VP000000", "VP000002"]
        assert len(read_cohort(tmp_path / "VPD_H.jsonl")) == 2

    def test_sampled_waveforms(self, tmp_path):
        period, n_samples = 0.8, 40
        t = sample_times(period, n_samples)
        truth = {s: FourierSeries.from_coefficients(period, np.random.default_rng(i).normal(size=11))
                 for i, s in enumerate(SITE_NAMES)}
        columns = {"T": [period, period]}
        for site in SITE_NAMES:
            values = truth[site].evaluate(t)
            for k in range(n_samples):
                columns[f"{site}_{k}"] = [values[k], values[k]]
        pd.DataFrame(columns).to_csv(tmp_path / "sampled.csv", index=False, float_format="%.17g")
        descriptor = ImportDescriptor.from_dict({
            "period_column": "T",
            "sites": {s: {"samples": [f"{s}_{k}" for k in range(n_samples)]} for s in SITE_NAMES},
        })

        result = import_vpd(tmp_path / "sampled.csv", descriptor)
        assert [r.id for r in result.records] == ["VP000000", "VP000001"]
        for site in SITE_NAMES:
            np.testing.assert_allclose(result.records[0].sites[site], truth[site].coefficients(), atol=1e-9)

    def test_unreadable_table(self, tmp_path):
        descriptor = ImportDescriptor.from_dict(export_descriptor_dict())
        with pytest.raises(PersistenceException):
            import_vpd(tmp_path / "missing.csv", descriptor)


def export_descriptor_dict():
    names = ["b0"] + [f"a{n}" for n in range(1, 6)] + [f"b{n}" for n in range(1, 6)]
    return {
        "period_column": "period",
        "id_column": "id",
        "sites": {s: {"coefficients": [f"{s}_{c}" for c in names]} for s in SITE_NAMES},
    }


class TestConfigAndManifest:
    def test_load_config(self, tmp_path):
        path = tmp_path / "run.yml"
        path.write_text(yaml.safe_dump({"seed": 7, "population": {"healthy": 10, "diseases": {"aaa": 4}}}))
        config = load_config(path)
        assert config.seed == 7
        assert config.population.diseases == {"AAA": 4}

    @pytest.mark.parametrize("document", [
        {"population": {"healthy": 10}},
        {"seed": 1, "colour": "blue"},
        {"seed": -1},
        {"seed": 1, "population": {"healthy": 4, "diseases": {"CAS": 6}}},
        {"seed": 1, "methods": ["knn"]},
    ])
    def test_invalid_config(self, tmp_path, document):
        path = tmp_path / "run.yml"
        path.write_text(yaml.safe_dump(document))
        with pytest.raises(ConfigException):
            load_config(path)

    def test_unreadable_config(self, tmp_path):
        with pytest.raises(ConfigException):
            load_config(tmp_path / "absent.yml")
        broken = tmp_path / "broken.yml"
        broken.write_text("seed: [1,\n")
        with pytest.raises(ConfigException):
            load_config(broken)

    def test_manifest(self, tmp_path):
        inputs = tmp_path / "VPD_H.jsonl"
        inputs.write_text("input\n")
        output = tmp_path / "AAA_f1.csv"
        output.write_text("combination,GB\n")
        fingerprint = sweep_fingerprint({"seed": 1}, [inputs])

        assert not manifest_matches(tmp_path, fingerprint)
        write_manifest(tmp_path, fingerprint, [output])
        assert (tmp_path / MANIFEST_NAME).exists()
        assert manifest_matches(tmp_path, fingerprint)
        assert not manifest_matches(tmp_path, sweep_fingerprint({"seed": 2}, [inputs]))

        output.write_text("combination,GB\nQ3,0.1\n")
        assert not manifest_matches(tmp_path, fingerprint)

    def test_fingerprint_follows_input_content(self, tmp_path):
        inputs = tmp_path / "VPD_H.jsonl"
        inputs.write_text("a\n")
        before = sweep_fingerprint({"seed": 1}, [inputs])
        inputs.write_text("b\n")
        assert sweep_fingerprint({"seed": 1}, [inputs]) != before
