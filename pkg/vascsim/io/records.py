"""
Patient record files (JSON Lines), configuration loading, atomic writes and
the sweep manifest
"""

import hashlib
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import yaml

from ..core.exceptions import (
    ConfigException, DiseaseModelException, PersistenceException, RecordValidationException
)
from ..core.types import SITE_NAMES, Cohort, DiseaseSpec, RunConfig
from ..features import FourierSeries

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
MANIFEST_NAME = "sweep_manifest.json"


def atomic_write_text(path: PathLike, text: str):
    """Write to a temporary sibling and rename it over ``path``"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as e:
        logger.error(f"Cannot write {path}: {e}")
        raise PersistenceException(f"Unwritable output path {path}: {e}")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except OSError as e:
        if os.path.exists(tmp):
            os.unlink(tmp)
        logger.error(f"Failed writing {path}: {e}")
        raise PersistenceException(f"Failed writing {path}: {e}")


def file_sha256(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass(frozen=True, eq=False)
class PatientRecord:
    """One virtual patient: 12 site-keyed coefficient arrays [b0, a1..aN, b1..bN]"""
    id: str
    cohort: Cohort
    period: float
    sites: Dict[str, np.ndarray]
    disease: Optional[DiseaseSpec] = None

    def problems(self) -> List[str]:
        problems = []
        if not isinstance(self.id, str) or not self.id:
            problems.append("missing subject id")
        if not (isinstance(self.period, (int, float)) and math.isfinite(self.period) and self.period > 0):
            problems.append(f"period must be a positive number, got {self.period!r}")
        missing = [s for s in SITE_NAMES if s not in self.sites]
        if missing:
            problems.append(f"missing sites {missing}")
        extra = sorted(set(self.sites) - set(SITE_NAMES))
        if extra:
            problems.append(f"unknown sites {extra}")
        lengths = set()
        for site in SITE_NAMES:
            coeffs = self.sites.get(site)
            if coeffs is None:
                continue
            coeffs = np.asarray(coeffs, dtype=float)
            lengths.add(coeffs.shape)
            if coeffs.ndim != 1 or coeffs.shape[0] < 3 or coeffs.shape[0] % 2 == 0:
                problems.append(f"site {site} needs 2N+1 coefficients, got shape {coeffs.shape}")
            elif not np.all(np.isfinite(coeffs)):
                problems.append(f"site {site} has non-finite coefficients")
        if len(lengths) > 1:
            problems.append(f"sites disagree on coefficient count: {sorted(lengths)}")
        if self.cohort is Cohort.H and self.disease is not None:
            problems.append("healthy records carry no disease")
        if self.cohort is not Cohort.H:
            if self.disease is None:
                problems.append(f"{self.cohort.value} record lacks its disease")
            elif self.disease.kind is not self.cohort.disease:
                problems.append(f"disease {self.disease.kind.value} does not match cohort {self.cohort.value}")
        return problems

    @property
    def order(self) -> int:
        return (len(self.sites[SITE_NAMES[0]]) - 1) // 2

    def feature_vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.sites[s], dtype=float) for s in SITE_NAMES])

    def to_waveform_set(self):
        from ..haemo.solver import WaveformSet

        return WaveformSet(
            patient_id=self.id,
            series={s: FourierSeries.from_coefficients(self.period, self.sites[s]) for s in SITE_NAMES},
        )

    @classmethod
    def from_waveform_set(cls, waveforms, cohort: Cohort,
                          disease: Optional[DiseaseSpec] = None) -> "PatientRecord":
        return cls(
            id=waveforms.patient_id,
            cohort=cohort,
            period=float(waveforms.period),
            sites={s: waveforms.series[s].coefficients() for s in SITE_NAMES},
            disease=disease,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "cohort": self.cohort.value,
            "disease": self.disease.to_dict() if self.disease is not None else None,
            "period": float(self.period),
            "sites": {s: [float(v) for v in self.sites[s]] for s in SITE_NAMES},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PatientRecord":
        """Parse and validate; every problem found is reported together"""
        if not isinstance(data, dict):
            raise RecordValidationException("Record is not a JSON object")
        try:
            cohort = Cohort(data.get("cohort"))
        except ValueError:
            raise RecordValidationException(f"Unknown cohort tag {data.get('cohort')!r}")
        disease = None
        if data.get("disease") is not None:
            try:
                disease = DiseaseSpec.from_dict(data["disease"])
            except DiseaseModelException as e:
                raise RecordValidationException(str(e))
        sites = data.get("sites")
        if not isinstance(sites, dict):
            raise RecordValidationException("Record has no 'sites' mapping")
        try:
            arrays = {k: np.asarray(v, dtype=float) for k, v in sites.items()}
        except (TypeError, ValueError) as e:
            raise RecordValidationException(f"Non-numeric coefficients: {e}")
        record = cls(
            id=data.get("id", ""),
            cohort=cohort,
            period=data.get("period"),
            sites=arrays,
            disease=disease,
        )
        problems = record.problems()
        if problems:
            raise RecordValidationException(f"Invalid record {record.id!r}", problems)
        return record


def validate_records(records: Sequence[PatientRecord], cohort: Optional[Cohort] = None) -> List[str]:
    problems = []
    seen = set()
    for i, record in enumerate(records):
        for p in record.problems():
            problems.append(f"row {i} ({record.id}): {p}")
        if record.id in seen:
            problems.append(f"row {i}: duplicate id {record.id}")
        seen.add(record.id)
        if cohort is not None and record.cohort is not cohort:
            problems.append(f"row {i} ({record.id}): cohort {record.cohort.value}, expected {cohort.value}")
    return problems


def write_cohort(path: PathLike, records: Sequence[PatientRecord], cohort: Optional[Cohort] = None):
    problems = validate_records(records, cohort)
    if problems:
        raise RecordValidationException(f"Refusing to write invalid cohort to {path}", problems)
    text = "".join(json.dumps(r.to_dict()) + "\n" for r in records)
    atomic_write_text(path, text)
    logger.info(f"Wrote {len(records)} records to {path}")


def read_cohort(path: PathLike, cohort: Optional[Cohort] = None) -> List[PatientRecord]:
    """Read and validate a cohort file; all bad lines are reported at once"""
    path = Path(path)
    if not path.exists():
        raise PersistenceException(f"Cohort file not found: {path}")
    records, problems = [], []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(PatientRecord.from_dict(json.loads(line)))
            except json.JSONDecodeError as e:
                problems.append(f"line {lineno}: malformed JSON ({e.msg})")
            except RecordValidationException as e:
                details = "; ".join(e.problems) or e.args[0]
                problems.append(f"line {lineno}: {details}")
    if not problems:
        problems = validate_records(records, cohort)
    if problems:
        raise RecordValidationException(f"{path} failed validation", problems)
    logger.debug(f"Read {len(records)} records from {path}")
    return records


def check_twins(healthy: Iterable[PatientRecord], diseased: Iterable[PatientRecord]) -> List[str]:
    """Diseased records must twin healthy ones by id and share their period"""
    periods = {r.id: r.period for r in healthy}
    problems = []
    for r in diseased:
        if r.id not in periods:
            problems.append(f"{r.cohort.value} record {r.id} has no healthy twin")
        elif periods[r.id] != r.period:
            problems.append(f"{r.id}: period {r.period} differs from healthy twin {periods[r.id]}")
    return problems


def load_config(path: PathLike) -> RunConfig:
    """Read a YAML (or JSON) run configuration and validate it"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigException(f"Cannot read config {path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigException(f"Config {path} is not valid YAML/JSON: {e}")
    config = RunConfig.from_dict(data)
    logger.debug(f"Loaded config from {path} (seed {config.seed})")
    return config


def sweep_fingerprint(config: Dict[str, Any], inputs: Sequence[PathLike]) -> str:
    """Hash of the effective sweep settings and the content of every input file"""
    digest = hashlib.sha256(json.dumps(config, sort_keys=True).encode("utf-8"))
    for path in sorted(str(p) for p in inputs):
        digest.update(Path(path).name.encode("utf-8"))
        digest.update(file_sha256(path).encode("utf-8"))
    return digest.hexdigest()


def write_manifest(out_dir: PathLike, fingerprint: str, outputs: Sequence[PathLike]):
    out_dir = Path(out_dir)
    manifest = {
        "fingerprint": fingerprint,
        "outputs": {Path(p).name: file_sha256(p) for p in sorted(str(p) for p in outputs)},
    }
    atomic_write_text(out_dir / MANIFEST_NAME, json.dumps(manifest, indent=2, sort_keys=True))


def manifest_matches(out_dir: PathLike, fingerprint: str) -> bool:
    """True when a previous sweep with this fingerprint left all its outputs intact"""
    path = Path(out_dir) / MANIFEST_NAME
    if not path.exists():
        return False
    try:
        with open(path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
    except (OSError, json.JSONDecodeError):
        logger.warning(f"Ignoring unreadable sweep manifest {path}")
        return False
    if manifest.get("fingerprint") != fingerprint:
        return False
    for name, checksum in manifest.get("outputs", {}).items():
        output = Path(out_dir) / name
        if not output.exists() or file_sha256(output) != checksum:
            return False
    return True
