"""
Tabular import of external virtual patient databases and cohort table export.

A descriptor maps every measurement site either to 2N+1 coefficient columns or
to M >= 2N+1 columns of uniformly sampled waveform values over one period:

    period_column: period
    id_column: id              # optional, rows are numbered otherwise
    cohort: H
    order: 5
    sites:
      Q1_R: {coefficients: [Q1_R_b0, Q1_R_a1, ...]}
      Q1_L: {samples: [12, 13, 14, ...]}     # integer entries are column positions
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import yaml

from ..core.exceptions import (
    DiseaseModelException, FeatureException, PersistenceException, RecordValidationException
)
from ..core.types import SITE_NAMES, Cohort, DiseaseSpec
from ..features import DEFAULT_ORDER, coefficient_names, fit_fourier
from .records import PatientRecord, atomic_write_text, validate_records, write_cohort

logger = logging.getLogger(__name__)

Column = Union[str, int]
SITE_MODES = ("coefficients", "samples")


@dataclass
class SiteMapping:
    mode: str
    columns: List[Column]


@dataclass
class ImportDescriptor:
    period_column: Column
    sites: Dict[str, SiteMapping]
    id_column: Optional[Column] = None
    disease_column: Optional[Column] = None
    cohort: Cohort = Cohort.H
    order: int = DEFAULT_ORDER

    def validate(self) -> "ImportDescriptor":
        missing = [s for s in SITE_NAMES if s not in self.sites]
        if missing:
            raise PersistenceException(f"Descriptor does not map sites: {', '.join(missing)}")
        unknown = sorted(set(self.sites) - set(SITE_NAMES))
        if unknown:
            raise PersistenceException(f"Descriptor maps unknown sites: {', '.join(unknown)}")
        width = 2 * self.order + 1
        for site, mapping in self.sites.items():
            if mapping.mode not in SITE_MODES:
                raise PersistenceException(f"Site {site}: mode must be one of {SITE_MODES}")
            if mapping.mode == "coefficients" and len(mapping.columns) != width:
                raise PersistenceException(
                    f"Site {site}: {len(mapping.columns)} coefficient columns, expected {width}"
                )
            if mapping.mode == "samples" and len(mapping.columns) < width:
                raise PersistenceException(
                    f"Site {site}: {len(mapping.columns)} sample columns, need at least {width}"
                )
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ImportDescriptor":
        if not isinstance(data, dict) or "sites" not in data or "period_column" not in data:
            raise PersistenceException("Descriptor needs 'period_column' and 'sites'")
        sites = {}
        for site, spec in (data["sites"] or {}).items():
            if not isinstance(spec, dict) or len(spec) != 1:
                raise PersistenceException(f"Site {site}: expected one of {SITE_MODES} with a column list")
            (mode, columns), = spec.items()
            sites[str(site)] = SiteMapping(mode=str(mode), columns=list(columns))
        try:
            cohort = Cohort(str(data.get("cohort", "H")).upper().replace("-", "_"))
        except ValueError:
            raise PersistenceException(f"Unknown cohort {data.get('cohort')!r} in descriptor")
        return cls(
            period_column=data["period_column"],
            sites=sites,
            id_column=data.get("id_column"),
            disease_column=data.get("disease_column"),
            cohort=cohort,
            order=int(data.get("order", DEFAULT_ORDER)),
        ).validate()

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "period_column": self.period_column,
            "cohort": self.cohort.value,
            "order": self.order,
        }
        if self.id_column is not None:
            data["id_column"] = self.id_column
        if self.disease_column is not None:
            data["disease_column"] = self.disease_column
        data["sites"] = {s: {m.mode: list(m.columns)} for s, m in self.sites.items()}
        return data


def load_descriptor(path: Union[str, Path]) -> ImportDescriptor:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return ImportDescriptor.from_dict(yaml.safe_load(f))
    except (OSError, yaml.YAMLError) as e:
        raise PersistenceException(f"Cannot read descriptor {path}: {e}")


@dataclass
class ImportResult:
    records: List[PatientRecord]
    problems: List[str] = field(default_factory=list)


def _resolve(frame: pd.DataFrame, column: Column) -> str:
    if isinstance(column, int) and not isinstance(column, bool):
        if not 0 <= column < frame.shape[1]:
            raise PersistenceException(f"Column index {column} outside table of {frame.shape[1]} columns")
        return frame.columns[column]
    if column not in frame.columns:
        raise PersistenceException(f"Column {column!r} not found in table")
    return column


def _row_record(row: pd.Series, index: int, columns: Dict[str, List[str]],
                descriptor: ImportDescriptor, period_col: str, id_col: Optional[str],
                disease_col: Optional[str]) -> PatientRecord:
    problems = []
    period = float(row[period_col])
    subject = str(row[id_col]) if id_col is not None else f"VP{index:06d}"
    disease = None
    if disease_col is not None:
        text = row[disease_col]
        if isinstance(text, str) and text.strip():
            try:
                disease = DiseaseSpec.from_dict(json.loads(text))
            except (json.JSONDecodeError, DiseaseModelException) as e:
                problems.append(f"bad disease cell: {e}")
    sites = {}
    for site in SITE_NAMES:
        values = row[columns[site]].to_numpy(dtype=float)
        if not np.all(np.isfinite(values)):
            problems.append(f"site {site} has non-finite values")
            continue
        if descriptor.sites[site].mode == "samples":
            try:
                values = fit_fourier(values, period, descriptor.order).coefficients()
            except FeatureException as e:
                problems.append(f"site {site}: {e}")
                continue
        sites[site] = values
    if problems:
        raise RecordValidationException(f"row {index}", problems)
    return PatientRecord(id=subject, cohort=descriptor.cohort, period=period, sites=sites, disease=disease)


def import_vpd(table_path: Union[str, Path], descriptor: ImportDescriptor,
               out_path: Optional[Union[str, Path]] = None,
               skip_invalid: bool = False) -> ImportResult:
    """Convert an external table into patient records, optionally writing JSONL.

    Invalid rows are listed by index. Unless ``skip_invalid`` is set any invalid
    row aborts the import and nothing is written.
    """
    descriptor.validate()
    try:
        frame = pd.read_csv(table_path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        logger.error(f"Failed to read table {table_path}: {e}")
        raise PersistenceException(f"Cannot read table {table_path}: {e}")

    period_col = _resolve(frame, descriptor.period_column)
    id_col = _resolve(frame, descriptor.id_column) if descriptor.id_column is not None else None
    disease_col = _resolve(frame, descriptor.disease_column) if descriptor.disease_column is not None else None
    columns = {s: [_resolve(frame, c) for c in m.columns] for s, m in descriptor.sites.items()}
    if id_col is not None:
        frame[id_col] = frame[id_col].astype(str)

    records, problems = [], []
    for index, row in frame.iterrows():
        try:
            record = _row_record(row, int(index), columns, descriptor, period_col, id_col, disease_col)
        except (RecordValidationException, ValueError, TypeError) as e:
            details = "; ".join(getattr(e, "problems", [])) or str(e)
            problems.append(f"row {index}: {details}")
            continue
        row_problems = record.problems()
        if row_problems:
            problems.append(f"row {index}: {'; '.join(row_problems)}")
            continue
        records.append(record)
    problems.extend(validate_records(records, descriptor.cohort))

    if problems and not skip_invalid:
        raise RecordValidationException(f"{len(problems)} invalid rows in {table_path}", problems)
    if problems:
        logger.warning(f"Skipped {len(problems)} invalid rows from {table_path}")
    if out_path is not None:
        write_cohort(out_path, records, descriptor.cohort)
    logger.info(f"Imported {len(records)} {descriptor.cohort.value} records from {table_path}")
    return ImportResult(records=records, problems=problems)


def export_cohort_table(records: Sequence[PatientRecord], table_path: Union[str, Path],
                        descriptor_path: Optional[Union[str, Path]] = None) -> ImportDescriptor:
    """Write records as a coefficient table plus the descriptor that reads it back"""
    if not records:
        raise PersistenceException("Nothing to export")
    cohort = records[0].cohort
    order = records[0].order
    names = coefficient_names(order)
    rows = []
    for r in records:
        row: Dict[str, Any] = {
            "id": r.id,
            "period": r.period,
            "disease": json.dumps(r.disease.to_dict()) if r.disease is not None else "",
        }
        for site in SITE_NAMES:
            row.update({f"{site}_{c}": float(v) for c, v in zip(names, r.sites[site])})
        rows.append(row)
    frame = pd.DataFrame(rows)
    atomic_write_text(table_path, frame.to_csv(index=False, float_format="%.17g"))

    descriptor = ImportDescriptor(
        period_column="period",
        sites={s: SiteMapping("coefficients", [f"{s}_{c}" for c in names]) for s in SITE_NAMES},
        id_column="id",
        disease_column="disease",
        cohort=cohort,
        order=order,
    )
    if descriptor_path is not None:
        atomic_write_text(descriptor_path, yaml.safe_dump(descriptor.to_dict(), sort_keys=False))
    logger.info(f"Exported {len(records)} {cohort.value} records to {table_path}")
    return descriptor
