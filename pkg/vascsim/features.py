"""
Fourier-series features, measurement combinations and Z-score standardisation
"""

import itertools
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Sequence, Union

import numpy as np
import pandas as pd

from .core.exceptions import FeatureException
from .core.types import (
    APPENDIX_ORDER, MEASUREMENT_ORDER, SITE_NAMES, Laterality, Measurement
)

if TYPE_CHECKING:
    from .haemo.solver import WaveformSet

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 5


@dataclass(frozen=True, eq=False)
class FourierSeries:
    """Truncated series u(t) = sum_n a_n sin(n w t) + b_n cos(n w t), w = 2 pi / T.

    ``sine`` holds a_1..a_N and ``cosine`` holds b_0..b_N; a_0 is identically
    zero and is not stored.
    """
    period: float
    sine: np.ndarray
    cosine: np.ndarray

    def __post_init__(self):
        sine = np.array(self.sine, dtype=float)
        cosine = np.array(self.cosine, dtype=float)
        if cosine.shape != (sine.shape[0] + 1,):
            raise FeatureException(
                f"Need N sine and N+1 cosine coefficients, got {sine.shape[0]} and {cosine.shape[0]}"
            )
        if not self.period > 0:
            raise FeatureException(f"Period must be positive, got {self.period}")
        sine.setflags(write=False)
        cosine.setflags(write=False)
        object.__setattr__(self, "sine", sine)
        object.__setattr__(self, "cosine", cosine)

    @property
    def order(self) -> int:
        return int(self.sine.shape[0])

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.period

    def coefficients(self) -> np.ndarray:
        """Feature layout [b_0, a_1..a_N, b_1..b_N]"""
        return np.concatenate(([self.cosine[0]], self.sine, self.cosine[1:]))

    @classmethod
    def from_coefficients(cls, period: float, coefficients: Sequence[float]) -> "FourierSeries":
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.ndim != 1 or coefficients.shape[0] % 2 != 1:
            raise FeatureException(f"Expected 2N+1 coefficients, got shape {coefficients.shape}")
        order = (coefficients.shape[0] - 1) // 2
        return cls(
            period=float(period),
            sine=coefficients[1:order + 1],
            cosine=np.concatenate(([coefficients[0]], coefficients[order + 1:])),
        )

    def evaluate(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return evaluate_fourier(self, t)

    def allclose(self, other: "FourierSeries", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        return (
            self.order == other.order
            and np.isclose(self.period, other.period, rtol=rtol, atol=atol)
            and np.allclose(self.coefficients(), other.coefficients(), rtol=rtol, atol=atol)
        )


def sample_times(period: float, n_samples: int) -> np.ndarray:
    """Uniform sample instants over one period, end point excluded"""
    return np.arange(n_samples) * (period / n_samples)


def _design_matrix(t: np.ndarray, omega: float, order: int) -> np.ndarray:
    n = np.arange(1, order + 1)
    phase = np.outer(t, n) * omega
    return np.hstack([np.ones((t.shape[0], 1)), np.sin(phase), np.cos(phase)])


def fit_fourier(samples: Sequence[float], period: float, order: int = DEFAULT_ORDER) -> FourierSeries:
    """Least-squares truncated Fourier fit to uniform samples over one period"""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1:
        raise FeatureException(f"Samples must be one-dimensional, got shape {samples.shape}")
    if order < 0:
        raise FeatureException(f"Truncation order must be >= 0, got {order}")
    if samples.shape[0] < 2 * order + 1:
        raise FeatureException(
            f"Need at least {2 * order + 1} samples for order {order}, got {samples.shape[0]}"
        )
    if not np.all(np.isfinite(samples)):
        raise FeatureException("Waveform samples contain non-finite values")
    if not period > 0:
        raise FeatureException(f"Period must be positive, got {period}")

    t = sample_times(period, samples.shape[0])
    design = _design_matrix(t, 2.0 * np.pi / period, order)
    solution, *_ = np.linalg.lstsq(design, samples, rcond=None)
    return FourierSeries(
        period=float(period),
        sine=solution[1:order + 1],
        cosine=np.concatenate(([solution[0]], solution[order + 1:])),
    )


def evaluate_fourier(fs: FourierSeries, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = np.arange(1, fs.order + 1)
    phase = np.outer(t, n) * fs.omega
    values = fs.cosine[0] + np.sin(phase) @ fs.sine + np.cos(phase) @ fs.cosine[1:]
    return float(values[0]) if scalar else values


# ---------------------------------------------------------------------------
# Measurement combinations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementCombination:
    """A non-empty set of measurements and the sides each contributes"""
    measurements: FrozenSet[Measurement]
    laterality: Laterality = Laterality.BOTH

    def __post_init__(self):
        object.__setattr__(self, "measurements", frozenset(self.measurements))
        if not self.measurements:
            raise FeatureException("A measurement combination must not be empty")

    @classmethod
    def of(cls, *measurements: Union[Measurement, str],
           laterality: Laterality = Laterality.BOTH) -> "MeasurementCombination":
        members = frozenset(
            m if isinstance(m, Measurement) else Measurement(m.upper()) for m in measurements
        )
        return cls(members, laterality)

    @classmethod
    def parse(cls, text: str, laterality: Laterality = Laterality.BOTH) -> "MeasurementCombination":
        """Parse 'q1+p1' style labels, optionally suffixed '@R' or '@L'"""
        body, _, side = text.strip().partition("@")
        if side:
            laterality = Laterality(side.strip().upper())
        try:
            parts = [Measurement(p.strip().upper()) for p in body.split("+") if p.strip()]
        except ValueError:
            raise FeatureException(f"Unknown measurement in combination '{text}'")
        return cls(frozenset(parts), laterality)

    @property
    def size(self) -> int:
        return len(self.measurements)

    def includes(self, measurement: Measurement) -> bool:
        return measurement in self.measurements

    @property
    def canonical(self) -> List[Measurement]:
        return [m for m in MEASUREMENT_ORDER if m in self.measurements]

    @property
    def sites(self) -> List[str]:
        """Site keys in feature order: canonical measurement order, right before left"""
        return [m.site(side) for m in self.canonical for side in self.laterality.sides]

    @property
    def label(self) -> str:
        body = "+".join(m.value for m in APPENDIX_ORDER if m in self.measurements)
        if self.laterality is Laterality.BOTH:
            return body
        return f"{body}@{self.laterality.value}"

    def bilateral(self) -> "MeasurementCombination":
        return MeasurementCombination(self.measurements, Laterality.BOTH)

    def __str__(self) -> str:
        return self.label


def all_combinations(laterality: Laterality = Laterality.BOTH) -> List[MeasurementCombination]:
    """All 63 non-empty combinations: by size, then lexicographic in table order"""
    combos = []
    for k in range(1, len(APPENDIX_ORDER) + 1):
        for subset in itertools.combinations(APPENDIX_ORDER, k):
            combos.append(MeasurementCombination(frozenset(subset), laterality))
    return combos


def parse_combinations(text: str) -> List[MeasurementCombination]:
    """'all' or a comma-separated list such as 'q1,q1+p1,p3@R'"""
    if text.strip().lower() == "all":
        return all_combinations()
    combos = [MeasurementCombination.parse(part) for part in text.split(",") if part.strip()]
    if not combos:
        raise FeatureException("Combination list is empty")
    return combos


def coefficient_names(order: int = DEFAULT_ORDER) -> List[str]:
    return ["b0"] + [f"a{n}" for n in range(1, order + 1)] + [f"b{n}" for n in range(1, order + 1)]


def feature_names(combo: MeasurementCombination, order: int = DEFAULT_ORDER) -> List[str]:
    coeffs = coefficient_names(order)
    return [f"{site}_{c}" for site in combo.sites for c in coeffs]


def feature_columns(combo: MeasurementCombination, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Column indices of ``combo`` within the full 12-site feature matrix"""
    width = 2 * order + 1
    columns = []
    for site in combo.sites:
        start = SITE_NAMES.index(site) * width
        columns.extend(range(start, start + width))
    return np.asarray(columns, dtype=int)


FULL_COMBINATION = MeasurementCombination(frozenset(MEASUREMENT_ORDER))


def assemble_features(waveforms: "WaveformSet", combo: MeasurementCombination) -> np.ndarray:
    """Concatenate the coefficient vectors of every site ``combo`` demands"""
    parts = []
    for site in combo.sites:
        series = waveforms.series.get(site)
        if series is None:
            raise FeatureException(f"Waveform set {waveforms.patient_id} is missing site {site}")
        parts.append(series.coefficients())
    return np.concatenate(parts)


def assemble_matrix(waveform_sets: Iterable["WaveformSet"],
                    combo: MeasurementCombination = FULL_COMBINATION) -> np.ndarray:
    rows = [assemble_features(ws, combo) for ws in waveform_sets]
    if not rows:
        raise FeatureException("Cannot assemble a feature matrix from zero waveform sets")
    return np.vstack(rows)


def feature_frame(waveform_sets: Sequence["WaveformSet"],
                  combo: MeasurementCombination = FULL_COMBINATION) -> pd.DataFrame:
    """Feature matrix as a DataFrame indexed by patient id, one column per coefficient"""
    matrix = assemble_matrix(waveform_sets, combo)
    order = (matrix.shape[1] // len(combo.sites) - 1) // 2
    return pd.DataFrame(
        matrix,
        index=pd.Index([ws.patient_id for ws in waveform_sets], name="id"),
        columns=feature_names(combo, order),
    )


# ---------------------------------------------------------------------------
# Standardisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StandardizationStats:
    """Per-feature mean and population standard deviation from training rows"""
    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray
    fitted_on_train: bool = True

    @property
    def n_features(self) -> int:
        return int(self.mean.shape[0])


def fit_standardizer(train: np.ndarray) -> StandardizationStats:
    train = np.asarray(train, dtype=float)
    if train.ndim != 2 or train.shape[0] == 0 or train.shape[1] == 0:
        raise FeatureException(f"Cannot fit a standardizer on an empty matrix of shape {train.shape}")
    if not np.all(np.isfinite(train)):
        raise FeatureException("Training matrix contains non-finite values")

    mean = train.mean(axis=0)
    std = train.std(axis=0)
    degenerate = np.ptp(train, axis=0) == 0.0
    if np.any(degenerate):
        columns = np.flatnonzero(degenerate).tolist()
        logger.warning(f"Constant feature columns {columns}: std clamped to 1")
        mean = np.where(degenerate, train[0], mean)
        std = np.where(degenerate, 1.0, std)
    for arr in (mean, std, degenerate):
        arr.setflags(write=False)
    return StandardizationStats(mean=mean, std=std, degenerate=degenerate)


def _check_width(stats: StandardizationStats, matrix: np.ndarray):
    if matrix.ndim != 2 or matrix.shape[1] != stats.n_features:
        raise FeatureException(
            f"Matrix has shape {matrix.shape}, standardizer expects {stats.n_features} columns"
        )


def apply_standardizer(stats: StandardizationStats, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    _check_width(stats, matrix)
    return (matrix - stats.mean) / stats.std


def invert_standardizer(stats: StandardizationStats, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    _check_width(stats, matrix)
    return matrix * stats.std + stats.mean


def site_series(coefficients: Dict[str, Sequence[float]], period: float) -> Dict[str, FourierSeries]:
    """Build per-site series from raw coefficient arrays"""
    return {site: FourierSeries.from_coefficients(period, coeffs) for site, coeffs in coefficients.items()}


@dataclass(frozen=True, eq=False)
class FeatureStore:
    """Full 12-site coefficient rows of one cohort, addressable by subject id"""
    ids: tuple
    matrix: np.ndarray
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        width = len(SITE_NAMES) * (2 * self.order + 1)
        if matrix.ndim != 2 or matrix.shape != (len(self.ids), width):
            raise FeatureException(
                f"Feature store needs shape ({len(self.ids)}, {width}), got {matrix.shape}"
            )
        if len(set(self.ids)) != len(self.ids):
            raise FeatureException("Feature store has duplicate subject ids")
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_index", {sid: i for i, sid in enumerate(self.ids)})

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, subject_id: str) -> bool:
        return subject_id in self._index

    def rows(self, subject_ids: Sequence[str]) -> np.ndarray:
        try:
            return self.matrix[[self._index[s] for s in subject_ids]]
        except KeyError as e:
            raise FeatureException(f"Subject {e} is not in the feature store")

    @classmethod
    def from_records(cls, records: Sequence) -> "FeatureStore":
        """Records need an ``id`` and a ``feature_vector()`` in site order"""
        if not records:
            raise FeatureException("Cannot build a feature store from zero records")
        matrix = np.vstack([r.feature_vector() for r in records])
        order = (matrix.shape[1] // len(SITE_NAMES) - 1) // 2
        return cls(ids=tuple(r.id for r in records), matrix=matrix, order=order)
