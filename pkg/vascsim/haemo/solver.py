"""
Frequency-domain waveform surrogate.

Each axial node is a Poiseuille series resistance followed by a lossless
transmission-line section. With the e^{i w t} convention a node's transfer
(ABCD) matrix maps outlet (P, Q) to inlet (P, Q):

    [[1, R], [0, 1]] @ [[cos(b dx), i Zc sin(b dx)], [i sin(b dx) / Zc, cos(b dx)]]

with Zc = rho c / A and b = w / c. Input impedances are composed leaf to
root, then pressures and flows are propagated root to leaf.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..core.exceptions import NetworkException
from ..features import FourierSeries, fit_fourier, sample_times
from .network import MMHG, ArterialNetworkModel, Segment

logger = logging.getLogger(__name__)

INFLOW_SAMPLES = 2048


@dataclass(frozen=True, eq=False)
class HeartInflow:
    """Root inflow: complex flow harmonics Q_0..Q_N in cm^3/s"""
    period: float
    harmonics: np.ndarray

    def __post_init__(self):
        harmonics = np.array(self.harmonics, dtype=complex)
        if harmonics.ndim != 1 or harmonics.shape[0] < 1:
            raise NetworkException("Inflow needs at least the mean harmonic")
        if harmonics[0].imag != 0.0 or not harmonics[0].real > 0:
            raise NetworkException(f"Mean inflow must be real and positive, got {harmonics[0]}")
        if not self.period > 0:
            raise NetworkException(f"Inflow period must be positive, got {self.period}")
        harmonics.setflags(write=False)
        object.__setattr__(self, "harmonics", harmonics)

    @property
    def order(self) -> int:
        return int(self.harmonics.shape[0]) - 1

    @classmethod
    def from_series(cls, series: FourierSeries) -> "HeartInflow":
        return cls(period=series.period, harmonics=series_to_phasors(series))

    @classmethod
    def half_sine(cls, period: float, stroke_volume: float = 70.0, order: int = 5,
                  ejection_fraction_of_period: float = 1.0 / 3.0) -> "HeartInflow":
        """Half-sine systolic ejection over the first part of the cycle, zero in diastole"""
        if stroke_volume <= 0:
            raise NetworkException(f"Stroke volume must be positive, got {stroke_volume}")
        ejection = period * ejection_fraction_of_period
        peak = stroke_volume * np.pi / (2.0 * ejection)
        t = sample_times(period, INFLOW_SAMPLES)
        flow = np.where(t < ejection, peak * np.sin(np.pi * t / ejection), 0.0)
        return cls.from_series(fit_fourier(flow, period, order))


def series_to_phasors(series: FourierSeries) -> np.ndarray:
    """X_n = b_n - i a_n, so that u(t) = Re sum_n X_n e^{i n w t}"""
    phasors = series.cosine.astype(complex)
    phasors[1:] -= 1j * series.sine
    return phasors


def phasors_to_series(phasors: np.ndarray, period: float) -> FourierSeries:
    return FourierSeries(period=period, sine=-phasors[1:].imag, cosine=phasors.real)


@dataclass(frozen=True, eq=False)
class WaveformSet:
    """Fourier series at the 12 bilateral measurement sites of one patient"""
    patient_id: str
    series: Dict[str, FourierSeries]

    def __post_init__(self):
        periods = {fs.period for fs in self.series.values()}
        orders = {fs.order for fs in self.series.values()}
        if len(periods) > 1 or len(orders) > 1:
            raise NetworkException(
                f"Waveform set {self.patient_id} mixes periods {periods} or orders {orders}"
            )

    @property
    def period(self) -> float:
        return next(iter(self.series.values())).period

    @property
    def order(self) -> int:
        return next(iter(self.series.values())).order


@dataclass(frozen=True, eq=False)
class SegmentSolution:
    """Per-harmonic pressure, flow and impedance at every node boundary.

    Arrays have shape (n_nodes + 1, n_harmonics); row 0 is the inlet.
    """
    pressure: np.ndarray
    flow: np.ndarray
    impedance: np.ndarray

    @property
    def inlet_impedance(self) -> np.ndarray:
        return self.impedance[0]

    def at(self, position: float):
        """Values at the node boundary nearest a fractional position"""
        n_nodes = self.pressure.shape[0] - 1
        k = int(np.rint(position * n_nodes))
        return self.pressure[k], self.flow[k]


@dataclass(frozen=True, eq=False)
class NetworkSolution:
    omegas: np.ndarray
    segments: Dict[str, SegmentSolution]


def _node_resistance(segment: Segment, viscosity: float) -> np.ndarray:
    # Diseased areas only raise resistance where they fall below the healthy baseline.
    resistive_area = np.minimum(segment.area, segment.reference_area)
    return 8.0 * np.pi * viscosity * segment.node_length / resistive_area ** 2


def _node_matrices(segment: Segment, omegas: np.ndarray, viscosity: float):
    """ABCD entries per (node, harmonic)"""
    resistance = _node_resistance(segment, viscosity)[:, None]
    zc = (segment.density * segment.wave_speed / segment.area)[:, None]
    theta = omegas[None, :] * segment.node_length / segment.wave_speed
    cos = np.cos(theta) * np.ones_like(zc)
    sin = np.sin(theta)
    a_line, b_line = cos, 1j * zc * sin
    c_line, d_line = 1j * sin / zc, cos
    a = a_line + resistance * c_line
    b = b_line + resistance * d_line
    return a, b, c_line, d_line


def solve_network_full(network: ArterialNetworkModel, inflow: HeartInflow,
                       order: Optional[int] = None) -> NetworkSolution:
    """Solve every node boundary of every segment for harmonics 0..order"""
    order = inflow.order if order is None else order
    if order < 1:
        raise NetworkException(f"Truncation order must be >= 1, got {order}")
    if order > inflow.order:
        raise NetworkException(
            f"Requested {order} harmonics but the inflow only carries {inflow.order}"
        )
    if not np.isclose(inflow.period, network.heart_period, rtol=1e-12, atol=0.0):
        raise NetworkException(
            f"Inflow period {inflow.period} does not match network period {network.heart_period}"
        )
    for seg in network.segments.values():
        if np.any(seg.area <= 0) or not np.all(np.isfinite(seg.area)):
            raise NetworkException(f"Segment {seg.id} has a zero-area node")

    omegas = np.arange(order + 1) * (2.0 * np.pi / network.heart_period)
    order_ids = network.topological_order()

    matrices = {}
    impedances: Dict[str, np.ndarray] = {}
    for seg_id in reversed(order_ids):
        seg = network.segments[seg_id]
        a, b, c, d = _node_matrices(seg, omegas, network.viscosity)
        matrices[seg_id] = (a, b, c, d)
        z = np.empty((seg.n_nodes + 1, omegas.shape[0]), dtype=complex)
        if network.is_leaf(seg_id):
            z[-1] = network.loads[seg_id].impedance(omegas)
        else:
            admittance = sum(1.0 / impedances[child][0] for child in network.children(seg_id))
            z[-1] = 1.0 / admittance
        for k in range(seg.n_nodes - 1, -1, -1):
            z[k] = (a[k] * z[k + 1] + b[k]) / (c[k] * z[k + 1] + d[k])
        impedances[seg_id] = z

    solutions: Dict[str, SegmentSolution] = {}
    inlet_flow: Dict[str, np.ndarray] = {network.root: np.array(inflow.harmonics[:order + 1])}
    inlet_pressure: Dict[str, np.ndarray] = {
        network.root: inlet_flow[network.root] * impedances[network.root][0]
    }
    for seg_id in order_ids:
        seg = network.segments[seg_id]
        a, b, _, _ = matrices[seg_id]
        z = impedances[seg_id]
        pressure = np.empty_like(z)
        pressure[0] = inlet_pressure[seg_id]
        for k in range(seg.n_nodes):
            pressure[k + 1] = pressure[k] * z[k + 1] / (a[k] * z[k + 1] + b[k])
        flow = pressure / z
        flow[0] = inlet_flow[seg_id]
        solutions[seg_id] = SegmentSolution(pressure=pressure, flow=flow, impedance=z)
        for child in network.children(seg_id):
            inlet_pressure[child] = pressure[-1]
            inlet_flow[child] = pressure[-1] / impedances[child][0]

    return NetworkSolution(omegas=omegas, segments=solutions)


def solve_network(network: ArterialNetworkModel, inflow: HeartInflow, order: int = 5,
                  patient_id: str = "") -> WaveformSet:
    """Fourier series of pressure (mmHg) and flow (cm^3/s) at every measurement site"""
    solution = solve_network_full(network, inflow, order)
    series = {}
    for name, site in network.sites.items():
        pressure, flow = solution.segments[site.segment_id].at(site.position)
        phasors = pressure / MMHG if name.startswith("P") else flow
        series[name] = phasors_to_series(phasors, network.heart_period)
    return WaveformSet(patient_id=patient_id, series=series)
