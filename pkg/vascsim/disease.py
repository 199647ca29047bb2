"""
Disease parameterisation: vessel chains, area profiles and random sampling
"""

import logging
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from .core.exceptions import DiseaseModelException
from .core.types import (
    END_MAX, LOCATION_MARGIN, REFERENCE_RANGE, SEVERITY_BOUNDS, START_MIN,
    DiseaseKind, DiseaseSpec, Side,
)
from .haemo.network import CHAIN_SEGMENTS, ArterialNetworkModel

logger = logging.getLogger(__name__)

# Chain prefix for each disease kind; lateral kinds append the side.
CHAIN_PREFIX: Dict[DiseaseKind, str] = {
    DiseaseKind.CAS: "CA",
    DiseaseKind.SAS: "SA",
    DiseaseKind.PAD: "PA",
    DiseaseKind.AAA: "AA",
    DiseaseKind.AAA_L: "AA",
}


@dataclass(frozen=True, eq=False)
class VesselChain:
    """Ordered run of segments sharing one normalised coordinate in [0, 1]"""
    id: str
    segment_ids: Tuple[str, ...]
    boundaries: np.ndarray

    def __post_init__(self):
        boundaries = np.array(self.boundaries, dtype=float)
        if boundaries.shape != (len(self.segment_ids) + 1,):
            raise DiseaseModelException(
                f"Chain {self.id}: {len(self.segment_ids)} segments need "
                f"{len(self.segment_ids) + 1} boundaries, got {boundaries.shape[0]}"
            )
        if boundaries[0] != 0.0 or boundaries[-1] != 1.0 or np.any(np.diff(boundaries) <= 0):
            raise DiseaseModelException(
                f"Chain {self.id}: boundaries must increase strictly from 0 to 1, got {boundaries}"
            )
        boundaries.setflags(write=False)
        object.__setattr__(self, "boundaries", boundaries)

    @property
    def side(self) -> Side:
        if self.id.endswith("_R"):
            return Side.RIGHT
        if self.id.endswith("_L"):
            return Side.LEFT
        return Side.NOT_APPLICABLE

    @classmethod
    def from_network(cls, chain_id: str, network: ArterialNetworkModel) -> "VesselChain":
        """Chain with boundaries proportional to the network's segment lengths"""
        if chain_id not in CHAIN_SEGMENTS:
            raise DiseaseModelException(f"Unknown chain id: {chain_id}")
        segment_ids = CHAIN_SEGMENTS[chain_id]
        missing = [s for s in segment_ids if s not in network.segments]
        if missing:
            raise DiseaseModelException(f"Chain {chain_id} segments not in network: {missing}")
        lengths = np.array([network.segments[s].length for s in segment_ids])
        boundaries = np.concatenate(([0.0], np.cumsum(lengths) / lengths.sum()))
        boundaries[-1] = 1.0
        return cls(id=chain_id, segment_ids=segment_ids, boundaries=boundaries)


def chain_id_for(spec: DiseaseSpec) -> str:
    prefix = CHAIN_PREFIX[spec.kind]
    if spec.side is Side.NOT_APPLICABLE:
        return prefix
    return f"{prefix}_{spec.side.value}"


def _uniform(rng: np.random.Generator, low: float, high: float) -> float:
    return low + (high - low) * float(rng.random())


def sample_disease(kind: DiseaseKind, rng: np.random.Generator) -> DiseaseSpec:
    """Draw r, then b, then e, then S, then the side"""
    r = _uniform(rng, *REFERENCE_RANGE)
    b = _uniform(rng, START_MIN, r - LOCATION_MARGIN)
    e = _uniform(rng, r + LOCATION_MARGIN, END_MAX)
    severity = _uniform(rng, *SEVERITY_BOUNDS[kind])
    if kind.is_lateral:
        side = Side.RIGHT if rng.random() < 0.5 else Side.LEFT
    else:
        side = Side.NOT_APPLICABLE
    return DiseaseSpec(kind=kind, severity=severity, b=b, e=e, r=r, side=side)


def area_multiplier(spec: DiseaseSpec, x_n: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Normalised area A_n at chain coordinate(s) x_n.

    A_n is 1 outside [b, e]. Inside, a raised-cosine dip to 1 - S (stenosis) or
    bump to 1 + S (aneurysm) reaching its extremum at the midpoint of [b, e].
    """
    scalar = np.ndim(x_n) == 0
    x = np.atleast_1d(np.asarray(x_n, dtype=float))
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DiseaseModelException(f"Normalised coordinate outside [0, 1]: {x_n}")

    half = spec.severity / 2.0
    wave = np.cos(2.0 * (x - spec.b) * np.pi / (spec.e - spec.b))
    if spec.kind.is_aneurysm:
        inside = (1.0 + half) - half * wave
    else:
        inside = (1.0 - half) + half * wave
    values = np.where((x >= spec.b) & (x <= spec.e), inside, 1.0)
    return float(values[0]) if scalar else values


def apply_disease(network: ArterialNetworkModel, chain: VesselChain,
                  spec: DiseaseSpec) -> ArterialNetworkModel:
    """Copy of ``network`` with the chain's node areas scaled by the disease profile"""
    expected = chain_id_for(spec)
    if chain.id not in CHAIN_SEGMENTS:
        raise DiseaseModelException(f"Unknown chain id: {chain.id}")
    if chain.id != expected:
        raise DiseaseModelException(
            f"{spec.kind.value} (side {spec.side.value}) belongs on chain {expected}, not {chain.id}"
        )

    replacements = {}
    for j, seg_id in enumerate(chain.segment_ids):
        segment = network.segments.get(seg_id)
        if segment is None:
            raise DiseaseModelException(f"Chain {chain.id} segment {seg_id} not in network")
        start, end = chain.boundaries[j], chain.boundaries[j + 1]
        x = start + segment.node_centres() * (end - start)
        replacements[seg_id] = segment.with_area(segment.reference_area * area_multiplier(spec, x))

    logger.debug(
        f"Applied {spec.kind.value} S={spec.severity:.4f} on {chain.id} [{spec.b:.3f}, {spec.e:.3f}]"
    )
    return network.with_segments(replacements)


def apply_disease_spec(network: ArterialNetworkModel, spec: DiseaseSpec) -> ArterialNetworkModel:
    chain = VesselChain.from_network(chain_id_for(spec), network)
    return apply_disease(network, chain, spec)
