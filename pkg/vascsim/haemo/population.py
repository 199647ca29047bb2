"""
Virtual population generation: healthy subjects and their diseased twins
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from ..core.exceptions import NetworkException
from ..core.seeding import derive_rng
from ..core.types import DiseaseKind, DiseaseSpec, SurrogateConfig
from ..disease import apply_disease_spec, sample_disease
from .network import NetworkConfig, build_reference_network
from .solver import HeartInflow, WaveformSet, solve_network

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubjectScalings:
    """Physiological multipliers drawn once per virtual subject"""
    heart_period: float
    stiffness_scale: float
    resistance_scale: float
    area_scale: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "heart_period": self.heart_period,
            "stiffness_scale": self.stiffness_scale,
            "resistance_scale": self.resistance_scale,
            "area_scale": self.area_scale,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SubjectScalings":
        return cls(**{k: float(data[k]) for k in ("heart_period", "stiffness_scale",
                                                  "resistance_scale", "area_scale")})


@dataclass(frozen=True)
class VirtualSubject:
    id: str
    index: int
    scalings: SubjectScalings
    disease: Optional[DiseaseSpec] = None

    @property
    def is_healthy(self) -> bool:
        return self.disease is None


def subject_id(index: int) -> str:
    return f"VP{index:06d}"


def sample_scalings(rng: np.random.Generator, config: SurrogateConfig) -> SubjectScalings:
    sigma = config.variability_sigma
    low, high = config.period_range
    period = float(rng.uniform(low, high))
    stiffness, resistance, area = np.exp(rng.normal(0.0, sigma, size=3))
    return SubjectScalings(
        heart_period=period,
        stiffness_scale=float(stiffness),
        resistance_scale=float(resistance),
        area_scale=float(area),
    )


def network_config_for(scalings: SubjectScalings, config: SurrogateConfig) -> NetworkConfig:
    base = NetworkConfig()
    return NetworkConfig(
        heart_rate_scale=base.base_period / scalings.heart_period,
        stiffness_scale=scalings.stiffness_scale,
        area_scale=scalings.area_scale,
        resistance_scale=scalings.resistance_scale,
        nodes_per_segment=config.nodes_per_segment,
        density=config.density,
        viscosity=config.viscosity,
    )


def simulate_subject(subject: VirtualSubject, config: SurrogateConfig) -> WaveformSet:
    """Build the subject's network, place its disease if any, and solve it"""
    network = build_reference_network(network_config_for(subject.scalings, config))
    if subject.disease is not None:
        network = apply_disease_spec(network, subject.disease)
    inflow = HeartInflow.half_sine(
        period=network.heart_period,
        stroke_volume=config.stroke_volume,
        order=config.harmonics,
    )
    return solve_network(network, inflow, config.harmonics, patient_id=subject.id)


def make_subject(seed: int, index: int, disease: Optional[DiseaseKind],
                 config: SurrogateConfig) -> VirtualSubject:
    """Subject ``index``; its scalings depend only on (seed, index) so twins share them"""
    scalings = sample_scalings(derive_rng(seed, "subject", index), config)
    spec = None
    if disease is not None:
        spec = sample_disease(disease, derive_rng(seed, "disease", disease.value, index))
    return VirtualSubject(id=subject_id(index), index=index, scalings=scalings, disease=spec)


def _generate_one(seed: int, index: int, disease: Optional[DiseaseKind],
                  config: SurrogateConfig) -> Tuple[VirtualSubject, WaveformSet]:
    subject = make_subject(seed, index, disease, config)
    return subject, simulate_subject(subject, config)


def generate_population(n_subjects: int, disease: Optional[DiseaseKind] = None,
                        seed: int = 0, config: Optional[SurrogateConfig] = None,
                        n_jobs: Optional[int] = 1,
                        progress: bool = False) -> List[Tuple[VirtualSubject, WaveformSet]]:
    """Subjects 0..n-1, healthy when ``disease`` is None, otherwise diseased twins"""
    if n_subjects < 1:
        raise NetworkException(f"n_subjects must be >= 1, got {n_subjects}")
    config = config or SurrogateConfig()
    label = disease.value if disease is not None else "H"
    logger.info(f"Generating {n_subjects} subjects for cohort {label}")

    results = Parallel(n_jobs=n_jobs or -1, return_as="generator")(
        delayed(_generate_one)(seed, i, disease, config) for i in range(n_subjects)
    )
    return list(tqdm(results, total=n_subjects, desc=f"VPD_{label}", disable=not progress))
