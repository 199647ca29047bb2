"""
vascsim: arterial disease classification from virtual-patient pulse waveforms

Simulates healthy and diseased virtual patients with a frequency-domain
arterial network surrogate, describes each measured waveform by its truncated
Fourier series, and evaluates six classifier families on every combination of
flow-rate and pressure measurements.
"""

__version__ = "0.1.0"

from .core.types import (
    Cohort, DiseaseKind, DiseaseSpec, Laterality, Measurement, Method, RunConfig, Side
)
from .core.exceptions import (
    VascSimException, DiseaseModelException, NetworkException, FeatureException,
    LearnerException, EvaluationException, ConfigException, PersistenceException
)
from .features import MeasurementCombination, all_combinations, fit_fourier
from .experiment import Experiment

__all__ = [
    # Core types
    "Cohort", "DiseaseKind", "DiseaseSpec", "Laterality", "Measurement", "Method",
    "RunConfig", "Side",

    # Exceptions
    "VascSimException", "DiseaseModelException", "NetworkException", "FeatureException",
    "LearnerException", "EvaluationException", "ConfigException", "PersistenceException",

    # Main entry points
    "MeasurementCombination", "all_combinations", "fit_fourier", "Experiment",
]
