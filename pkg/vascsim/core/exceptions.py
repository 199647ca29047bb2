"""
Core exceptions for the vascsim framework
"""

from typing import List, Optional


class VascSimException(Exception):
    """Base exception for vascsim"""
    pass


class DiseaseModelException(VascSimException):
    """Raised for invalid disease specifications or chain mismatches"""
    pass


class NetworkException(VascSimException):
    """Exception for arterial network construction and solving errors"""
    pass


class FeatureException(VascSimException):
    """Exception for Fourier fitting and feature assembly errors"""
    pass


class LearnerException(VascSimException):
    """Exception for classifier fitting and prediction errors"""
    pass


class ConvergenceException(LearnerException):
    """Raised when an iterative solver stops at its iteration cap"""
    pass


class EvaluationException(VascSimException):
    """Exception for split planning, sweeps and report analysis"""
    pass


class ConfigException(VascSimException):
    """Raised when a run configuration is invalid"""
    pass


class PersistenceException(VascSimException):
    """Exception for reading and writing cohort, model and report files"""
    pass


class RecordValidationException(PersistenceException):
    """Raised when one or more records fail schema validation"""

    def __init__(self, message: str, problems: Optional[List[str]] = None):
        super().__init__(message)
        self.problems = problems or []

    def __str__(self) -> str:
        base = super().__str__()
        if not self.problems:
            return base
        shown = "\n".join(f"  - {p}" for p in self.problems[:20])
        more = f"\n  ... and {len(self.problems) - 20} more" if len(self.problems) > 20 else ""
        return f"{base}\n{shown}{more}"
