import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from .exceptions import ConfigException, DiseaseModelException


class DiseaseKind(Enum):
    """Disease cohorts: four disease forms plus the low-severity aneurysm study"""
    CAS = "CAS"
    SAS = "SAS"
    PAD = "PAD"
    AAA = "AAA"
    AAA_L = "AAA_L"

    @property
    def is_aneurysm(self) -> bool:
        return self in (DiseaseKind.AAA, DiseaseKind.AAA_L)

    @property
    def is_lateral(self) -> bool:
        return not self.is_aneurysm

    @classmethod
    def parse(cls, text: str) -> "DiseaseKind":
        """Accept CLI spellings such as 'aaa-l', 'AAA_L' or 'cas'"""
        key = text.strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ConfigException(f"Unknown disease kind: {text}")


class Side(Enum):
    """Body side of a lateral disease or measurement"""
    RIGHT = "R"
    LEFT = "L"
    NOT_APPLICABLE = "NA"


class Measurement(Enum):
    """Bilateral measurement kinds, in canonical feature order"""
    Q1 = "Q1"
    Q2 = "Q2"
    Q3 = "Q3"
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"

    @property
    def is_pressure(self) -> bool:
        return self.value.startswith("P")

    def site(self, side: Side) -> str:
        """Site key such as 'Q1_R'"""
        if side is Side.NOT_APPLICABLE:
            raise ValueError("Measurement sites are always lateral")
        return f"{self.value}_{side.value}"


# Canonical order used for feature vectors.
MEASUREMENT_ORDER: Tuple[Measurement, ...] = (
    Measurement.Q1, Measurement.Q2, Measurement.Q3,
    Measurement.P1, Measurement.P2, Measurement.P3,
)

# Row order of the combination tables.
APPENDIX_ORDER: Tuple[Measurement, ...] = (
    Measurement.Q3, Measurement.Q2, Measurement.Q1,
    Measurement.P3, Measurement.P2, Measurement.P1,
)

SITE_NAMES: Tuple[str, ...] = tuple(
    m.site(s) for m in MEASUREMENT_ORDER for s in (Side.RIGHT, Side.LEFT)
)


class Laterality(Enum):
    """Which sides of each selected measurement are used"""
    BOTH = "both"
    RIGHT = "R"
    LEFT = "L"

    @property
    def sides(self) -> Tuple[Side, ...]:
        if self is Laterality.BOTH:
            return (Side.RIGHT, Side.LEFT)
        return (Side(self.value),)


class Method(Enum):
    """Classifier families, in the column order of the result tables"""
    NB = "NB"
    LR = "LR"
    SVM = "SVM"
    RF = "RF"
    MLP = "MLP"
    GB = "GB"

    @classmethod
    def parse_list(cls, text: str) -> List["Method"]:
        if text.strip().lower() == "all":
            return list(cls)
        methods = []
        for token in text.split(","):
            token = token.strip().upper()
            if not token:
                continue
            try:
                methods.append(cls(token))
            except ValueError:
                raise ConfigException(f"Unknown method: {token}")
        if not methods:
            raise ConfigException("Method list is empty")
        return methods


class Cohort(Enum):
    """Cohort tags used in record files"""
    H = "H"
    CAS = "CAS"
    SAS = "SAS"
    PAD = "PAD"
    AAA = "AAA"
    AAA_L = "AAA_L"

    @property
    def disease(self) -> Optional[DiseaseKind]:
        if self is Cohort.H:
            return None
        return DiseaseKind(self.value)

    @property
    def filename(self) -> str:
        return f"VPD_{self.value}.jsonl"


# Severity bounds per disease kind (fraction for stenoses, area multiple for aneurysms).
SEVERITY_BOUNDS: Dict[DiseaseKind, Tuple[float, float]] = {
    DiseaseKind.CAS: (0.5, 0.95),
    DiseaseKind.SAS: (0.5, 0.95),
    DiseaseKind.PAD: (0.5, 0.95),
    DiseaseKind.AAA: (7.13, 25.93),
    DiseaseKind.AAA_L: (3.0, 7.0),
}

REFERENCE_RANGE = (0.2, 0.8)
START_MIN = 0.1
END_MAX = 0.9
LOCATION_MARGIN = 0.05


@dataclass(frozen=True)
class DiseaseSpec:
    """A single disease placed along a vessel chain.

    b, e and r are normalised chain coordinates. ``severity`` is the fractional
    area reduction at the midpoint for stenoses and the added area multiple for
    aneurysms. A severity of exactly 0 is accepted as an identity probe.
    """
    kind: DiseaseKind
    severity: float
    b: float
    e: float
    r: float
    side: Side = Side.NOT_APPLICABLE

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise DiseaseModelException(f"Invalid disease spec: {'; '.join(problems)}")

    def problems(self) -> List[str]:
        problems = []
        values = (self.severity, self.b, self.e, self.r)
        if not all(math.isfinite(v) for v in values):
            return [f"non-finite value in {values}"]
        # Floating-point slack so that bounds built from the margins themselves pass.
        eps = 1e-12
        if not REFERENCE_RANGE[0] - eps <= self.r <= REFERENCE_RANGE[1] + eps:
            problems.append(f"r={self.r} outside [{REFERENCE_RANGE[0]}, {REFERENCE_RANGE[1]}]")
        if not START_MIN - eps <= self.b <= self.r - LOCATION_MARGIN + eps:
            problems.append(f"b={self.b} outside [{START_MIN}, r-{LOCATION_MARGIN}]")
        if not self.r + LOCATION_MARGIN - eps <= self.e <= END_MAX + eps:
            problems.append(f"e={self.e} outside [r+{LOCATION_MARGIN}, {END_MAX}]")
        low, high = SEVERITY_BOUNDS[self.kind]
        if self.severity != 0.0 and not low <= self.severity <= high:
            problems.append(f"severity={self.severity} outside [{low}, {high}] for {self.kind.value}")
        if self.kind.is_aneurysm and self.side is not Side.NOT_APPLICABLE:
            problems.append(f"{self.kind.value} has no side, got {self.side.value}")
        if self.kind.is_lateral and self.side is Side.NOT_APPLICABLE:
            problems.append(f"{self.kind.value} requires a side")
        return problems

    @property
    def is_probe(self) -> bool:
        return self.severity == 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "severity": self.severity,
            "b": self.b,
            "e": self.e,
            "r": self.r,
            "side": self.side.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DiseaseSpec":
        try:
            return cls(
                kind=DiseaseKind(data["kind"]),
                severity=float(data["severity"]),
                b=float(data["b"]),
                e=float(data["e"]),
                r=float(data["r"]),
                side=Side(data.get("side", Side.NOT_APPLICABLE.value)),
            )
        except (KeyError, ValueError, TypeError) as e:
            raise DiseaseModelException(f"Malformed disease spec {data!r}: {e}")


@dataclass
class PopulationConfig:
    """Cohort sizes; each diseased cohort twins the first n healthy subjects"""
    healthy: int = 1000
    diseases: Dict[str, int] = field(
        default_factory=lambda: {k.value: 1000 for k in DiseaseKind}
    )

    def count(self, kind: DiseaseKind) -> int:
        return int(self.diseases.get(kind.value, 0))


@dataclass
class SurrogateConfig:
    """Waveform surrogate and virtual-population variability settings"""
    harmonics: int = 5
    nodes_per_segment: int = 32
    variability_sigma: float = 0.1
    period_range: Tuple[float, float] = (0.7, 1.1)
    stroke_volume: float = 70.0
    viscosity: float = 0.035
    density: float = 1.06


@dataclass
class EvaluationConfig:
    n_folds: int = 5
    histogram_bins: int = 20
    gb_importance_folds: int = 5


@dataclass
class RunConfig:
    """Configuration for a complete generate/sweep run"""
    seed: int
    population: PopulationConfig = field(default_factory=PopulationConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    methods: List[str] = field(default_factory=lambda: [m.value for m in Method])
    learners: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    grids: Dict[str, Dict[str, List[Any]]] = field(default_factory=dict)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    output_dir: str = "output"
    jobs: Optional[int] = None

    def validate(self) -> "RunConfig":
        if self.seed is None or isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigException("A master seed (non-negative integer) is required")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigException(f"Seed out of u64 range: {self.seed}")
        if self.population.healthy < 2:
            raise ConfigException(f"Healthy cohort needs at least 2 subjects, got {self.population.healthy}")
        for name, count in self.population.diseases.items():
            DiseaseKind.parse(name)
            if count != 0 and count < 2:
                raise ConfigException(f"Cohort {name} needs at least 2 subjects, got {count}")
            if count > self.population.healthy:
                raise ConfigException(
                    f"Cohort {name} ({count}) cannot exceed the healthy cohort ({self.population.healthy})"
                )
        if self.surrogate.harmonics < 1:
            raise ConfigException("surrogate.harmonics must be >= 1")
        if self.surrogate.nodes_per_segment < 1:
            raise ConfigException("surrogate.nodes_per_segment must be >= 1")
        low, high = self.surrogate.period_range
        if not 0 < low <= high:
            raise ConfigException(f"Invalid heart period range: {self.surrogate.period_range}")
        if self.evaluation.n_folds < 1:
            raise ConfigException("evaluation.n_folds must be >= 1")
        for name in self.methods:
            Method.parse_list(name)
        for name in list(self.learners) + list(self.grids):
            Method.parse_list(name)
        if self.jobs is not None and self.jobs == 0:
            raise ConfigException("jobs must be a non-zero integer")
        return self

    @property
    def method_list(self) -> List[Method]:
        return [Method(m.upper()) for m in self.methods]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigException("Configuration document must be a mapping")
        if "seed" not in data:
            raise ConfigException("Configuration is missing the mandatory 'seed'")
        known = {"seed", "population", "surrogate", "methods", "learners", "grids",
                 "evaluation", "output_dir", "jobs"}
        unknown = set(data) - known
        if unknown:
            raise ConfigException(f"Unknown configuration keys: {sorted(unknown)}")
        try:
            surrogate = dict(data.get("surrogate") or {})
            if "period_range" in surrogate:
                surrogate["period_range"] = tuple(surrogate["period_range"])
            population = dict(data.get("population") or {})
            if "diseases" in population:
                population["diseases"] = {
                    DiseaseKind.parse(k).value: int(v) for k, v in population["diseases"].items()
                }
            config = cls(
                seed=data["seed"],
                population=PopulationConfig(**population),
                surrogate=SurrogateConfig(**surrogate),
                methods=[str(m).upper() for m in data.get("methods", [m.value for m in Method])],
                learners={str(k).upper(): dict(v) for k, v in (data.get("learners") or {}).items()},
                grids={str(k).upper(): dict(v) for k, v in (data.get("grids") or {}).items()},
                evaluation=EvaluationConfig(**(data.get("evaluation") or {})),
                output_dir=str(data.get("output_dir", "output")),
                jobs=data.get("jobs"),
            )
        except TypeError as e:
            raise ConfigException(f"Invalid configuration section: {e}")
        return config.validate()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "population": {
                "healthy": self.population.healthy,
                "diseases": dict(self.population.diseases),
            },
            "surrogate": {
                "harmonics": self.surrogate.harmonics,
                "nodes_per_segment": self.surrogate.nodes_per_segment,
                "variability_sigma": self.surrogate.variability_sigma,
                "period_range": list(self.surrogate.period_range),
                "stroke_volume": self.surrogate.stroke_volume,
                "viscosity": self.surrogate.viscosity,
                "density": self.surrogate.density,
            },
            "methods": list(self.methods),
            "learners": {k: dict(v) for k, v in self.learners.items()},
            "grids": {k: dict(v) for k, v in self.grids.items()},
            "evaluation": {
                "n_folds": self.evaluation.n_folds,
                "histogram_bins": self.evaluation.histogram_bins,
                "gb_importance_folds": self.evaluation.gb_importance_folds,
            },
            "output_dir": self.output_dir,
            "jobs": self.jobs,
        }
