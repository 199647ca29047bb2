"""
Arterial network model and the reference 71-segment tree.

All quantities are CGS: lengths in cm, areas in cm^2, wave speeds in cm/s,
density in g/cm^3, viscosity in poise, resistances in dyn s/cm^5 and
compliances in cm^5/dyn.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..core.exceptions import NetworkException
from ..core.types import MEASUREMENT_ORDER, Measurement, Side

logger = logging.getLogger(__name__)

MMHG = 1333.22  # dyn/cm^2


@dataclass(frozen=True, eq=False)
class Segment:
    """One vessel segment, discretised into equal-length axial nodes.

    ``area`` holds the (possibly diseased) node areas, ``reference_area`` the
    healthy baseline at the same nodes. Both are read-only arrays.
    """
    id: str
    parent: Optional[str]
    length: float
    wave_speed: float
    density: float
    inlet_area: float
    outlet_area: float
    area: np.ndarray
    reference_area: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.area.shape[0])

    @property
    def node_length(self) -> float:
        return self.length / self.n_nodes

    def node_centres(self) -> np.ndarray:
        """Fractional positions of the node centres along the segment"""
        return (np.arange(self.n_nodes) + 0.5) / self.n_nodes

    def with_area(self, area: np.ndarray) -> "Segment":
        area = np.array(area, dtype=float)
        if area.shape != self.reference_area.shape:
            raise NetworkException(
                f"Segment {self.id}: area profile has {area.shape[0]} nodes, expected {self.n_nodes}"
            )
        area.setflags(write=False)
        return replace(self, area=area)

    def characteristic_impedance(self) -> np.ndarray:
        return self.density * self.wave_speed / self.area

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "parent": self.parent,
            "length": self.length,
            "wave_speed": self.wave_speed,
            "density": self.density,
            "inlet_area": self.inlet_area,
            "outlet_area": self.outlet_area,
            "area": self.area.tolist(),
            "reference_area": self.reference_area.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Segment":
        area = np.array(data["area"], dtype=float)
        reference = np.array(data.get("reference_area", data["area"]), dtype=float)
        area.setflags(write=False)
        reference.setflags(write=False)
        return cls(
            id=data["id"],
            parent=data.get("parent"),
            length=float(data["length"]),
            wave_speed=float(data["wave_speed"]),
            density=float(data["density"]),
            inlet_area=float(data.get("inlet_area", reference[0])),
            outlet_area=float(data.get("outlet_area", reference[-1])),
            area=area,
            reference_area=reference,
        )


@dataclass(frozen=True)
class WindkesselLoad:
    """Three-element Windkessel: Rp in series with (Rd parallel C)"""
    proximal_resistance: float
    distal_resistance: float
    compliance: float

    def impedance(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        rd = self.distal_resistance
        return self.proximal_resistance + rd / (1.0 + 1j * omega * rd * self.compliance)

    def to_dict(self) -> Dict[str, float]:
        return {
            "proximal_resistance": self.proximal_resistance,
            "distal_resistance": self.distal_resistance,
            "compliance": self.compliance,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WindkesselLoad":
        return cls(
            proximal_resistance=float(data["proximal_resistance"]),
            distal_resistance=float(data["distal_resistance"]),
            compliance=float(data["compliance"]),
        )


@dataclass(frozen=True)
class MeasurementSite:
    segment_id: str
    position: float


@dataclass(frozen=True, eq=False)
class ArterialNetworkModel:
    """A tree of segments closed by Windkessel loads at every leaf"""
    segments: Dict[str, Segment]
    loads: Dict[str, WindkesselLoad]
    root: str
    sites: Dict[str, MeasurementSite]
    heart_period: float
    viscosity: float = 0.035
    _children: Dict[str, Tuple[str, ...]] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        children: Dict[str, List[str]] = {seg_id: [] for seg_id in self.segments}
        for seg in self.segments.values():
            if seg.parent is not None:
                if seg.parent not in children:
                    raise NetworkException(f"Segment {seg.id} has unknown parent {seg.parent}")
                children[seg.parent].append(seg.id)
        object.__setattr__(self, "_children", {k: tuple(v) for k, v in children.items()})
        self.validate()

    def children(self, segment_id: str) -> Tuple[str, ...]:
        return self._children[segment_id]

    def is_leaf(self, segment_id: str) -> bool:
        return not self._children[segment_id]

    @property
    def leaves(self) -> List[str]:
        return [seg_id for seg_id in self.segments if self.is_leaf(seg_id)]

    def topological_order(self) -> List[str]:
        """Root-first breadth order; every parent precedes its children"""
        order = [self.root]
        i = 0
        while i < len(order):
            order.extend(self._children[order[i]])
            i += 1
        return order

    def validate(self):
        if self.root not in self.segments:
            raise NetworkException(f"Root segment {self.root} not in network")
        roots = [s.id for s in self.segments.values() if s.parent is None]
        if roots != [self.root]:
            raise NetworkException(f"Network must have exactly one root, found {roots}")
        reachable = self.topological_order()
        if len(reachable) != len(self.segments) or len(set(reachable)) != len(reachable):
            raise NetworkException("Network is not a tree: unreachable segments or cycles present")
        for seg in self.segments.values():
            if seg.length <= 0 or seg.wave_speed <= 0 or seg.density <= 0:
                raise NetworkException(f"Segment {seg.id} has non-positive length, wave speed or density")
            if seg.n_nodes < 1:
                raise NetworkException(f"Segment {seg.id} has no axial nodes")
            if not np.all(np.isfinite(seg.area)) or np.any(seg.area <= 0):
                raise NetworkException(f"Segment {seg.id} has a zero or non-finite area node")
            if np.any(seg.reference_area <= 0):
                raise NetworkException(f"Segment {seg.id} has a non-positive reference area")
        for leaf in self.leaves:
            if leaf not in self.loads:
                raise NetworkException(f"Leaf segment {leaf} has no terminal load")
        for seg_id, load in self.loads.items():
            if seg_id not in self.segments or not self.is_leaf(seg_id):
                raise NetworkException(f"Terminal load attached to internal segment {seg_id}")
            if load.proximal_resistance <= 0 or load.distal_resistance < 0 or load.compliance < 0:
                raise NetworkException(f"Invalid Windkessel values on {seg_id}: {load}")
        for name, site in self.sites.items():
            if site.segment_id not in self.segments:
                raise NetworkException(f"Measurement site {name} refers to unknown segment {site.segment_id}")
            if not 0.0 <= site.position <= 1.0:
                raise NetworkException(f"Measurement site {name} position {site.position} outside [0, 1]")
        if self.heart_period <= 0:
            raise NetworkException(f"Heart period must be positive, got {self.heart_period}")
        if self.viscosity < 0:
            raise NetworkException(f"Viscosity must be non-negative, got {self.viscosity}")

    def with_segments(self, replacements: Mapping[str, Segment]) -> "ArterialNetworkModel":
        """Copy of the network with some segments replaced; the rest are shared"""
        segments = dict(self.segments)
        for seg_id, seg in replacements.items():
            if seg_id not in segments:
                raise NetworkException(f"Cannot replace unknown segment {seg_id}")
            segments[seg_id] = seg
        return ArterialNetworkModel(
            segments=segments,
            loads=self.loads,
            root=self.root,
            sites=self.sites,
            heart_period=self.heart_period,
            viscosity=self.viscosity,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "root": self.root,
            "heart_period": self.heart_period,
            "viscosity": self.viscosity,
            "segments": [self.segments[s].to_dict() for s in self.topological_order()],
            "loads": {k: v.to_dict() for k, v in self.loads.items()},
            "sites": {k: {"segment": v.segment_id, "position": v.position} for k, v in self.sites.items()},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ArterialNetworkModel":
        try:
            segments = {}
            for item in data["segments"]:
                seg = Segment.from_dict(item)
                segments[seg.id] = seg
            return cls(
                segments=segments,
                loads={k: WindkesselLoad.from_dict(v) for k, v in data["loads"].items()},
                root=data["root"],
                sites={
                    k: MeasurementSite(segment_id=v["segment"], position=float(v["position"]))
                    for k, v in data["sites"].items()
                },
                heart_period=float(data["heart_period"]),
                viscosity=float(data.get("viscosity", 0.035)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise NetworkException(f"Malformed network document: {e}")


# ---------------------------------------------------------------------------
# Reference geometry
# ---------------------------------------------------------------------------

# (id, parent, length cm, inlet area cm^2, outlet area cm^2)
_CENTRAL = [
    ("ascending_aorta", None, 4.0, 6.79, 6.51),
    ("coronary_R", "ascending_aorta", 10.0, 0.13, 0.09),
    ("coronary_L", "ascending_aorta", 10.0, 0.16, 0.11),
    ("aortic_arch_1", "ascending_aorta", 2.0, 6.51, 5.90),
    ("brachiocephalic", "aortic_arch_1", 3.4, 1.33, 1.21),
    ("aortic_arch_2", "aortic_arch_1", 2.0, 5.90, 5.31),
    ("aortic_arch_3", "aortic_arch_2", 3.9, 5.31, 4.52),
    ("thoracic_aorta_1", "aortic_arch_3", 5.2, 4.52, 3.14),
    ("intercostals", "thoracic_aorta_1", 8.0, 0.79, 0.55),
    ("thoracic_aorta_2", "thoracic_aorta_1", 10.4, 3.14, 2.01),
    ("celiac_1", "thoracic_aorta_2", 2.0, 0.50, 0.42),
    ("hepatic", "celiac_1", 6.6, 0.28, 0.24),
    ("celiac_2", "celiac_1", 1.0, 0.35, 0.33),
    ("gastric", "celiac_2", 7.1, 0.10, 0.09),
    ("splenic", "celiac_2", 6.3, 0.24, 0.21),
    ("abdominal_aorta_1", "thoracic_aorta_2", 5.3, None, None),
    ("superior_mesenteric", "abdominal_aorta_1", 5.9, 0.50, 0.41),
    ("abdominal_aorta_2", "abdominal_aorta_1", 2.0, None, None),
    ("renal_R", "abdominal_aorta_2", 3.2, 0.33, 0.33),
    ("renal_L", "abdominal_aorta_2", 3.2, 0.33, 0.33),
    ("abdominal_aorta_3", "abdominal_aorta_2", 2.0, None, None),
    ("inferior_mesenteric", "abdominal_aorta_3", 5.0, 0.16, 0.13),
    ("abdominal_aorta_4", "abdominal_aorta_3", 9.0, None, None),
]

ABDOMINAL_AREAS = (1.76, 1.09)


def _upper_limb(side: str) -> List[Tuple]:
    carotid_parent = "brachiocephalic" if side == "R" else "aortic_arch_2"
    subclavian_parent = "brachiocephalic" if side == "R" else "aortic_arch_3"
    carotid_length = 17.7 if side == "R" else 20.8
    s = side
    return [
        (f"common_carotid_{s}", carotid_parent, carotid_length, 0.50, 0.35),
        (f"internal_carotid_{s}", f"common_carotid_{s}", 17.6, 0.20, 0.10),
        (f"external_carotid_{s}", f"common_carotid_{s}", 17.7, 0.15, 0.08),
        (f"subclavian_{s}_1", subclavian_parent, 3.4, 0.50, 0.45),
        (f"vertebral_{s}", f"subclavian_{s}_1", 14.8, 0.11, 0.06),
        (f"subclavian_{s}_2", f"subclavian_{s}_1", 6.8, 0.45, 0.40),
        (f"axillary_{s}", f"subclavian_{s}_2", 12.0, 0.40, 0.25),
        (f"brachial_{s}_1", f"axillary_{s}", 12.0, 0.25, 0.20),
        (f"brachial_{s}_2", f"brachial_{s}_1", 10.0, 0.20, 0.16),
        (f"radial_{s}", f"brachial_{s}_2", 23.5, 0.10, 0.06),
        (f"ulnar_{s}_1", f"brachial_{s}_2", 6.7, 0.14, 0.13),
        (f"interosseous_{s}", f"ulnar_{s}_1", 7.9, 0.03, 0.03),
        (f"ulnar_{s}_2", f"ulnar_{s}_1", 17.1, 0.12, 0.07),
    ]


def _lower_limb(side: str) -> List[Tuple]:
    s = side
    return [
        (f"common_iliac_{s}", "abdominal_aorta_4", 5.8, 0.62, 0.54),
        (f"internal_iliac_{s}", f"common_iliac_{s}", 5.0, 0.16, 0.16),
        (f"external_iliac_{s}", f"common_iliac_{s}", 14.4, 0.41, 0.33),
        (f"femoral_{s}_1", f"external_iliac_{s}", 4.4, 0.33, 0.30),
        (f"deep_femoral_{s}", f"femoral_{s}_1", 12.6, 0.20, 0.15),
        (f"femoral_{s}_2", f"femoral_{s}_1", 25.0, 0.27, 0.20),
        (f"popliteal_{s}_1", f"femoral_{s}_2", 9.4, 0.20, 0.18),
        (f"popliteal_{s}_2", f"popliteal_{s}_1", 9.4, 0.18, 0.16),
        (f"anterior_tibial_{s}", f"popliteal_{s}_2", 32.2, 0.06, 0.04),
        (f"posterior_tibial_{s}", f"popliteal_{s}_2", 34.4, 0.08, 0.05),
        (f"peroneal_{s}", f"popliteal_{s}_2", 31.8, 0.05, 0.04),
    ]


REFERENCE_TABLE: List[Tuple] = (
    _CENTRAL + _upper_limb("R") + _upper_limb("L") + _lower_limb("R") + _lower_limb("L")
)

# Ordered segment runs within which a disease may be placed.
CHAIN_SEGMENTS: Dict[str, Tuple[str, ...]] = {
    "AA": ("abdominal_aorta_1", "abdominal_aorta_2", "abdominal_aorta_3", "abdominal_aorta_4"),
}
for _s in ("R", "L"):
    CHAIN_SEGMENTS[f"CA_{_s}"] = (f"common_carotid_{_s}",)
    CHAIN_SEGMENTS[f"SA_{_s}"] = (f"subclavian_{_s}_1", f"subclavian_{_s}_2")
    CHAIN_SEGMENTS[f"PA_{_s}"] = (
        f"common_iliac_{_s}", f"external_iliac_{_s}", f"femoral_{_s}_1",
        f"femoral_{_s}_2", f"popliteal_{_s}_1",
    )

# Measurement kind -> (segment base, fractional position)
_SITE_LAYOUT = {
    Measurement.Q1: ("common_carotid_{s}", 0.95),
    Measurement.P1: ("common_carotid_{s}", 0.95),
    Measurement.Q2: ("brachial_{s}_1", 0.5),
    Measurement.P2: ("brachial_{s}_1", 0.5),
    Measurement.P3: ("radial_{s}", 0.5),
    Measurement.Q3: ("femoral_{s}_2", 0.5),
}

# Relative share of cardiac output drained by each terminal bed.
_FLOW_SHARES = {
    "coronary_R": 0.020, "coronary_L": 0.025, "intercostals": 0.040,
    "hepatic": 0.070, "gastric": 0.030, "splenic": 0.050,
    "superior_mesenteric": 0.120, "renal_R": 0.090, "renal_L": 0.090,
    "inferior_mesenteric": 0.020,
}
for _s in ("R", "L"):
    _FLOW_SHARES.update({
        f"internal_carotid_{_s}": 0.060, f"external_carotid_{_s}": 0.030,
        f"vertebral_{_s}": 0.025, f"radial_{_s}": 0.012, f"interosseous_{_s}": 0.004,
        f"ulnar_{_s}_2": 0.012, f"internal_iliac_{_s}": 0.020, f"deep_femoral_{_s}": 0.025,
        f"anterior_tibial_{_s}": 0.012, f"posterior_tibial_{_s}": 0.012, f"peroneal_{_s}": 0.010,
    })


@dataclass
class NetworkConfig:
    """Subject-level scalings and global constants for the reference tree"""
    heart_rate_scale: float = 1.0
    stiffness_scale: float = 1.0
    area_scale: float = 1.0
    resistance_scale: float = 1.0
    nodes_per_segment: int = 32
    base_period: float = 0.9
    density: float = 1.06
    viscosity: float = 0.035
    total_resistance: float = 100.0 * MMHG / 80.0
    total_compliance: float = 7.5e-4

    def validate(self):
        positive = {
            "heart_rate_scale": self.heart_rate_scale,
            "stiffness_scale": self.stiffness_scale,
            "area_scale": self.area_scale,
            "resistance_scale": self.resistance_scale,
            "base_period": self.base_period,
            "density": self.density,
            "total_resistance": self.total_resistance,
            "total_compliance": self.total_compliance,
        }
        for name, value in positive.items():
            if not np.isfinite(value) or value <= 0:
                raise NetworkException(f"Invalid scaling {name}={value}: must be positive")
        if self.viscosity < 0:
            raise NetworkException(f"Invalid viscosity {self.viscosity}")
        if self.nodes_per_segment < 1:
            raise NetworkException(f"nodes_per_segment must be >= 1, got {self.nodes_per_segment}")


def wave_speed_for_radius(radius: float, density: float) -> float:
    """Empirical stiffness law Eh/r0 = k1 exp(k2 r0) + k3, c = sqrt(2Eh / (3 rho r0))"""
    k1, k2, k3 = 2.0e7, -22.53, 8.65e5
    eh_over_r = k1 * np.exp(k2 * radius) + k3
    return float(np.sqrt(2.0 * eh_over_r / (3.0 * density)))


def _abdominal_taper() -> Dict[str, Tuple[float, float]]:
    ids = CHAIN_SEGMENTS["AA"]
    lengths = {row[0]: row[2] for row in _CENTRAL if row[0] in ids}
    total = sum(lengths.values())
    a0, a1 = ABDOMINAL_AREAS
    taper = {}
    start = 0.0
    for seg_id in ids:
        end = start + lengths[seg_id]
        taper[seg_id] = (a0 + (a1 - a0) * start / total, a0 + (a1 - a0) * end / total)
        start = end
    return taper


def build_reference_network(config: Optional[NetworkConfig] = None) -> ArterialNetworkModel:
    """Deterministic 71-segment tree with Windkessel loads at its 32 leaves"""
    config = config or NetworkConfig()
    config.validate()

    taper = _abdominal_taper()
    n = config.nodes_per_segment
    centres = (np.arange(n) + 0.5) / n

    segments: Dict[str, Segment] = {}
    for seg_id, parent, length, a_in, a_out in REFERENCE_TABLE:
        if a_in is None:
            a_in, a_out = taper[seg_id]
        a_in *= config.area_scale
        a_out *= config.area_scale
        profile = a_in + (a_out - a_in) * centres
        profile.setflags(write=False)
        mean_radius = float(np.sqrt(0.5 * (a_in + a_out) / np.pi))
        speed = wave_speed_for_radius(mean_radius, config.density) * config.stiffness_scale
        segments[seg_id] = Segment(
            id=seg_id,
            parent=parent,
            length=length,
            wave_speed=speed,
            density=config.density,
            inlet_area=a_in,
            outlet_area=a_out,
            area=profile,
            reference_area=profile,
        )

    share_total = sum(_FLOW_SHARES.values())
    total_resistance = config.total_resistance * config.resistance_scale
    loads = {}
    for seg_id, share in _FLOW_SHARES.items():
        fraction = share / share_total
        seg = segments[seg_id]
        bed_resistance = total_resistance / fraction
        rp = seg.density * seg.wave_speed / seg.outlet_area
        rd = max(bed_resistance - rp, 0.1 * bed_resistance)
        loads[seg_id] = WindkesselLoad(
            proximal_resistance=rp,
            distal_resistance=rd,
            compliance=config.total_compliance * fraction,
        )

    sites = {}
    for measurement in MEASUREMENT_ORDER:
        base, position = _SITE_LAYOUT[measurement]
        for side in (Side.RIGHT, Side.LEFT):
            sites[measurement.site(side)] = MeasurementSite(
                segment_id=base.format(s=side.value), position=position
            )

    network = ArterialNetworkModel(
        segments=segments,
        loads=loads,
        root="ascending_aorta",
        sites=sites,
        heart_period=config.base_period / config.heart_rate_scale,
        viscosity=config.viscosity,
    )
    logger.debug(f"Built reference network: {len(segments)} segments, {len(loads)} terminal loads")
    return network
