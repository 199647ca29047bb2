"""
Waveform surrogate: arterial network model and frequency-domain solver.

Population generation lives in ``vascsim.haemo.population`` and is not
re-exported here because it depends on the disease model, which in turn
depends on the network.
"""

from .network import (
    ArterialNetworkModel, MeasurementSite, NetworkConfig, Segment, WindkesselLoad,
    build_reference_network,
)
from .solver import HeartInflow, NetworkSolution, WaveformSet, solve_network, solve_network_full

__all__ = [
    "ArterialNetworkModel", "MeasurementSite", "NetworkConfig", "Segment", "WindkesselLoad",
    "build_reference_network", "HeartInflow", "NetworkSolution", "WaveformSet",
    "solve_network", "solve_network_full",
]
