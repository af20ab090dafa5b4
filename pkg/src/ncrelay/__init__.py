"""Simulation and analysis of network-coded multi-source multi-relay networks."""

from .channel import SnrPoint, Topology
from .gf2code import GuardExceeded, NetworkCode
from .montecarlo import McConfig, McEstimate, estimate_abep

__version__ = "0.1.0"

__all__ = ["GuardExceeded", "McConfig", "McEstimate", "NetworkCode", "SnrPoint", "Topology", "estimate_abep"]
