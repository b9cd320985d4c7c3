"""Circuit compression for lattice dynamics with truncated Pauli propagation."""

from .circuit import CliffordGate, ParametrizedCircuit, PauliRotation
from .errors import ConfigurationError, ResourceError
from .lattice import Topology, build_topology, heavy_hex, square_lattice
from .optimize import CompressionProblem, OptimizerConfig, minimize
from .pauli import PauliString, PauliSum, commutes, multiply, overlap_with_zero, weight
from .propagation import Direction, TruncationConfig, propagate
from .risk import build_target_cache, local_risk, local_risk_ti, weighted_full_risk
from .trotter import HamiltonianSpec, SharingMode, TrotterPlan, trotter_circuit

__version__ = "0.1.0"

__all__ = [
    "CliffordGate",
    "CompressionProblem",
    "ConfigurationError",
    "Direction",
    "HamiltonianSpec",
    "OptimizerConfig",
    "ParametrizedCircuit",
    "PauliRotation",
    "PauliString",
    "PauliSum",
    "ResourceError",
    "SharingMode",
    "Topology",
    "TrotterPlan",
    "TruncationConfig",
    "build_target_cache",
    "build_topology",
    "commutes",
    "heavy_hex",
    "local_risk",
    "local_risk_ti",
    "minimize",
    "multiply",
    "overlap_with_zero",
    "propagate",
    "square_lattice",
    "trotter_circuit",
    "weight",
    "weighted_full_risk",
]
