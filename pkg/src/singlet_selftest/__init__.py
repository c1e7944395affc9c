"""Exact-simulation toolkit for self-testing many-body spin singlets with a chained Bell inequality."""

from .bellspec import BellSpec, CorrelatorTable, bell_value, classical_bound, quantum_bound
from .hilbert import QuantumState

__all__ = [
    "BellSpec",
    "CorrelatorTable",
    "QuantumState",
    "bell_value",
    "classical_bound",
    "quantum_bound",
]
__version__ = "0.1.0"
