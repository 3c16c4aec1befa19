"""Quantum states as resources for anonymous metrology."""

from .qmat import TOL, DensityMatrix, HamiltonianPair, Ket, StateError, configure

__version__ = "0.1.0"

__all__ = ["TOL", "DensityMatrix", "HamiltonianPair", "Ket", "StateError", "configure", "__version__"]
