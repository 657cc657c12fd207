"""Clifford-level simulator for adiabatic code deformation on planar surface codes."""

from .pauli import PauliOp, commutes, conjugate_by_rotation, multiply

__version__ = "0.1.0"

__all__ = ["PauliOp", "commutes", "conjugate_by_rotation", "multiply", "__version__"]
