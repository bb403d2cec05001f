"""Discrete Jacobi-operator spectra of minimal surfaces in S^n and S^1(r) x S^2(s)."""

__version__ = "0.1.0"

from .errors import ConvergenceError, GeometryError, MeshError
from .surfaces import AnalyticSurface, SURFACE_NAMES, bipolar, get_surface
from .mesh import PeriodicMesh, assemble_operator, triangulate
from .eigen import EigenResult, smallest_eigenpairs

__all__ = [
    "AnalyticSurface",
    "ConvergenceError",
    "EigenResult",
    "GeometryError",
    "MeshError",
    "PeriodicMesh",
    "SURFACE_NAMES",
    "assemble_operator",
    "bipolar",
    "get_surface",
    "smallest_eigenpairs",
    "triangulate",
]
