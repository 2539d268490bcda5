"""picklab: finite-dimensional verification lab for bosonic mean-field limits."""

from .geometry import GridGeometry, grid_inner, grid_norm, normalize
from .sector import SectorBasis, SectorTooLargeError, enumerate_basis, lift_mn

__version__ = "0.1.0"

__all__ = [
    "GridGeometry", "grid_inner", "grid_norm", "normalize",
    "SectorBasis", "SectorTooLargeError", "enumerate_basis", "lift_mn",
    "__version__",
]
