"""Periodic 1-D grid geometry and discrete differential operators.

All single-particle vectors live on a uniform grid of ``d`` points on a
torus of length ``L``.  Inner products carry the grid weight ``h = L/d``:

    <f, g> = h * sum_j conj(f_j) g_j

so that grid functions mimic their continuum counterparts.  Because the
weight is uniform, the matrix of an operator in the orthonormal basis
e_x / sqrt(h) coincides with its entries acting on grid vectors, and
Hermiticity is ordinary conjugate-transpose symmetry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class GridGeometry:
    """Uniform periodic grid: d points on [0, L), spacing h = L/d."""

    d: int
    L: float
    hbar: float = 1.0
    kinetic: str = "fd3"  # "fd3" (3-point Laplacian) or "spectral"

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"need at least 2 grid points, got d={self.d}")
        if self.L <= 0:
            raise ValueError(f"box length must be positive, got L={self.L}")
        if self.hbar <= 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if self.kinetic not in ("fd3", "spectral"):
            raise ValueError(f"unknown kinetic discretization {self.kinetic!r}")

    @property
    def h(self) -> float:
        return self.L / self.d

    @property
    def x(self) -> np.ndarray:
        """Grid points x_j = j*h."""
        return np.arange(self.d) * self.h

    @property
    def omegas(self) -> np.ndarray:
        """Dual-lattice frequencies in FFT order (signed)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.d, d=self.h)


def grid_inner(f: np.ndarray, g: np.ndarray, geom: GridGeometry) -> complex:
    return geom.h * np.vdot(f, g)


def grid_norm(f: np.ndarray, geom: GridGeometry) -> float:
    return float(np.sqrt(geom.h) * np.linalg.norm(f))


def normalize(f: np.ndarray, geom: GridGeometry) -> np.ndarray:
    n = grid_norm(f, geom)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return f / n


def to_coefficients(f: np.ndarray, geom: GridGeometry) -> np.ndarray:
    """Coefficients of f in the orthonormal basis e_x/sqrt(h)."""
    return np.sqrt(geom.h) * np.asarray(f)


def laplacian_matrix(geom: GridGeometry) -> np.ndarray:
    """Discrete periodic Laplacian as a dense d x d matrix."""
    d, h = geom.d, geom.h
    if geom.kinetic == "fd3":
        lap = np.zeros((d, d))
        idx = np.arange(d)
        lap[idx, idx] = -2.0
        lap[idx, (idx + 1) % d] = 1.0
        lap[idx, (idx - 1) % d] = 1.0
        return lap / h**2
    # spectral: diagonal in the discrete Fourier basis with symbol -omega^2
    omega2 = geom.omegas**2
    F = np.fft.fft(np.eye(d), axis=0)
    lap = np.fft.ifft(-omega2[:, None] * F, axis=0)
    return 0.5 * (lap + lap.conj().T).real if _is_real(lap) else 0.5 * (lap + lap.conj().T)


def _is_real(m: np.ndarray, tol: float = 1e-12) -> bool:
    return float(np.abs(m.imag).max()) <= tol * max(1.0, float(np.abs(m).max()))


def kinetic_matrix(geom: GridGeometry) -> np.ndarray:
    """Kinetic energy K = -(hbar^2/2) Delta."""
    return -0.5 * geom.hbar**2 * laplacian_matrix(geom)


def dispersion(geom: GridGeometry, omega: float) -> float:
    """Eigenvalue of -Delta on the plane wave exp(i*omega*x)."""
    if geom.kinetic == "spectral":
        return omega**2
    return (2.0 - 2.0 * np.cos(omega * geom.h)) / geom.h**2


def check_hermitian(M: np.ndarray, tol: float = HERMITIAN_TOL, what: str = "matrix") -> None:
    scale = max(float(np.abs(M).max()), 1e-300)
    drift = float(np.abs(M - M.conj().T).max())
    if drift > tol * scale:
        raise ValueError(f"{what} is not Hermitian (relative drift {drift / scale:.3e})")


def hermitize(M: np.ndarray, tol: float = HERMITIAN_TOL, what: str = "matrix") -> np.ndarray:
    """Symmetrize (M + M^dagger)/2; reject if the drift exceeds tol."""
    check_hermitian(M, tol=tol, what=what)
    return 0.5 * (M + M.conj().T)


def h2_norm(psi: np.ndarray, geom: GridGeometry) -> float:
    """Discrete Sobolev norm ||(I - Delta) psi|| with the grid weight."""
    lap = laplacian_matrix(geom)
    return grid_norm(psi - lap @ psi, geom)
