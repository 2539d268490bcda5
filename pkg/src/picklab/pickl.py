"""Counting functional machinery: projectors, alpha, and trace-norm bounds.

Given a reference Hartree state psi, the rank-one grid projector is
R = h |psi><psi| and its complement P = I - R.  On the N-boson sector the
averaged lift  Pi = lift_mn(P)  counts the excited fraction; its expectation

    alpha(t) = <Psi, Pi Psi> = 1 - <psi, F_{N:1} psi>

controls all reduced marginals through the rank-one comparison bound

    || F_{N:m} - R^{tensor m} ||_1 <= 2 sqrt(2 m alpha) .

Pi has spectrum {k/N : k = 0..N} and a one-dimensional kernel spanned by
psi^{tensor N}, so it admits a clean spectral pseudo-inverse.
"""

from __future__ import annotations

import numpy as np

from .geometry import GridGeometry, grid_norm, to_coefficients
from .sector import SectorBasis, lift_mn, product_state

PSEUDO_INVERSE_TOL = 1e-10


def projector_pair(psi: np.ndarray, geom: GridGeometry):
    """Rank-one projector R = h|psi><psi| and its complement P = I - R."""
    psi = np.asarray(psi)
    n = grid_norm(psi, geom)
    if abs(n - 1.0) > 1e-8:
        raise ValueError(f"reference state not grid-normalized (norm {n:.6f})")
    c = to_coefficients(psi, geom)
    R = np.outer(c, c.conj())
    return R, np.eye(geom.d) - R


def pi_operator(psi: np.ndarray, basis: SectorBasis, geom: GridGeometry) -> np.ndarray:
    """The sector counting operator Pi = lift_mn(I - R)."""
    _, P = projector_pair(psi, geom)
    return lift_mn(P, basis)


def alpha_functional(Psi: np.ndarray, psi: np.ndarray, basis: SectorBasis,
                     geom: GridGeometry) -> float:
    """Excited fraction alpha = <Psi, Pi Psi> in [0, 1]."""
    Psi = np.asarray(Psi, dtype=complex)
    Pi = pi_operator(psi, basis, geom)
    val = float(np.vdot(Psi, Pi @ Psi).real / np.vdot(Psi, Psi).real)
    return min(max(val, 0.0), 1.0)


def pi_pseudo_inverse(psi: np.ndarray, basis: SectorBasis, geom: GridGeometry,
                      tol: float = PSEUDO_INVERSE_TOL):
    """Spectral pseudo-inverse of Pi, with a spectral-gap guard.

    Eigenvalues below ``tol`` are treated as the kernel; any eigenvalue
    landing inside (tol, 10 tol) is ambiguous and raises.  Returns
    (Pi, Pi_inv, kernel_projector); Pi @ Pi_inv equals the projector onto
    the orthogonal complement of psi^{tensor N}.
    """
    Pi = pi_operator(psi, basis, geom)
    w, Q = np.linalg.eigh(Pi)
    in_gap = (w > tol) & (w < 10 * tol)
    if in_gap.any():
        raise RuntimeError(
            f"eigenvalue {w[in_gap][0]:.3e} falls inside the pseudo-inverse "
            f"cutoff band ({tol:.1e}, {10 * tol:.1e})"
        )
    keep = w > tol
    w_inv = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
    Pi_inv = (Q * w_inv) @ Q.conj().T
    kernel = (Q[:, ~keep]) @ (Q[:, ~keep]).conj().T
    expected = product_state(psi, basis, geom)
    resid = np.abs(kernel - np.outer(expected, expected.conj())).max()
    if resid > 1e-8:
        raise RuntimeError(
            f"kernel of Pi deviates from the condensate line (residual {resid:.3e})"
        )
    return Pi, Pi_inv, kernel


def condensate_tensor_power(psi: np.ndarray, geom: GridGeometry, m: int) -> np.ndarray:
    """R^{tensor m} as a d^m x d^m matrix in kron (slot-1-major) order."""
    c = to_coefficients(psi, geom)
    R = np.outer(c, c.conj())
    out = np.eye(1)
    for _ in range(m):
        out = np.kron(out, R)
    return out


def seiringer_rhs(alpha: float, m: int) -> float:
    return 2.0 * np.sqrt(2.0 * m * max(alpha, 0.0))


def seiringer_bound_check(F_m: np.ndarray, psi: np.ndarray, geom: GridGeometry,
                          alpha: float, m: int, structural_tol: float = 1e-10):
    """Check ||F_m - R^{tensor m}||_1 <= 2 sqrt(2 m alpha).

    Also verifies the structural fact behind the bound: since R^{tensor m}
    is rank one, the difference has at most one negative eigenvalue.
    Returns (distance, rhs, margin, n_negative).
    """
    Rm = condensate_tensor_power(psi, geom, m)
    diff = F_m - Rm
    w = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    scale = max(1.0, float(np.abs(w).max()))
    n_negative = int((w < -structural_tol * scale).sum())
    if n_negative > 1:
        raise RuntimeError(
            f"F_m - R^m has {n_negative} negative eigenvalues; "
            "rank-one comparison structure violated"
        )
    distance = float(np.abs(w).sum())
    rhs = seiringer_rhs(alpha, m)
    return distance, rhs, rhs - distance, n_negative


def gronwall_rhs(alpha0: float, integral_ell: float, N: int, hbar: float) -> float:
    """alpha(t) <= alpha(0) e^{(6/hbar) int ell} + (2/N)(e^{(6/hbar) int ell} - 1)."""
    growth = np.exp(6.0 * integral_ell / hbar)
    return float(alpha0 * growth + (2.0 / N) * (growth - 1.0))


def corollary_rhs(m: int, N: int, integral_ell: float, hbar: float) -> float:
    """Marginal convergence rate: 4 sqrt(m/N) e^{(3/hbar) int ell}."""
    return float(4.0 * np.sqrt(m / N) * np.exp(3.0 * integral_ell / hbar))
