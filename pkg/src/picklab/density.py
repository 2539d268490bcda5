"""Reduced density matrices, trace norms, and density symmetrization."""

from __future__ import annotations

from itertools import permutations, product
from math import factorial

import numpy as np

from .geometry import check_hermitian
from .sector import SectorBasis, _basis_unchecked, annihilate

DEFAULT_REDUCED_CAP = 2


def reduced_density(Psi: np.ndarray, basis: SectorBasis, m: int,
                    cap: int = DEFAULT_REDUCED_CAP) -> np.ndarray:
    """m-particle reduced density matrix of a sector state (d^m x d^m).

    Built as the Gram matrix of m-fold annihilations,

        F[(i1..im), (j1..jm)] = <a_{jm}..a_{j1} Psi, a_{im}..a_{i1} Psi>
                                / (N (N-1) ... (N-m+1)),

    which is Hermitian, PSD, and unit-trace by construction.  Index tuples
    are flattened row-major with slot 1 most significant (kron order).
    """
    N, d = basis.N, basis.d
    if not 1 <= m <= min(N, cap):
        raise ValueError(f"marginal order m={m} out of range 1..min(N={N}, cap={cap})")
    if abs(np.linalg.norm(Psi) - 1.0) > 1e-8:
        raise ValueError("sector state is not normalized")
    vecs = [np.asarray(Psi, dtype=complex)]
    b = basis
    for level in range(m):
        b_next = _basis_unchecked(N - level - 1, d)
        vecs = [annihilate(v, b, b_next, mode) for v in vecs for mode in range(d)]
        b = b_next
    X = np.array(vecs)  # (d^m, dim of (N-m)-sector)
    norm = np.prod([N - k for k in range(m)])
    F = X @ X.conj().T / norm
    return 0.5 * (F + F.conj().T)


def trace_norm(M: np.ndarray) -> float:
    check_hermitian(M, tol=1e-10, what="trace-norm argument")
    return float(np.abs(np.linalg.eigvalsh(0.5 * (M + M.conj().T))).sum())


def trace_norm_distance(A: np.ndarray, B: np.ndarray) -> float:
    """||A - B||_1 for Hermitian A, B: sum of |eigenvalues| of A - B."""
    A, B = np.asarray(A), np.asarray(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    check_hermitian(A, tol=1e-10, what="first argument")
    check_hermitian(B, tol=1e-10, what="second argument")
    return trace_norm(A - B)


def partial_trace_last(F: np.ndarray, d: int, m: int) -> np.ndarray:
    """Trace out the last slot of an m-particle density matrix."""
    if m < 2:
        raise ValueError("need at least two slots to trace one out")
    T = F.reshape(d ** (m - 1), d, d ** (m - 1), d)
    return np.einsum("iaja->ij", T)


def permutation_unitary(sigma, d: int) -> np.ndarray:
    """U_sigma on (C^d)^{tensor N}: slot j of the output is slot sigma^{-1}(j)."""
    N = len(sigma)
    U = np.zeros((d**N, d**N))
    for modes in product(range(d), repeat=N):
        # modes[k] = mode in slot k+1 (slot 1 most significant)
        permuted = tuple(modes[sigma[k]] for k in range(N))
        src = 0
        dst = 0
        for k in range(N):
            src = src * d + modes[k]
            dst = dst * d + permuted[k]
        U[dst, src] = 1.0
    return U


def symmetrize_density(F: np.ndarray, N: int, d: int, cap: int = 4) -> np.ndarray:
    """(1/N!) sum_sigma U_sigma F U_sigma^dag on the full tensor space."""
    if N > cap:
        raise ValueError(f"symmetrization capped at N <= {cap}, got N={N}")
    if F.shape != (d**N, d**N):
        raise ValueError(f"density shape {F.shape} does not match d^N = {d**N}")
    check_hermitian(F, tol=1e-10, what="density")
    out = np.zeros_like(F, dtype=complex)
    for sigma in permutations(range(N)):
        U = permutation_unitary(sigma, d)
        out += U @ F @ U.T
    return out / factorial(N)
