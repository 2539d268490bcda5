"""Bosonic symmetric sector: basis enumeration and operator lifts.

The N-particle bosonic sector of (C^d)^{tensor N} is spanned by occupation
vectors (n_1, ..., n_d) with sum N; its dimension is D = C(N+d-1, N).
One-body operators lift through the second-quantized form

    lift_one_body(A) = sum_{ij} A_ij a^dag_i a_j ,

which restricted to the sector equals sum_k J_k(A); the averaged morphism
is lift_mn(A) = lift_one_body(A)/N.  Two-body sums lift through

    lift_two_body(G) = sum_{ipjq} G[(i,p),(j,q)] a^dag_i a^dag_p a_q a_j
                     = sum_{k != l} G acting on slots (k, l).

A first-quantized embedding (dense, d^N-dimensional) is retained for small
N as an independent oracle and for operators that do not preserve the
sector on their own (products of J_k at fixed slots are compressed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .geometry import GridGeometry, hermitize, to_coefficients

DEFAULT_SECTOR_CAP = 20000
DEFAULT_FIRST_QUANTIZATION_CAP = 4


class SectorTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class SectorBasis:
    """Ordered occupation-number basis of the N-boson sector in d modes."""

    N: int
    d: int
    states: tuple  # occupation tuples, lexicographically decreasing
    index: dict = field(repr=False)  # occupation tuple -> position

    @property
    def size(self) -> int:
        return len(self.states)


def enumerate_basis(N: int, d: int, cap: int = DEFAULT_SECTOR_CAP) -> SectorBasis:
    """Enumerate occupation vectors of N bosons in d modes, lex-decreasing."""
    if N < 1:
        raise ValueError(f"particle number must be >= 1, got N={N}")
    if d < 2:
        raise ValueError(f"mode count must be >= 2, got d={d}")
    D = comb(N + d - 1, N)
    if D > cap:
        raise SectorTooLargeError(
            f"sector too large: D = C({N + d - 1},{N}) = {D} exceeds cap {cap}"
        )
    states = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            states.append(prefix + (remaining,))
            return
        for n in range(remaining, -1, -1):
            rec(prefix + (n,), remaining - n, slots - 1)

    rec((), N, d)
    assert len(states) == D
    return SectorBasis(N=N, d=d, states=tuple(states), index={s: i for i, s in enumerate(states)})


def lift_one_body(A: np.ndarray, basis: SectorBasis) -> np.ndarray:
    """sum_{ij} A_ij a^dag_i a_j on the sector (equals sum_k J_k A)."""
    A = np.asarray(A)
    d = basis.d
    if A.shape != (d, d):
        raise ValueError(f"operator shape {A.shape} does not match d={d}")
    D = basis.size
    M = np.zeros((D, D), dtype=complex)
    for col, occ in enumerate(basis.states):
        for j in range(d):
            nj = occ[j]
            if nj == 0:
                continue
            for i in range(d):
                a = A[i, j]
                if a == 0:
                    continue
                if i == j:
                    M[col, col] += a * nj
                else:
                    target = list(occ)
                    target[j] -= 1
                    target[i] += 1
                    row = basis.index[tuple(target)]
                    M[row, col] += a * np.sqrt(nj * (occ[i] + 1))
    return M


def lift_mn(A: np.ndarray, basis: SectorBasis) -> np.ndarray:
    """The averaged morphism (1/N) sum_k J_k(A) on the sector."""
    A = np.asarray(A)
    M = lift_one_body(A, basis) / basis.N
    scale = float(np.abs(A).max())
    if scale == 0.0 or float(np.abs(A - A.conj().T).max()) <= 1e-12 * scale:
        M = hermitize(M, what="lifted one-body operator")
    return M


def lift_two_body(G: np.ndarray, basis: SectorBasis) -> np.ndarray:
    """sum_{k != l} of a two-body operator G, restricted to the sector.

    ``G`` is a d^2 x d^2 matrix with row index (i,p) and column index
    (j,q), both flattened row-major (slot k first), so that for
    G = kron(A, B) the result equals sum_{k != l} J_k(A) J_l(B).
    """
    d = basis.d
    G = np.asarray(G).reshape(d, d, d, d)  # G[i, p, j, q]
    D = basis.size
    M = np.zeros((D, D), dtype=complex)
    for col, occ in enumerate(basis.states):
        for j in range(d):
            if occ[j] == 0:
                continue
            for q in range(d):
                nq = occ[j] - 1 if q == j else occ[q]
                if nq == 0:
                    continue
                amp1 = np.sqrt(occ[j] * nq)
                occ2 = list(occ)
                occ2[j] -= 1
                occ2[q] -= 1
                for p in range(d):
                    for i in range(d):
                        g = G[i, p, j, q]
                        if g == 0:
                            continue
                        amp2 = np.sqrt((occ2[p] + 1) * (occ2[i] + 1 + (1 if i == p else 0)))
                        target = list(occ2)
                        target[p] += 1
                        target[i] += 1
                        row = basis.index[tuple(target)]
                        M[row, col] += g * amp1 * amp2
    return M


def lift_pair_sum(v_table: np.ndarray, basis: SectorBasis) -> np.ndarray:
    """(1/N) sum_{j<k} v(x_j - x_k) on the sector (diagonal matrix).

    ``v_table[r]`` holds v at grid difference r*h (periodic).  The table
    must be even: v_table[r] == v_table[(d-r) % d].
    """
    v_table = np.asarray(v_table, dtype=float)
    d, N = basis.d, basis.N
    if v_table.shape != (d,):
        raise ValueError(f"pair table length {v_table.shape} does not match d={d}")
    if not np.allclose(v_table, v_table[(-np.arange(d)) % d], atol=1e-12 * max(1.0, np.abs(v_table).max())):
        raise ValueError("pair potential table is not even")
    diag = np.zeros(basis.size)
    for col, occ in enumerate(basis.states):
        acc = 0.0
        for i in range(d):
            if occ[i] == 0:
                continue
            for j in range(d):
                nj = occ[j] - (1 if i == j else 0)
                if nj:
                    acc += v_table[(i - j) % d] * occ[i] * nj
        diag[col] = acc / (2.0 * N)
    return np.diag(diag).astype(complex)


# ---------------------------------------------------------------------------
# first quantization (oracle path, small N only)

def sym_embedding(basis: SectorBasis, cap: int = DEFAULT_FIRST_QUANTIZATION_CAP) -> np.ndarray:
    """Isometry S : sector -> full d^N tensor space (columns orthonormal).

    Slot 1 is the most significant tensor factor, matching np.kron order.
    """
    N, d = basis.N, basis.d
    if N > cap:
        raise ValueError(f"first-quantized embedding capped at N <= {cap}, got N={N}")
    S = np.zeros((d**N, basis.size))
    for flat in range(d**N):
        modes = []
        rem = flat
        for _ in range(N):
            modes.append(rem % d)
            rem //= d
        occ = [0] * d
        for m in modes:
            occ[m] += 1
        col = basis.index[tuple(occ)]
        weight = np.sqrt(np.prod([factorial(n) for n in occ]) / factorial(N))
        S[flat, col] = weight
    return S


def embed_slots(ops, N: int, d: int) -> np.ndarray:
    """Full-space product prod_k J_{slot_k}(A_k) for distinct 1-based slots."""
    slots = [s for s, _ in ops]
    if len(set(slots)) != len(slots):
        raise ValueError(f"repeated slot index in {slots}")
    if any(s < 1 or s > N for s in slots):
        raise ValueError(f"slot out of range 1..{N}: {slots}")
    factors = {s: np.asarray(A) for s, A in ops}
    M = np.eye(1)
    for slot in range(1, N + 1):
        M = np.kron(M, factors.get(slot, np.eye(d)))
    return M


def lift_jk_product(ops, basis: SectorBasis,
                    cap: int = DEFAULT_FIRST_QUANTIZATION_CAP) -> np.ndarray:
    """Compression of prod_k J_{slot_k}(A_k) to the symmetric sector."""
    S = sym_embedding(basis, cap=cap)
    M = embed_slots(ops, basis.N, basis.d)
    return S.T @ M @ S


# ---------------------------------------------------------------------------
# states

def product_state(psi: np.ndarray, basis: SectorBasis, geom: GridGeometry) -> np.ndarray:
    """Sector coefficients of psi^{tensor N} for a normalized grid vector."""
    c = to_coefficients(psi, geom)
    N = basis.N
    out = np.empty(basis.size, dtype=complex)
    for k, occ in enumerate(basis.states):
        amp = np.sqrt(factorial(N) / np.prod([factorial(n) for n in occ]))
        for i, n in enumerate(occ):
            if n:
                amp = amp * c[i] ** n
        out[k] = amp
    return out


def _basis_unchecked(N: int, d: int) -> SectorBasis:
    """Like enumerate_basis but permits N = 0 (vacuum); internal use."""
    if N == 0:
        empty = (tuple([0] * d),)
        return SectorBasis(N=0, d=d, states=empty, index={empty[0]: 0})
    return enumerate_basis(N, d)


def annihilate(Psi: np.ndarray, basis: SectorBasis, basis_m1: SectorBasis, mode: int) -> np.ndarray:
    """Apply a_mode, mapping the N-sector to the (N-1)-sector."""
    out = np.zeros(basis_m1.size, dtype=complex)
    for col, occ in enumerate(basis.states):
        n = occ[mode]
        if n == 0:
            continue
        target = list(occ)
        target[mode] -= 1
        out[basis_m1.index[tuple(target)]] += np.sqrt(n) * Psi[col]
    return out
