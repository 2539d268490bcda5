"""Interaction operator, its four-term decomposition, and operator bounds.

The interaction operator attached to a reference state psi (projector R,
mean-field potential Vp = v * |psi|^2) is built two independent ways:

* ``fourier``: C_MM = (1/d) sum_w vhat_w [ M(E*_w) M(E_w R) - M(R E_w) M(E*_w) ]
* ``direct``:  C_MM = (1/N^2) sum_{k != l} [ v(x_k - x_l), J_k(R) ]

with M = lift_mn; both subtract the mean-field commutator M([Vp, R]) to
form the full operator C = C_MM - M([Vp, R]).  A dense first-quantized
evaluation (N <= 4) serves as a third, structurally independent oracle.

C decomposes as T1 + T2 + T3 + T4 with

    S1 = (1/d) sum_w vhat_w M(P E*_w P) M(P E_w R),    T1 = S1 - S1*
    S2 = M(P) M(P Vp R),                                T2 = S2* - S2
    S3 = (1/d) sum_w vhat_w M(P E*_w R) M(P E_w R),    T3 = S3 - S3*
    T4 = (1/N) M([Vp, R])

and each term obeys a bound in terms of ell and M(P) alone.  All margins
are conjugation-invariant, so terms are built in the fixed frame; only the
derivative identity needs the Heisenberg conjugation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .dynamics import NBodyPropagator, Trajectory
from .geometry import GridGeometry, check_hermitian
from .pickl import projector_pair
from .potentials import FourierModes, PairPotential, mean_field_potential
from .sector import SectorBasis, lift_mn, lift_two_body, sym_embedding

MARGIN_FLOOR = 1e-14
SKEW_TOL = 1e-10


def _check_skew(T: np.ndarray, what: str) -> None:
    scale = max(float(np.abs(T).max()), 1e-300)
    drift = float(np.abs(T + T.conj().T).max())
    if drift > SKEW_TOL * scale:
        raise ValueError(f"{what} is not skew-adjoint (relative drift {drift / scale:.3e})")


def mean_field_commutator(v: PairPotential, psi: np.ndarray, geom: GridGeometry,
                          basis: SectorBasis) -> np.ndarray:
    """M([Vp, R]) with Vp the mean-field potential of psi."""
    R, _ = projector_pair(psi, geom)
    Vp = np.diag(mean_field_potential(v, psi, geom))
    return lift_mn(Vp @ R - R @ Vp, basis)


def c_operator_fourier(modes: FourierModes, psi: np.ndarray, geom: GridGeometry,
                       basis: SectorBasis, v: PairPotential) -> np.ndarray:
    R, _ = projector_pair(psi, geom)
    d = geom.d
    C = np.zeros((basis.size, basis.size), dtype=complex)
    for k in range(d):
        E = modes.phases[k]  # diagonal of E_w
        MEs = lift_mn(np.diag(E.conj()), basis)
        MER = lift_mn(np.diag(E) @ R, basis)
        MRE = lift_mn(R @ np.diag(E), basis)
        C += modes.vhat[k] * (MEs @ MER - MRE @ MEs)
    C /= d
    C -= mean_field_commutator(v, psi, geom, basis)
    _check_skew(C, "fourier-built interaction operator")
    return C


def _pair_diag(v: PairPotential, d: int) -> np.ndarray:
    """Two-slot multiplication operator v(x_k - x_l) as a d^2 x d^2 diagonal."""
    i, p = np.divmod(np.arange(d * d), d)
    return np.diag(v.values[(i - p) % d])


def c_operator_direct(v: PairPotential, psi: np.ndarray, geom: GridGeometry,
                      basis: SectorBasis) -> np.ndarray:
    R, _ = projector_pair(psi, geom)
    W = _pair_diag(v, geom.d)
    JkR = np.kron(R, np.eye(geom.d))
    G = W @ JkR - JkR @ W
    C = lift_two_body(G, basis) / basis.N**2
    C -= mean_field_commutator(v, psi, geom, basis)
    _check_skew(C, "directly-built interaction operator")
    return C


def c_operator_first_quantized(v: PairPotential, psi: np.ndarray, geom: GridGeometry,
                               basis: SectorBasis, cap: int = 4) -> np.ndarray:
    """Dense full-tensor-space oracle for the interaction operator (N <= cap)."""
    N, d = basis.N, basis.d
    if N > cap:
        raise ValueError(f"first-quantized oracle capped at N <= {cap}, got N={N}")
    R, _ = projector_pair(psi, geom)
    dim = d**N
    C_full = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(d)
    for k in range(N):
        JkR = np.eye(1)
        for slot in range(N):
            JkR = np.kron(JkR, R if slot == k else eye)
        for l in range(N):
            if l == k:
                continue
            # diagonal of v(x_k - x_l) on the full product grid
            modes = np.unravel_index(np.arange(dim), (d,) * N)
            Vkl = v.values[(modes[k] - modes[l]) % d]
            C_full += Vkl[:, None] * JkR - JkR * Vkl[None, :]
    S = sym_embedding(basis, cap=cap)
    C = S.T @ C_full @ S / N**2
    C -= mean_field_commutator(v, psi, geom, basis)
    _check_skew(C, "first-quantized interaction operator")
    return C


@dataclass(frozen=True)
class TermDecomposition:
    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    T4: np.ndarray
    C_fourier: np.ndarray
    C_direct: np.ndarray
    t: float

    def terms(self):
        return {"t1": self.T1, "t2": self.T2, "t3": self.T3, "t4": self.T4}

    @property
    def total(self) -> np.ndarray:
        return self.T1 + self.T2 + self.T3 + self.T4

    def decomposition_residual(self) -> float:
        denom = max(float(np.linalg.norm(self.C_fourier, 2)), MARGIN_FLOOR)
        return float(np.linalg.norm(self.C_fourier - self.total, 2) / denom)


def build_terms(v: PairPotential, modes: FourierModes, psi: np.ndarray,
                geom: GridGeometry, basis: SectorBasis, t: float = 0.0) -> TermDecomposition:
    R, P = projector_pair(psi, geom)
    Vp = np.diag(mean_field_potential(v, psi, geom))
    d = geom.d

    S1 = np.zeros((basis.size, basis.size), dtype=complex)
    S3 = np.zeros_like(S1)
    for k in range(d):
        E = np.diag(modes.phases[k])
        MPER = lift_mn(P @ E @ R, basis)
        S1 += modes.vhat[k] * (lift_mn(P @ E.conj().T @ P, basis) @ MPER)
        S3 += modes.vhat[k] * (lift_mn(P @ E.conj().T @ R, basis) @ MPER)
    S1 /= d
    S3 /= d
    S2 = lift_mn(P, basis) @ lift_mn(P @ Vp @ R, basis)

    T1 = S1 - S1.conj().T
    T2 = S2.conj().T - S2
    T3 = S3 - S3.conj().T
    T4 = lift_mn(Vp @ R - R @ Vp, basis) / basis.N
    for name, T in (("T1", T1), ("T2", T2), ("T3", T3), ("T4", T4)):
        _check_skew(T, name)

    C_f = c_operator_fourier(modes, psi, geom, basis, v)
    C_d = c_operator_direct(v, psi, geom, basis)
    return TermDecomposition(T1=T1, T2=T2, T3=T3, T4=T4,
                             C_fourier=C_f, C_direct=C_d, t=t)


def matrix_inequality_margin(lhs: np.ndarray, rhs: np.ndarray) -> float:
    """Relative margin of the operator inequality lhs <= rhs.

    Returns lambda_min(rhs - lhs) / max(||rhs||_op, floor); nonnegative
    (above -1e-8 noise) iff the inequality holds.
    """
    if lhs.shape != rhs.shape:
        raise ValueError(f"shape mismatch {lhs.shape} vs {rhs.shape}")
    check_hermitian(lhs, tol=1e-10, what="inequality lhs")
    check_hermitian(rhs, tol=1e-10, what="inequality rhs")
    lam = float(np.linalg.eigvalsh(rhs - lhs)[0])
    denom = max(float(np.linalg.norm(rhs, 2)), MARGIN_FLOOR)
    return lam / denom


TERM_BOUND_COEFFS = {
    # T_j bound: 2*ell*(a*M(P) + b*I), except T4 which is (2/N)*ell*I
    "t1": (lambda N: (1.0 - 1.0 / N, 4.0 / N)),
    "t2": (lambda N: (1.0, 1.0 / N)),
    "t3": (lambda N: (1.0 - 1.0 / N, 1.0 / N)),
}


def verify_term_bounds(dec: TermDecomposition, ell: float, MP: np.ndarray,
                       N: int) -> dict:
    """The eight per-term margins: +/- i T_j <= its lemma bound."""
    eye = np.eye(len(MP))
    margins = {}
    for name, T in dec.terms().items():
        if name == "t4":
            rhs = (2.0 / N) * ell * eye
        else:
            a, b = TERM_BOUND_COEFFS[name](N)
            rhs = 2.0 * ell * (a * MP + b * eye)
        iT = 1j * T
        margins[name + "p"] = matrix_inequality_margin(iT, rhs)
        margins[name + "m"] = matrix_inequality_margin(-iT, rhs)
    return margins


def verify_aggregate(C: np.ndarray, bound_value: float, MP: np.ndarray, N: int):
    """Margins of +/- iC <= 6 * bound_value * (M(P) + (2/N) I).

    ``bound_value`` is ell(t) in tight mode or L(t) in loose mode.
    """
    rhs = 6.0 * bound_value * (MP + (2.0 / N) * np.eye(len(MP)))
    iC = 1j * C
    return (matrix_inequality_margin(iC, rhs),
            matrix_inequality_margin(-iC, rhs))


def derivative_identity_check(prop: NBodyPropagator, traj: Trajectory,
                              v: PairPotential, modes: FourierModes,
                              geom: GridGeometry, basis: SectorBasis,
                              t: float, dt_fd: float) -> float:
    """Residual of i hbar d/dt [ M_N(t)(P(t)) ] = U* C(t) U (central difference).

    dt_fd must align with the trajectory sample grid.  Returns
    ||i hbar (A(t+dt) - A(t-dt))/(2 dt) - C|| / ||C|| (operator norms); when
    C vanishes the residual is reported in absolute terms.
    """
    steps = dt_fd / traj.dt
    if abs(steps - round(steps)) > 1e-9:
        raise ValueError(f"dt_fd={dt_fd} is not a multiple of the Hartree step {traj.dt}")

    def frame_MP(s: float) -> np.ndarray:
        _, P = projector_pair(traj.state_at(s), geom)
        return prop.heisenberg(lift_mn(P, basis), s)

    A_plus = frame_MP(t + dt_fd)
    A_minus = frame_MP(t - dt_fd)
    lhs = 1j * geom.hbar * (A_plus - A_minus) / (2.0 * dt_fd)

    C_in = c_operator_fourier(modes, traj.state_at(t), geom, basis, v)
    U = prop.unitary(t)
    C = U.conj().T @ C_in @ U
    c_norm = float(np.linalg.norm(C, 2))
    denom = c_norm if c_norm >= 1e-10 else 1.0
    return float(np.linalg.norm(lhs - C, 2) / denom)


def integral_ell(times: np.ndarray, ells: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid integral of ell over the sample grid."""
    return cumulative_trapezoid(ells, times, initial=0.0)


def gronwall_check(times: np.ndarray, alphas: np.ndarray, ells: np.ndarray,
                   N: int, hbar: float, slack: float = 1e-6):
    """Per-sample Gronwall bound with product initial data.

    Returns (bounds, margins, all_pass) where the bound at time t is
    alpha(0) e^{(6/hbar) int ell} + (2/N)(e^{(6/hbar) int ell} - 1).
    """
    ints = integral_ell(times, ells)
    growth = np.exp(6.0 * ints / hbar)
    bounds = alphas[0] * growth + (2.0 / N) * (growth - 1.0)
    margins = bounds + slack - alphas
    return bounds, margins, bool((margins >= 0).all())
