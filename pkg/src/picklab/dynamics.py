"""Exact N-body sector dynamics and the Hartree mean-field flow.

The sector Hamiltonian is

    H_N = sum_k K_k + (1/N) sum_{j<k} v(x_j - x_k)
        = lift_one_body(K) + lift_pair_sum(v)

(mean-field scaling of the pair term) and is propagated exactly by full
diagonalization.  The matching mean-field equation is the Hartree flow

    i hbar dpsi/dt = K psi + (v * |psi|^2) psi ,

integrated with fixed-step RK4 (default) or Strang splitting.  Both sides
share the same kinetic matrix, so the finite-dimensional commutator
identities hold exactly and only time discretization error remains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .geometry import GridGeometry, grid_inner, grid_norm, kinetic_matrix
from .potentials import PairPotential, mean_field_potential
from .sector import SectorBasis, lift_one_body, lift_pair_sum

NORM_BLOWUP = 10.0


class IntegratorInstability(RuntimeError):
    pass


def build_hamiltonian(v: PairPotential, basis: SectorBasis, geom: GridGeometry) -> np.ndarray:
    """Mean-field-scaled N-body Hamiltonian on the symmetric sector."""
    K = kinetic_matrix(geom)
    return lift_one_body(K, basis) + lift_pair_sum(v.values, basis)


@dataclass
class NBodyPropagator:
    """Spectral propagator U(t) = Q exp(-i w t / hbar) Q^dag for a sector H."""

    H: np.ndarray
    hbar: float
    eigenvalues: np.ndarray = field(init=False)
    eigenvectors: np.ndarray = field(init=False)

    def __post_init__(self):
        H = np.asarray(self.H)
        scale = max(1.0, float(np.abs(H).max()))
        if np.abs(H - H.conj().T).max() > 1e-10 * scale:
            raise ValueError("Hamiltonian is not Hermitian")
        w, Q = np.linalg.eigh(0.5 * (H + H.conj().T))
        recon = (Q * w) @ Q.conj().T
        err = np.abs(recon - H).max() / scale
        if err > 1e-10:
            raise RuntimeError(f"eigendecomposition reconstruction error {err:.3e}")
        self.eigenvalues, self.eigenvectors = w, Q

    def unitary(self, t: float) -> np.ndarray:
        Q = self.eigenvectors
        U = (Q * np.exp(-1j * self.eigenvalues * t / self.hbar)) @ Q.conj().T
        err = np.abs(U @ U.conj().T - np.eye(len(U))).max()
        if err > 1e-9:
            raise RuntimeError(f"propagator lost unitarity ({err:.3e})")
        return U

    def propagate(self, Psi: np.ndarray, t: float) -> np.ndarray:
        return self.unitary(t) @ np.asarray(Psi, dtype=complex)

    def heisenberg(self, M: np.ndarray, t: float) -> np.ndarray:
        """Conjugate a sector operator into the frame at time t: U^dag M U."""
        U = self.unitary(t)
        return U.conj().T @ M @ U


# ---------------------------------------------------------------------------
# Hartree flow

@dataclass
class HartreeState:
    t: float
    psi: np.ndarray


@dataclass
class Trajectory:
    """Hartree solution sampled on a uniform time grid."""

    times: np.ndarray
    states: list  # psi at each time, grid-normalized at t=0
    norm_drift: np.ndarray
    energy_drift: np.ndarray
    method: str
    dt: float

    def state_at(self, t: float) -> np.ndarray:
        k = int(round((t - self.times[0]) / (self.times[1] - self.times[0])))
        if not 0 <= k < len(self.times) or abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the trajectory grid")
        return self.states[k]


def hartree_rhs(psi: np.ndarray, v: PairPotential, geom: GridGeometry,
                K: np.ndarray) -> np.ndarray:
    """dpsi/dt = -(i/hbar) (K psi + (v * |psi|^2) psi)."""
    mf = mean_field_potential(v, psi, geom)
    return (-1j / geom.hbar) * (K @ psi + mf * psi)


def hartree_energy(psi: np.ndarray, v: PairPotential, geom: GridGeometry,
                   K: np.ndarray) -> float:
    mf = mean_field_potential(v, psi, geom)
    kin = grid_inner(psi, K @ psi, geom)
    pot = 0.5 * grid_inner(psi, mf * psi, geom)
    return float((kin + pot).real)


def _rk4_step(psi, dt, v, geom, K):
    k1 = hartree_rhs(psi, v, geom, K)
    k2 = hartree_rhs(psi + 0.5 * dt * k1, v, geom, K)
    k3 = hartree_rhs(psi + 0.5 * dt * k2, v, geom, K)
    k4 = hartree_rhs(psi + dt * k3, v, geom, K)
    return psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def hartree_integrate(psi0: np.ndarray, v: PairPotential, geom: GridGeometry,
                      t_final: float, dt: float, method: str = "rk4") -> Trajectory:
    """Integrate the Hartree equation on [0, t_final] with fixed step dt."""
    if method not in ("rk4", "strang"):
        raise ValueError(f"unknown integrator {method!r}")
    if dt <= 0 or t_final < 0:
        raise ValueError(f"bad time parameters t_final={t_final}, dt={dt}")
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(dt, t_final):
        raise ValueError(f"t_final={t_final} is not an integer multiple of dt={dt}")

    K = kinetic_matrix(geom)
    psi = np.asarray(psi0, dtype=complex).copy()
    n0 = grid_norm(psi, geom)
    if abs(n0 - 1.0) > 1e-8:
        raise ValueError(f"initial state not grid-normalized (norm {n0:.6f})")
    e0 = hartree_energy(psi, v, geom, K)
    e_scale = max(1.0, abs(e0))

    if method == "strang":
        half_kick = expm(-1j * K * (dt / 2.0) / geom.hbar)

    times = [0.0]
    states = [psi.copy()]
    norm_drift = [0.0]
    energy_drift = [0.0]
    for step in range(n_steps):
        if method == "rk4":
            psi = _rk4_step(psi, dt, v, geom, K)
        else:
            psi = half_kick @ psi
            mf = mean_field_potential(v, psi, geom)
            psi = np.exp(-1j * mf * dt / geom.hbar) * psi
            psi = half_kick @ psi
        t = (step + 1) * dt
        n = grid_norm(psi, geom)
        if not np.isfinite(n) or n > NORM_BLOWUP:
            raise IntegratorInstability(
                f"{method} blew up at t={t:.6g} (norm {n:.3g}); reduce dt"
            )
        times.append(t)
        states.append(psi.copy())
        norm_drift.append(abs(n - n0))
        energy_drift.append(abs(hartree_energy(psi, v, geom, K) - e0) / e_scale)
    return Trajectory(times=np.array(times), states=states,
                      norm_drift=np.array(norm_drift),
                      energy_drift=np.array(energy_drift),
                      method=method, dt=dt)
