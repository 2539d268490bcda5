"""Pair potentials on the periodic grid and the functionals built from them.

A pair potential is a real even table v over grid differences; analytic
families (gaussian, soft_coulomb, box) are evaluated at the periodic
minimal-image distance.  Convolutions carry the grid weight h, so that

    (v * rho)(x) = h * sum_y v(x - y) rho(y)

and in discrete Fourier variables  v(x) = (1/d) sum_w vhat_w e^{iwx}
with vhat = fft(v), which is the exact lattice analogue of the continuum
(2*pi)^{-3} integral against Vhat.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .geometry import GridGeometry, grid_norm, h2_norm

KINDS = ("gaussian", "soft_coulomb", "box", "custom_table")


@dataclass(frozen=True)
class PairPotential:
    kind: str
    params: dict
    values: np.ndarray  # v at grid differences r*h, r = 0..d-1 (periodic)
    even_flag: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("pair potential has non-finite values")
        d = len(v)
        scale = max(1.0, float(np.abs(v).max()))
        if not np.allclose(v, v[(-np.arange(d)) % d], atol=1e-12 * scale):
            raise ValueError("pair potential is not even on the periodic lattice")


@dataclass(frozen=True)
class FourierModes:
    omegas: np.ndarray  # dual frequencies, FFT order
    vhat: np.ndarray    # real coefficients, v(x) = (1/d) sum vhat_w e^{iwx}
    phases: np.ndarray  # phases[k, x] = e^{i w_k x} (rows are E_w diagonals)

    def e_matrix(self, k: int) -> np.ndarray:
        """Diagonal multiplication operator E_w for the k-th frequency."""
        return np.diag(self.phases[k])


def _minimal_image(geom: GridGeometry) -> np.ndarray:
    r = np.arange(geom.d) * geom.h
    return np.minimum(r, geom.L - r)


def build_potential(kind: str, params: dict, geom: GridGeometry) -> PairPotential:
    """Evaluate an analytic family (or wrap a table) on grid differences."""
    dist = _minimal_image(geom)
    if kind == "gaussian":
        g = float(params.get("g", 1.0))
        sigma = float(params.get("sigma", geom.L / 8))
        if sigma <= 0:
            raise ValueError(f"gaussian width must be positive, got {sigma}")
        values = g * np.exp(-(dist**2) / (2 * sigma**2))
    elif kind == "soft_coulomb":
        g = float(params.get("g", 1.0))
        eps = float(params.get("eps", geom.L / 8))
        if eps <= 0:
            raise ValueError(f"soft-coulomb softening must be positive, got {eps}")
        values = g / np.sqrt(dist**2 + eps**2)
    elif kind == "box":
        g = float(params.get("g", 1.0))
        width = float(params.get("width", geom.L / 4))
        if width <= 0:
            raise ValueError(f"box width must be positive, got {width}")
        values = np.where(dist <= width, g, 0.0)
    elif kind == "custom_table":
        values = np.asarray(params["values"], dtype=float)
        if values.shape != (geom.d,):
            raise ValueError(f"custom table length {values.shape} does not match d={geom.d}")
    else:
        raise ValueError(f"unknown potential kind {kind!r}")
    return PairPotential(kind=kind, params=dict(params), values=values)


def load_table_csv(path, geom: GridGeometry) -> PairPotential:
    """Load a custom_table potential from CSV columns (x_index, value)."""
    values = np.full(geom.d, np.nan)
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("x_index", ""):
                continue
            idx, val = int(row[0]), float(row[1])
            if not 0 <= idx < geom.d:
                raise ValueError(f"x_index {idx} out of range 0..{geom.d - 1}")
            values[idx] = val
    if np.isnan(values).any():
        missing = np.nonzero(np.isnan(values))[0]
        raise ValueError(f"custom table missing indices {missing.tolist()}")
    return build_potential("custom_table", {"values": values, "source": str(path)}, geom)


def fourier_modes(v: PairPotential, geom: GridGeometry) -> FourierModes:
    vhat_c = np.fft.fft(v.values)
    scale = max(1.0, float(np.abs(vhat_c).max()))
    if np.abs(vhat_c.imag).max() > 1e-10 * scale:
        raise ValueError("Fourier coefficients of an even real table must be real")
    vhat = vhat_c.real
    omegas = geom.omegas
    phases = np.exp(1j * np.outer(omegas, geom.x))
    recon = (phases.T @ vhat).real / geom.d
    assert np.abs(recon - v.values).max() <= 1e-12 * scale
    return FourierModes(omegas=omegas, vhat=vhat, phases=phases)


def l2_linf_decomposition(v: PairPotential, geom: GridGeometry):
    """Discrete ||v||_{L2+Linf} via the optimal clamping split.

    Scans cutoffs c over the sorted |v| values (and 0); for each,
    v2 = clamp(v, -c, c), v1 = v - v2, cost = sqrt(h)*||v1||_2 + ||v2||_inf.
    Returns (norm, v1, v2, cutoff) at the minimizer.
    """
    vals = v.values
    h = geom.h
    candidates = np.unique(np.concatenate([[0.0], np.abs(vals)]))
    best = None
    for c in candidates:
        v2 = np.clip(vals, -c, c)
        v1 = vals - v2
        cost = np.sqrt(h) * np.linalg.norm(v1) + (np.abs(v2).max() if len(v2) else 0.0)
        if best is None or cost < best[0] - 1e-15:
            best = (float(cost), v1, v2, float(c))
    return best


def mean_field_potential(v: PairPotential, psi: np.ndarray, geom: GridGeometry) -> np.ndarray:
    """Diagonal values of the self-consistent potential v * |psi|^2."""
    psi = np.asarray(psi)
    if psi.shape != (geom.d,):
        raise ValueError(f"state length {psi.shape} does not match d={geom.d}")
    rho = np.abs(psi) ** 2
    conv = geom.h * np.fft.ifft(np.fft.fft(v.values) * np.fft.fft(rho))
    return conv.real


def ell_functional(v: PairPotential, psi: np.ndarray, geom: GridGeometry) -> float:
    """ell = max_x sqrt( (v^2 * |psi|^2)(x) ), the mean-field squared norm."""
    rho = np.abs(np.asarray(psi)) ** 2
    conv = geom.h * np.fft.ifft(np.fft.fft(v.values**2) * np.fft.fft(rho)).real
    return float(np.sqrt(max(conv.max(), 0.0)))


def L_functional(v: PairPotential, psi: np.ndarray, geom: GridGeometry,
                 cs_constant: float = 1.0) -> float:
    """L = 2 max(1, C_S) ||v||_{L2+Linf} ||psi||_{H2} (grid surrogate)."""
    norm, _, _, _ = l2_linf_decomposition(v, geom)
    return 2.0 * max(1.0, cs_constant) * norm * h2_norm(psi, geom)
