"""Experiment orchestration: verify, sweep, and rate-fit runs.

Each run writes deterministic CSV artifacts plus a self-describing summary
JSON (schema "picklab-v1").  Sample-level work is independent and mapped
over a thread pool; results are merged in fixed (time, N) order so output
is identical for any thread count.
"""

from __future__ import annotations

import csv
import json
import time as time_mod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .density import reduced_density
from .dynamics import NBodyPropagator, Trajectory, build_hamiltonian, hartree_integrate
from .geometry import GridGeometry, normalize
from .inequalities import (MARGIN_FLOOR, build_terms, derivative_identity_check,
                           gronwall_check, integral_ell, verify_aggregate,
                           verify_term_bounds)
from .pickl import (alpha_functional, corollary_rhs, pi_pseudo_inverse,
                    projector_pair, seiringer_bound_check)
from .potentials import (L_functional, build_potential, ell_functional,
                         fourier_modes, load_table_csv)
from .sector import enumerate_basis, lift_mn, product_state

SCHEMA_VERSION = "picklab-v1"
INEQUALITY_HEADER = ("t,ell,agg_plus,agg_minus,t1p,t1m,t2p,t2m,t3p,t3m,t4p,t4m,"
                     "gronwall_margin,deriv_residual")
TRAJECTORY_HEADER = "t,norm_drift,energy_drift"
SWEEP_HEADER = ("N,t,alpha,gronwall_rhs,dist_m1,dist_m2,"
                "corollary_rhs_m1,corollary_rhs_m2,ell")
SEIRINGER_SLACK = 1e-10
CONSERVATION_NORM_TOL = 1e-10
CONSERVATION_ENERGY_TOL = 1e-8
CROSS_TOL = 1e-12
DECOMP_TOL = 1e-9


def build_geometry(cfg: ExperimentConfig) -> GridGeometry:
    return GridGeometry(d=cfg.geometry_d, L=cfg.geometry_L,
                        hbar=cfg.geometry_hbar, kinetic=cfg.geometry_kinetic)


def build_pair_potential(cfg: ExperimentConfig, geom: GridGeometry):
    kind = cfg.potential_kind
    if kind == "custom_table":
        if not cfg.potential_table:
            raise ValueError("custom_table potential requires potential.table = <csv path>")
        return load_table_csv(cfg.potential_table, geom)
    params = {"g": cfg.potential_g}
    if kind == "gaussian" and cfg.potential_sigma > 0:
        params["sigma"] = cfg.potential_sigma
    if kind == "soft_coulomb" and cfg.potential_eps > 0:
        params["eps"] = cfg.potential_eps
    if kind == "box" and cfg.potential_width > 0:
        params["width"] = cfg.potential_width
    return build_potential(kind, params, geom)


def initial_state(cfg: ExperimentConfig, geom: GridGeometry) -> np.ndarray:
    if cfg.initial_kind == "mode":
        psi = np.exp(1j * geom.omegas[cfg.initial_mode_index % geom.d] * geom.x)
    elif cfg.initial_kind == "gaussian":
        width = cfg.initial_width if cfg.initial_width > 0 else geom.L / 6
        delta = np.abs(geom.x - cfg.initial_center)
        delta = np.minimum(delta, geom.L - delta)
        psi = np.exp(-(delta**2) / (2 * width**2)).astype(complex)
    else:
        raise ValueError(f"unknown initial state kind {cfg.initial_kind!r}")
    return normalize(psi, geom)


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


@dataclass
class CheckResult:
    passed: bool
    worst: float

    def as_dict(self):
        return {"passed": bool(self.passed), "worst": float(self.worst)}


def _verify_sample(args):
    (t, cfg, geom, v, modes, basis, prop, traj, Psi0, tight_ell) = args
    psi_t = traj.state_at(t)
    Psi_t = prop.propagate(Psi0, t)
    _, P = projector_pair(psi_t, geom)
    MP = lift_mn(P, basis)
    ell = ell_functional(v, psi_t, geom)
    Lval = L_functional(v, psi_t, geom, cfg.cs_constant)
    bound_val = ell if tight_ell else Lval

    dec = build_terms(v, modes, psi_t, geom, basis, t=t)
    cross = (np.abs(dec.C_fourier - dec.C_direct).max()
             / max(np.abs(dec.C_fourier).max(), MARGIN_FLOOR))
    decomp = dec.decomposition_residual()
    term_margins = verify_term_bounds(dec, ell, MP, basis.N)
    agg_plus, agg_minus = verify_aggregate(dec.C_fourier, bound_val, MP, basis.N)

    alpha = alpha_functional(Psi_t, psi_t, basis, geom)
    seir = {}
    dists = {}
    for m in range(1, cfg.caps_reduced_cap + 1):
        F_m = reduced_density(Psi_t, basis, m, cap=cfg.caps_reduced_cap)
        dist, rhs, _, n_neg = seiringer_bound_check(F_m, psi_t, geom, alpha, m)
        seir[m] = (dist <= rhs + SEIRINGER_SLACK) and (n_neg <= 1)
        dists[m] = dist

    fd = cfg.tolerances_fd_dt
    t_fd = min(max(t, fd), cfg.time_tmax - fd)
    deriv = derivative_identity_check(prop, traj, v, modes, geom, basis, t_fd, fd)

    return {
        "t": t, "alpha": alpha, "ell": ell, "L": Lval, "bound_val": bound_val,
        "cross": cross, "decomp": decomp, "terms": term_margins,
        "agg_plus": agg_plus, "agg_minus": agg_minus,
        "seiringer_pass": all(seir.values()), "dists": dists, "deriv": deriv,
    }


def run_verify(cfg: ExperimentConfig, out_dir, threads: int = 1,
               tight_ell: bool = False) -> dict:
    start = time_mod.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    geom = build_geometry(cfg)
    v = build_pair_potential(cfg, geom)
    modes = fourier_modes(v, geom)
    basis = enumerate_basis(cfg.system_N, geom.d, cap=cfg.caps_sector_cap)
    psi0 = initial_state(cfg, geom)
    Psi0 = product_state(psi0, basis, geom)
    H = build_hamiltonian(v, basis, geom)
    prop = NBodyPropagator(H=H, hbar=geom.hbar)
    traj = hartree_integrate(psi0, v, geom, cfg.time_tmax, cfg.time_dt,
                             method=cfg.time_method)

    # structural Pi_N lemma check at t=0 (cheap; part of every verify run)
    pi_pseudo_inverse(psi0, basis, geom)

    times = cfg.sample_times
    jobs = [(t, cfg, geom, v, modes, basis, prop, traj, Psi0, tight_ell)
            for t in times]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(_verify_sample, jobs))
    else:
        samples = [_verify_sample(j) for j in jobs]

    alphas = np.array([s["alpha"] for s in samples])
    ells = np.array([s["ell"] for s in samples])
    bound_vals = np.array([s["bound_val"] for s in samples])
    _, gr_margins, gr_ok = gronwall_check(times, alphas, ells if tight_ell else bound_vals,
                                          basis.N, geom.hbar,
                                          slack=cfg.tolerances_gronwall_slack)

    ints = integral_ell(times, ells if tight_ell else bound_vals)
    cor_ok = True
    for i, s in enumerate(samples):
        for m, dist in s["dists"].items():
            rhs = corollary_rhs(m, basis.N, ints[i], geom.hbar)
            cor_ok = cor_ok and (dist <= rhs + cfg.tolerances_gronwall_slack)

    rows = []
    for i, s in enumerate(samples):
        tm = s["terms"]
        rows.append([s["t"], s["bound_val"], s["agg_plus"], s["agg_minus"],
                     tm["t1p"], tm["t1m"], tm["t2p"], tm["t2m"],
                     tm["t3p"], tm["t3m"], tm["t4p"], tm["t4m"],
                     gr_margins[i], s["deriv"]])
    _write_csv(out / "inequality.csv", INEQUALITY_HEADER, rows)

    stride = cfg.time_sample_stride
    traj_rows = [[traj.times[k], traj.norm_drift[k], traj.energy_drift[k]]
                 for k in range(0, len(traj.times), stride)]
    _write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, traj_rows)

    mtol = cfg.tolerances_margin_tol
    all_term = min(min(s["terms"].values()) for s in samples)
    all_agg = min(min(s["agg_plus"], s["agg_minus"]) for s in samples)
    nbody_drift = max(abs(np.linalg.norm(prop.propagate(Psi0, t)) - 1.0) for t in times)
    checks = {
        "cross_construction": CheckResult(max(s["cross"] for s in samples) <= CROSS_TOL,
                                          max(s["cross"] for s in samples)),
        "decomposition": CheckResult(max(s["decomp"] for s in samples) <= DECOMP_TOL,
                                     max(s["decomp"] for s in samples)),
        "derivative_identity": CheckResult(
            max(s["deriv"] for s in samples) <= cfg.tolerances_deriv_tol,
            max(s["deriv"] for s in samples)),
        "term_bounds": CheckResult(all_term >= mtol, all_term),
        "aggregate": CheckResult(all_agg >= mtol, all_agg),
        "gronwall": CheckResult(gr_ok, float(gr_margins.min())),
        "seiringer": CheckResult(all(s["seiringer_pass"] for s in samples),
                                 float(min(1.0 if s["seiringer_pass"] else 0.0
                                           for s in samples))),
        "corollary": CheckResult(bool(cor_ok), 1.0 if cor_ok else 0.0),
        "conservation": CheckResult(
            traj.norm_drift.max() <= CONSERVATION_NORM_TOL
            and traj.energy_drift.max() <= CONSERVATION_ENERGY_TOL
            and nbody_drift <= CONSERVATION_NORM_TOL,
            float(max(traj.norm_drift.max(), nbody_drift))),
    }
    summary = _summary(cfg, checks, tight_ell, start)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def _sweep_member(args):
    (N, cfg, geom, v, traj, times, tight_ell) = args
    basis = enumerate_basis(N, geom.d, cap=cfg.caps_sector_cap)
    psi0 = traj.states[0]
    Psi0 = product_state(psi0, basis, geom)
    prop = NBodyPropagator(H=build_hamiltonian(v, basis, geom), hbar=geom.hbar)
    ells, bound_vals, alphas, d1, d2 = [], [], [], [], []
    for t in times:
        psi_t = traj.state_at(t)
        Psi_t = prop.propagate(Psi0, t)
        a = alpha_functional(Psi_t, psi_t, basis, geom)
        alphas.append(a)
        ells.append(ell_functional(v, psi_t, geom))
        bound_vals.append(ells[-1] if tight_ell
                          else L_functional(v, psi_t, geom, cfg.cs_constant))
        F1 = reduced_density(Psi_t, basis, 1, cap=cfg.caps_reduced_cap)
        dist1, _, _, _ = seiringer_bound_check(F1, psi_t, geom, a, 1)
        d1.append(dist1)
        if min(N, cfg.caps_reduced_cap) >= 2:
            F2 = reduced_density(Psi_t, basis, 2, cap=cfg.caps_reduced_cap)
            dist2, _, _, _ = seiringer_bound_check(F2, psi_t, geom, a, 2)
        else:
            dist2 = 0.0
        d2.append(dist2)
    ints = integral_ell(times, np.array(bound_vals))
    rows = []
    ok = True
    for i, t in enumerate(times):
        growth = np.exp(6.0 * ints[i] / geom.hbar)
        gr_rhs = alphas[0] * growth + (2.0 / N) * (growth - 1.0)
        c1 = corollary_rhs(1, N, ints[i], geom.hbar)
        c2 = corollary_rhs(2, N, ints[i], geom.hbar)
        ok = ok and alphas[i] <= gr_rhs + cfg.tolerances_gronwall_slack
        ok = ok and d1[i] <= c1 + cfg.tolerances_gronwall_slack
        ok = ok and d2[i] <= c2 + cfg.tolerances_gronwall_slack
        rows.append([N, t, alphas[i], gr_rhs, d1[i], d2[i], c1, c2, ells[i]])
    return N, rows, ok


def run_sweep(cfg: ExperimentConfig, out_dir, threads: int = 1,
              tight_ell: bool = False) -> dict:
    start = time_mod.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    geom = build_geometry(cfg)
    v = build_pair_potential(cfg, geom)
    psi0 = initial_state(cfg, geom)
    traj = hartree_integrate(psi0, v, geom, cfg.time_tmax, cfg.time_dt,
                             method=cfg.time_method)
    times = cfg.sample_times
    jobs = [(N, cfg, geom, v, traj, times, tight_ell) for N in cfg.n_values()]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_member, jobs))
    else:
        results = [_sweep_member(j) for j in jobs]
    results.sort(key=lambda r: r[0])  # deterministic N order

    rows = [row for _, member_rows, _ in results for row in member_rows]
    _write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    all_ok = all(ok for _, _, ok in results)
    checks = {"sweep_bounds": CheckResult(all_ok, 1.0 if all_ok else 0.0)}
    summary = _summary(cfg, checks, tight_ell, start)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def run_rate_fit(csv_path, out_dir=None) -> dict:
    sup_alpha = {}
    sup_dist = {}
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "N" not in reader.fieldnames:
            raise ValueError(f"{csv_path}: not a sweep CSV (missing header)")
        for row in reader:
            N = int(float(row["N"]))
            sup_alpha[N] = max(sup_alpha.get(N, 0.0), float(row["alpha"]))
            sup_dist[N] = max(sup_dist.get(N, 0.0), float(row["dist_m1"]))
    ns = sorted(sup_alpha)
    if len(ns) < 4:
        raise ValueError(f"rate fit needs >= 4 distinct N, got {len(ns)}")

    result = {"schema_version": SCHEMA_VERSION, "n_values": ns}
    for name, sup in (("alpha", sup_alpha), ("dist", sup_dist)):
        ys = np.array([sup[n] for n in ns])
        if ys.max() <= 0.0:
            result[f"slope_{name}"] = None
            result[f"notice_{name}"] = "free-dynamics degenerate fit"
            continue
        logn = np.log(np.array(ns, dtype=float))
        logy = np.log(ys)
        coeffs, res, *_ = np.polyfit(logn, logy, 1, full=True)
        result[f"slope_{name}"] = float(coeffs[0])
        result[f"residual_{name}"] = float(res[0]) if len(res) else 0.0
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "rate_fit.json", "w") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
    return result


def _summary(cfg: ExperimentConfig, checks: dict, tight_ell: bool, start: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": cfg.mode,
        "tight_ell": bool(tight_ell),
        "config": asdict(cfg),
        "tolerances": {
            "margin_tol": cfg.tolerances_margin_tol,
            "fd_dt": cfg.tolerances_fd_dt,
            "deriv_tol": cfg.tolerances_deriv_tol,
            "gronwall_slack": cfg.tolerances_gronwall_slack,
            "cross_construction": CROSS_TOL,
            "decomposition": DECOMP_TOL,
            "seiringer_slack": SEIRINGER_SLACK,
            "conservation_norm": CONSERVATION_NORM_TOL,
            "conservation_energy": CONSERVATION_ENERGY_TOL,
        },
        "checks": {name: c.as_dict() for name, c in checks.items()},
        "all_passed": all(c.passed for c in checks.values()),
        "runtime_seconds": round(time_mod.time() - start, 3),
    }
