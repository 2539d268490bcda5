"""Flat key=value experiment configuration with dotted section names.

Example::

    mode = verify
    geometry.d = 4
    geometry.L = 6.283185307179586
    system.N = 3
    potential.kind = soft_coulomb
    potential.g = 0.5
    time.tmax = 1.0
    time.dt = 5e-5

Comments start with '#'.  Unknown keys and malformed lines are rejected
with the offending line number / key in the message.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "verify"                  # verify | sweep | rate_fit

    geometry_d: int = 4
    geometry_L: float = 2.0 * np.pi
    geometry_hbar: float = 1.0
    geometry_kinetic: str = "fd3"

    system_N: int = 3
    system_N_range: tuple = ()            # e.g. (2, 3, 4, 5, 6); used in sweep mode

    potential_kind: str = "soft_coulomb"
    potential_g: float = 0.5
    potential_sigma: float = 0.0          # 0 -> kind default (L/8)
    potential_eps: float = 0.0            # 0 -> kind default (L/8)
    potential_width: float = 0.0          # 0 -> kind default (L/4)
    potential_table: str = ""             # CSV path for custom_table

    initial_kind: str = "gaussian"        # gaussian | mode
    initial_center: float = 0.0
    initial_width: float = 0.0            # 0 -> L/6
    initial_mode_index: int = 0

    time_tmax: float = 1.0
    time_dt: float = 5e-5
    time_sample_stride: int = 4000        # one sample every this many steps
    time_method: str = "rk4"

    tolerances_margin_tol: float = -1e-8
    tolerances_fd_dt: float = 1e-4
    tolerances_deriv_tol: float = 1e-5
    tolerances_gronwall_slack: float = 1e-6

    caps_sector_cap: int = 20000
    caps_reduced_cap: int = 2
    caps_first_quantization_cap: int = 4

    output_dir: str = "out"

    cs_constant: float = 1.0

    def validate(self) -> None:
        if self.mode not in ("verify", "sweep", "rate_fit"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.geometry_d < 2 or self.geometry_L <= 0 or self.geometry_hbar <= 0:
            raise ConfigError("geometry requires d >= 2, L > 0, hbar > 0")
        if self.time_dt <= 0 or self.time_tmax < 0:
            raise ConfigError("time requires dt > 0 and tmax >= 0")
        if self.time_sample_stride < 1:
            raise ConfigError("time.sample_stride must be a positive integer")
        if self.time_method not in ("rk4", "strang"):
            raise ConfigError(f"unknown integrator {self.time_method!r}")
        if self.mode == "sweep" and not self.system_N_range:
            raise ConfigError("sweep mode requires system.N_range (e.g. 2..6)")
        n_steps = self.time_tmax / self.time_dt
        if abs(n_steps - round(n_steps)) > 1e-9:
            raise ConfigError(f"tmax={self.time_tmax} is not a multiple of dt={self.time_dt}")
        fd_steps = self.tolerances_fd_dt / self.time_dt
        if abs(fd_steps - round(fd_steps)) > 1e-9:
            raise ConfigError(
                f"tolerances.fd_dt={self.tolerances_fd_dt} must be a multiple of dt={self.time_dt}"
            )

    @property
    def sample_times(self) -> np.ndarray:
        step = self.time_sample_stride * self.time_dt
        n = int(round(self.time_tmax / step))
        return np.arange(n + 1) * step

    def n_values(self) -> tuple:
        return self.system_N_range if self.mode == "sweep" else (self.system_N,)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_n_range(text: str, lineno: int) -> tuple:
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return tuple(int(tok) for tok in text.split(","))
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse N_range {text!r} (use '2..6' or '2,3,5')")


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    cfg = ExperimentConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        attr = key.replace(".", "_")
        if attr in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        seen.add(attr)
        if attr == "system_N_range":
            cfg.system_N_range = _parse_n_range(value, lineno)
            continue
        if attr not in _FIELD_TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        kind = _FIELD_TYPES[attr]
        try:
            if kind in ("int", int):
                parsed = int(value)
            elif kind in ("float", float):
                parsed = float(value)
            else:
                parsed = value
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value {value!r} for key {key!r}")
        setattr(cfg, attr, parsed)
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), source=str(path))
