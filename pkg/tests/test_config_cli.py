import json

import numpy as np
import pytest

from picklab.cli import main
from picklab.config import ConfigError, load_config, parse_config
from picklab.runner import run_rate_fit, run_sweep, run_verify

FAST_VERIFY = """
mode = verify
geometry.d = 3
geometry.L = 6.283185307179586
system.N = 2
potential.kind = soft_coulomb
potential.g = 0.3
time.tmax = 0.2
time.dt = 1e-4
time.sample_stride = 1000
tolerances.fd_dt = 1e-4
"""

FAST_SWEEP = """
mode = sweep
geometry.d = 3
geometry.L = 6.283185307179586
system.N_range = 2..5
potential.kind = soft_coulomb
potential.g = 0.3
time.tmax = 0.2
time.dt = 1e-4
time.sample_stride = 500
"""


def test_parse_config_basics():
    cfg = parse_config(FAST_VERIFY)
    assert cfg.geometry_d == 3
    assert cfg.system_N == 2
    assert cfg.potential_g == 0.3
    assert list(cfg.sample_times) == pytest.approx([0.0, 0.1, 0.2])


def test_parse_config_diagnostics():
    with pytest.raises(ConfigError, match="line 1|:1:"):
        parse_config("not a key value pair")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("mode = verify\nbogus.key = 1\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("geometry.d = 3\ngeometry.d = 4\n")
    with pytest.raises(ConfigError, match="bad value"):
        parse_config("geometry.d = three\n")
    with pytest.raises(ConfigError, match="multiple of dt"):
        parse_config("time.tmax = 1.0\ntime.dt = 3e-4\n")
    with pytest.raises(ConfigError, match="N_range"):
        parse_config("mode = sweep\n")


def test_n_range_forms():
    assert parse_config("mode = sweep\nsystem.N_range = 2..4\n").system_N_range == (2, 3, 4)
    assert parse_config("mode = sweep\nsystem.N_range = 2,5\n").system_N_range == (2, 5)


def test_run_verify_artifacts(tmp_path):
    cfg = parse_config(FAST_VERIFY)
    summary = run_verify(cfg, tmp_path, tight_ell=True)
    assert summary["schema_version"] == "picklab-v1"
    assert summary["all_passed"]
    ineq = (tmp_path / "inequality.csv").read_text().splitlines()
    assert ineq[0] == ("t,ell,agg_plus,agg_minus,t1p,t1m,t2p,t2m,t3p,t3m,"
                       "t4p,t4m,gronwall_margin,deriv_residual")
    assert len(ineq) == 4  # header + 3 samples
    traj = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert traj[0] == "t,norm_drift,energy_drift"
    stored = json.loads((tmp_path / "summary.json").read_text())
    assert stored["checks"]["aggregate"]["passed"]


def test_run_verify_thread_determinism(tmp_path):
    cfg = parse_config(FAST_VERIFY)
    run_verify(cfg, tmp_path / "a", threads=1, tight_ell=True)
    run_verify(cfg, tmp_path / "b", threads=4, tight_ell=True)
    assert ((tmp_path / "a" / "inequality.csv").read_text()
            == (tmp_path / "b" / "inequality.csv").read_text())


def test_run_sweep_and_rate_fit(tmp_path):
    cfg = parse_config(FAST_SWEEP)
    summary = run_sweep(cfg, tmp_path, threads=2, tight_ell=True)
    assert summary["all_passed"]
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == ("N,t,alpha,gronwall_rhs,dist_m1,dist_m2,"
                        "corollary_rhs_m1,corollary_rhs_m2,ell")
    assert len(lines) == 1 + 4 * 5  # header + |N_range| * samples
    fit = run_rate_fit(tmp_path / "sweep.csv", out_dir=tmp_path)
    assert fit["slope_alpha"] is not None
    assert (tmp_path / "rate_fit.json").exists()


def test_rate_fit_synthetic_power_laws(tmp_path):
    rows = ["N,t,alpha,gronwall_rhs,dist_m1,dist_m2,"
            "corollary_rhs_m1,corollary_rhs_m2,ell"]
    for N in (2, 3, 4, 5, 6):
        rows.append(f"{N},0.5,{0.7 / N},1,{0.9 / np.sqrt(N)},0,1,1,0.2")
    path = tmp_path / "synth.csv"
    path.write_text("\n".join(rows) + "\n")
    fit = run_rate_fit(path)
    assert fit["slope_alpha"] == pytest.approx(-1.0, abs=1e-12)
    assert fit["slope_dist"] == pytest.approx(-0.5, abs=1e-12)


def test_rate_fit_degenerate(tmp_path):
    rows = ["N,t,alpha,gronwall_rhs,dist_m1,dist_m2,"
            "corollary_rhs_m1,corollary_rhs_m2,ell"]
    for N in (2, 3, 4, 5):
        rows.append(f"{N},0.5,0,0,0,0,1,1,0")
    path = tmp_path / "flat.csv"
    path.write_text("\n".join(rows) + "\n")
    fit = run_rate_fit(path)
    assert fit["slope_alpha"] is None
    assert "degenerate" in fit["notice_alpha"]


def test_cli_verify_exit_codes(tmp_path, capsys):
    cfg_path = tmp_path / "fast.cfg"
    cfg_path.write_text(FAST_VERIFY)
    rc = main(["verify", str(cfg_path), "--out", str(tmp_path / "out"),
               "--tight-ell", "--threads", "2", "--seed", "1"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "all_passed=True" in out
    # config errors exit 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("geometry.d = -3\n")
    assert main(["verify", str(bad)]) == 2


def test_cli_rejects_odd_custom_table(tmp_path):
    table = tmp_path / "odd.csv"
    lines = ["x_index,value"] + [f"{i},{float(i)}" for i in range(3)]
    table.write_text("\n".join(lines) + "\n")
    cfg = tmp_path / "odd.cfg"
    cfg.write_text(FAST_VERIFY.replace("potential.kind = soft_coulomb",
                                       "potential.kind = custom_table")
                   .replace("potential.g = 0.3",
                            f"potential.table = {table}"))
    assert main(["verify", str(cfg)]) == 2


def test_cli_rate_fit(tmp_path, capsys):
    rows = ["N,t,alpha,gronwall_rhs,dist_m1,dist_m2,"
            "corollary_rhs_m1,corollary_rhs_m2,ell"]
    for N in (2, 3, 4, 5):
        rows.append(f"{N},0.1,{1.0 / N},1,0,0,1,1,0.1")
    path = tmp_path / "sweep.csv"
    path.write_text("\n".join(rows) + "\n")
    assert main(["rate-fit", str(path)]) == 0
    assert '"slope_alpha"' in capsys.readouterr().out
