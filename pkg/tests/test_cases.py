import numpy as np
import pytest

from flga.cases import (
    cavity_metrics,
    decay_series,
    error_norms,
    fit_decay,
    measure_tau,
    run_case,
    sweep_tau,
)
from flga.config import ConfigError, load_config
from flga.equilibrium import init_lid_cavity


def test_error_norms():
    assert error_norms([1, 2], [1, 2]) == {"l2": 0.0, "max": 0.0}
    n = error_norms([0, 0], [0, 0])
    assert n["l2"] == 0.0
    n = error_norms([1.1, 2.0], [1.0, 2.0])
    assert n["max"] == pytest.approx(0.1)
    assert n["l2"] == pytest.approx(0.1 / np.sqrt(5))


def test_eq1d_small():
    cfg = load_config("eq1d", {"nx": "40", "steps": "200", "warmup": "100", "U_list": "-0.5,0,0.5"})
    rep = run_case(cfg, write=False)
    assert rep.metrics["max_rel_err"] < 0.02
    assert rep.drift["mass"] < 1e-12


def test_eq2d_small():
    cfg = load_config("eq2d", {"nx": "8", "ny": "8", "steps": "80", "warmup": "40",
                               "U_list": "0,0.3"})
    rep = run_case(cfg, write=False)
    assert rep.metrics["max_rel_err"] < 1e-3


def test_taylor_green_small():
    cfg = load_config("taylor_green", {"nx": "32", "ny": "32", "steps": "60"})
    amps, st0, out = decay_series(cfg)
    assert amps.size == 61 and np.all(np.diff(amps[:20]) < 0)
    nu, tau, n = fit_decay(amps, cfg)
    assert tau == pytest.approx(0.5 + 3 * nu)
    rep = run_case(cfg, write=False)
    assert rep.drift["mass"] < 1e-12 and rep.drift["momentum"] < 1e-12
    assert "analytic_u" in rep.norms
    with pytest.raises(ConfigError):
        run_case(load_config("taylor_green", {"ny": "20"}), write=False)


def test_lid_cavity_small():
    cfg = load_config("lid_cavity", {"nx": "16", "ny": "16", "steps": "200", "snapshot_every": "0",
                                     "compare": "lbm", "lbm_tau": "0.8"})
    rep = run_case(cfg, write=False)
    m = rep.metrics
    assert m["ux_below_lid"] > 0 and m["ux_centreline_min"] < 0
    assert 0 < m["vortex_x"] < 1 and 0.5 < m["vortex_y"] < 1
    assert "lbm_u" in rep.norms
    # a fluid at rest has no centreline flow
    assert cavity_metrics(init_lid_cavity(12, 0.1))["ux_centreline_min"] == 0.0


def test_qflga_case():
    rep = run_case(load_config("qflga", {"nx": "32", "steps": "3"}), write=False)
    assert rep.norms["flga_f"]["max"] < 1e-12
    assert rep.metrics["n_qubits"] == 12
    with pytest.raises(ConfigError):
        run_case(load_config("qflga", {"k": "3"}), write=False)


def test_measure_and_sweep_tau():
    cfg = load_config("taylor_green", {"nx": "32", "ny": "32", "steps": "150"})
    tau, unstable = measure_tau(cfg)
    assert not unstable and tau > 0.5
    sw = load_config("sweep_d1q3", {"nx": "64", "steps": "40", "C_list": "1,2,4"})
    curve, rows = sweep_tau(sw, write=False)
    taus = [r["tau"] for r in rows]
    assert all(a > b for a, b in zip(taus, taus[1:]))
    assert curve is not None and curve.gamma > 0
    with pytest.raises(ConfigError):
        sweep_tau(load_config("sweep_d1q3", {"C_list": ""}), write=False)


def test_snapshots_written(tmp_path, monkeypatch):
    monkeypatch.setenv("FLGA_OUTPUT_ROOT", str(tmp_path))
    cfg = load_config("shockwave", {"nx": "32", "steps": "20", "snapshot_every": "10", "output": "s"})
    rep = run_case(cfg)
    snaps = sorted((tmp_path / "s").glob("snap_*.csv"))
    assert len(snaps) >= 2
    assert str(tmp_path / "s" / "report.json") in rep.files


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="fitted gamma is about 2.48 at 50x50; see decisions ledger")
def test_fitted_gamma_range_two_body_unit_rates():
    curve, rows = sweep_tau(load_config("sweep_lambda_i"), write=False)
    assert all(a["tau"] >= b["tau"] for a, b in zip(rows, rows[1:]) if a["used"] and b["used"])
    assert 2.7 <= curve.gamma <= 4.0
