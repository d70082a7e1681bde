"""Case registry: equilibrium sweeps, shockwave, Taylor-Green, lid cavity, QFLGA check,
tau-C sweeps and collision timing."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.optimize import minimize_scalar

from . import quantum
from .calibration import CalibrationCurve, fit_tau_from_decay
from .config import ConfigError, RunConfig
from .core import _collide_f, step
from .equilibrium import (
    feq_1d,
    feq_2d,
    init_lid_cavity,
    init_shockwave,
    init_sine,
    init_sine_2d,
    init_taylor_green,
    taylor_green_analytic,
)
from .lattice import build_descriptor, make_table
from .lbm import BgkParams, _bgk_collide_f, lbm_step
from .state import FieldState, InstabilityError, macroscopic, write_snapshot_csv


@dataclass
class CaseReport:
    case: str
    norms: dict = field(default_factory=dict)      # target -> {"l2": ..., "max": ...}
    drift: dict = field(default_factory=dict)      # mass / momentum, relative to initial mass
    timings: dict = field(default_factory=dict)    # collide, stream, total (s)
    instabilities: int = 0
    metrics: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=float)


def error_norms(a, ref) -> dict:
    """Relative L2 (absolute when the reference vanishes) and max-abs error."""
    a = np.asarray(a, dtype=float)
    ref = np.asarray(ref, dtype=float)
    diff = a - ref
    den = np.linalg.norm(ref)
    l2 = np.linalg.norm(diff) / den if den > 0 else np.linalg.norm(diff)
    return {"l2": float(l2), "max": float(np.abs(diff).max()) if diff.size else 0.0}


def tables_for(cfg: RunConfig):
    lam = cfg.lambda_value()
    try:
        return [make_table(cfg.model, k, lam, C) for k, C in zip(cfg.k, cfg.C)]
    except ValueError as exc:
        raise ConfigError({"lambdas": str(exc)}) from None


def _drift(before: FieldState, after: FieldState) -> dict:
    m0 = before.mass()
    out = {"mass": abs(after.mass() - m0) / m0}
    if before.is_periodic:  # walls exchange momentum with the fluid
        out["momentum"] = float(np.abs(after.momentum() - before.momentum()).max()) / m0
    return out


class _Snapshots:
    def __init__(self, outdir: Path | None, every: int, prefix: str = "snap"):
        self.outdir, self.every, self.prefix = outdir, every, prefix
        self.files: list[str] = []

    def __call__(self, st: FieldState):
        if self.outdir is not None and self.every > 0 and st.time % self.every == 0:
            p = write_snapshot_csv(st, self.outdir / f"{self.prefix}_{st.time:07d}.csv")
            self.files.append(str(p))


def _chain(*fns):
    fns = [f for f in fns if f is not None]

    def cb(st):
        for f in fns:
            f(st)
    return cb


def _flga(cfg, state, tables, callback=None, timings=None):
    return step(state, tables, cfg.steps, incompressible=cfg.incompressible,
                negative=cfg.negative, callback=callback, timings=timings)


def _average_run(cfg, state, tables, timings):
    """Mean populations over all sites and the steps after ``warmup``."""
    acc = np.zeros(state.desc.Q)
    count = [0]

    def cb(st):
        if st.time > cfg.warmup:
            acc[:] += st.f.reshape(st.desc.Q, -1).mean(axis=1)
            count[0] += 1
    out = _flga(cfg, state, tables, cb, timings)
    return acc / max(count[0], 1), out


def _equilibrium_sweep(cfg, outdir, timings):
    tables = tables_for(cfg)
    desc = build_descriptor(cfg.model)
    Us = cfg.U_list or tuple(np.round(np.arange(-1.0, 1.0001, 0.1), 10))
    rows, worst, unstable = [], 0.0, 0
    drift: dict = {}
    for U in Us:
        st = init_sine(U, cfg.nx) if cfg.ndim == 1 else init_sine_2d(U, cfg.nx, cfg.ny)
        fbar, out = _average_run(cfg, st, tables, timings)
        unstable += len(out.instabilities)
        for key, v in _drift(st, out).items():
            drift[key] = max(drift.get(key, 0.0), v)
        rho = fbar.sum()
        u = desc.velocities.T.astype(float) @ fbar / rho
        feq = feq_1d(rho, u[0]) if cfg.ndim == 1 else feq_2d(rho, u[0], u[1])
        rel = np.abs(fbar / feq - 1.0)
        if abs(u[0]) <= cfg.u_cut:
            worst = max(worst, float(rel.max()))
        rows.append([U, *u, rho, *fbar, *feq, float(rel.max())])
    files = []
    if outdir is not None:
        Q = desc.Q
        head = ["U"] + [f"u_{a}" for a in "xy"[:cfg.ndim]] + ["rho"] \
            + [f"f_{i}" for i in range(Q)] + [f"feq_{i}" for i in range(Q)] + ["max_rel_err"]
        p = outdir / "equilibrium.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(head)
            w.writerows(rows)
        files.append(str(p))
    return CaseReport(cfg.case, norms={"analytic": {"l2": worst, "max": worst}},
                      drift=drift, instabilities=unstable, files=files,
                      metrics={"max_rel_err": worst, "rows": len(rows)})


def _smoothed_profiles(state: FieldState, window: int):
    rho, u = macroscopic(state)
    fl = state.fluid
    return (uniform_filter1d(rho[fl], window, mode="nearest"),
            uniform_filter1d(u[0][fl], window, mode="nearest"))


def _shockwave(cfg, outdir, timings):
    st0 = init_shockwave(cfg.nx, cfg.rho1, cfg.rho2)
    snaps = _Snapshots(outdir, cfg.cadence)
    out = _flga(cfg, st0, tables_for(cfg), snaps, timings)
    rep = CaseReport(cfg.case, drift=_drift(st0, out), instabilities=len(out.instabilities),
                     files=snaps.files)
    if cfg.compare == "lbm":
        ref = lbm_step(st0, BgkParams(cfg.lbm_tau), cfg.steps)
        r1, u1 = _smoothed_profiles(out, cfg.smooth)
        r2, u2 = _smoothed_profiles(ref, cfg.smooth)
        rep.norms = {"lbm_rho": error_norms(r1, r2), "lbm_u": error_norms(u1, u2)}
        if outdir is not None:
            p = outdir / "profiles.csv"
            with p.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x", "rho_flga", "u_flga", "rho_lbm", "u_lbm"])
                xs = np.nonzero(out.fluid)[0]
                w.writerows(zip(xs, r1, u1, r2, u2))
            rep.files.append(str(p))
    return rep


def decay_series(cfg, timings=None, solver="flga"):
    """Per-step ``max |u_x|`` of a Taylor-Green run, starting with the initial state."""
    st0 = init_taylor_green(cfg.nx, cfg.ny, cfg.u)
    amps = [float(np.abs(macroscopic(st0)[1][0]).max())]

    def cb(st):
        amps.append(float(np.abs(macroscopic(st)[1][0]).max()))
    if solver == "flga":
        out = _flga(cfg, st0, tables_for(cfg), cb, timings)
    else:
        out = lbm_step(st0, BgkParams(cfg.lbm_tau), cfg.steps, cb, timings)
    return np.array(amps), st0, out


def fit_decay(amps, cfg) -> tuple[float, float, int]:
    """Fit the decay from step 1 until the amplitude first drops under ``fit_floor`` of its start."""
    a = np.asarray(amps)
    bad = np.nonzero(~np.isfinite(a) | (a < cfg.fit_floor * a[0]))[0]
    end = int(bad[0]) if bad.size else a.size
    k = 2 * np.pi / cfg.nx
    nu, tau = fit_tau_from_decay(a[1:end], k=k)
    return nu, tau, end - 1


def _taylor_green(cfg, outdir, timings):
    if cfg.nx != cfg.ny:
        raise ConfigError({"ny": "the decay fit assumes a square box"})
    amps, st0, out = decay_series(cfg, timings)
    rep = CaseReport(cfg.case, drift=_drift(st0, out), instabilities=len(out.instabilities))
    try:
        nu, tau, n_fit = fit_decay(amps, cfg)
        rep.metrics.update(nu=nu, tau=tau, fit_samples=n_fit)
    except ValueError as exc:
        rep.metrics.update(nu=None, tau=None, fit_error=str(exc))
        nu = None
    _, u = macroscopic(out)
    if cfg.compare == "analytic" and nu and nu > 0:
        ref = taylor_green_analytic(cfg.steps, nu, cfg.nx, cfg.ny, cfg.u)
        rep.norms["analytic_u"] = error_norms(u, ref.u)
    if cfg.compare == "lbm":
        _, _, ref = decay_series(cfg, solver="lbm")
        rep.norms["lbm_u"] = error_norms(u, macroscopic(ref)[1])
    if outdir is not None:
        p = outdir / "decay.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "max_abs_ux"])
            w.writerows(enumerate(amps))
        rep.files.append(str(p))
        write_snapshot_csv(out, outdir / f"snap_{out.time:07d}.csv")
    return rep


def cavity_metrics(state: FieldState) -> dict:
    """Primary-vortex centre and centreline velocity extrema, in units of the cavity size."""
    _, u = macroscopic(state)
    L = state.shape[0]
    fl = state.fluid
    ux = np.where(fl, u[0], 0.0)
    psi = np.cumsum(ux, axis=1)  # stream function up to a constant, integrated along y
    inner = psi[1:-1, 1:-1]
    i, j = np.unravel_index(np.argmin(inner), inner.shape)
    centre = np.array([i + 1, j + 1]) / (L - 1)
    mid = ux[L // 2, 1:-1]
    return {
        "vortex_x": float(centre[0]),
        "vortex_y": float(centre[1]),
        "ux_centreline_min": float(mid.min()),
        "ux_centreline_min_y": float((np.argmin(mid) + 1) / (L - 1)),
        "ux_below_lid": float(mid[-1]),
    }


def _lid_cavity(cfg, outdir, timings):
    st0 = init_lid_cavity(cfg.nx, cfg.u)
    snaps = _Snapshots(outdir, cfg.cadence)
    out = _flga(cfg, st0, tables_for(cfg), snaps, timings)
    rep = CaseReport(cfg.case, instabilities=len(out.instabilities), files=snaps.files,
                     metrics=cavity_metrics(out))
    rep.drift = {"mass": abs(out.mass() - st0.mass()) / st0.mass()}
    _, u = macroscopic(out)
    profiles = {"ux_flga": u[0][cfg.nx // 2, :]}
    if cfg.compare == "lbm":
        ref = lbm_step(st0, BgkParams(cfg.lbm_tau), cfg.steps)
        _, ur = macroscopic(ref)
        rep.norms["lbm_u"] = error_norms(u[:, out.fluid], ur[:, out.fluid])
        rep.metrics["lbm"] = cavity_metrics(ref)
        profiles["ux_lbm"] = ur[0][cfg.nx // 2, :]
    if outdir is not None:
        p = outdir / "centreline.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", *profiles])
            w.writerows(zip(range(cfg.nx), *profiles.values()))
        rep.files.append(str(p))
    return rep


def _qflga(cfg, outdir, timings):
    if cfg.k != (2,):
        raise ConfigError({"k": "the quantum circuit implements two-body collisions only"})
    lam = cfg.lambda_value()
    if not np.isscalar(lam):
        raise ConfigError({"lambdas": "D1Q3 has a single collision class"})
    st0 = init_shockwave(cfg.nx, cfg.rho1, cfg.rho2)
    rng = np.random.default_rng(cfg.seed)
    q = st0
    t0 = time.perf_counter()
    for _ in range(cfg.steps):
        q = quantum.qflga_step(q, lam, cfg.C[0], shots=cfg.shots or None, rng=rng)
    timings["quantum"] = time.perf_counter() - t0
    c = _flga(replace(cfg, negative="ignore"), st0, tables_for(cfg), timings=timings)
    rep = CaseReport(cfg.case, norms={"flga_f": error_norms(q.f, c.f)},
                     drift=_drift(st0, q), metrics={"n_qubits": quantum.RegisterLayout(cfg.nx).n_qubits})
    if outdir is not None:
        rep.files.append(str(write_snapshot_csv(q, outdir / "qflga.csv")))
        rep.files.append(str(write_snapshot_csv(c, outdir / "flga.csv")))
        rep.files.append(str(quantum.dump_circuit(quantum.collision_circuit(lam, cfg.C[0], cfg.nx),
                                                  outdir / "circuit.txt")))
    return rep


CASE_FUNCS = {
    "eq1d": _equilibrium_sweep,
    "eq2d": _equilibrium_sweep,
    "shockwave": _shockwave,
    "taylor_green": _taylor_green,
    "lid_cavity": _lid_cavity,
    "qflga": _qflga,
}


def _prepare_output(cfg: RunConfig, write: bool) -> Path | None:
    if not write:
        return None
    outdir = cfg.output_dir()
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.cfg").write_text(cfg.as_text())
    return outdir


def run_case(cfg: RunConfig, write: bool = True) -> CaseReport:
    """Run the configured case; with ``write`` the snapshots and ``report.json`` go to the output dir."""
    outdir = _prepare_output(cfg, write)
    timings: dict = {}
    t0 = time.perf_counter()
    rep = CASE_FUNCS[cfg.case](cfg, outdir, timings)
    timings["total"] = time.perf_counter() - t0
    rep.timings = timings
    if outdir is not None:
        p = outdir / "report.json"
        rep.files.append(str(p))
        p.write_text(rep.to_json())
    return rep


def _tau_from_lbm(cfg: RunConfig, flga_state: FieldState) -> float:
    """LBM relaxation time whose smoothed density profile best matches ``flga_state``."""
    st0 = init_shockwave(cfg.nx, cfg.rho1, cfg.rho2)
    target, _ = _smoothed_profiles(flga_state, cfg.smooth)

    def err(tau):
        ref = lbm_step(st0, BgkParams(tau), cfg.steps)
        return error_norms(_smoothed_profiles(ref, cfg.smooth)[0], target)["l2"]
    lo, hi = cfg.tau_range
    return float(minimize_scalar(err, bounds=(lo, hi), method="bounded",
                                 options={"xatol": 1e-3}).x)


def measure_tau(cfg: RunConfig) -> tuple[float | None, bool]:
    """Measured relaxation time of one run and whether the run was unstable."""
    try:
        if cfg.case == "taylor_green":
            amps, _, out = decay_series(cfg)
            unstable = bool(out.instabilities)
            try:
                tau = fit_decay(amps, cfg)[1]
            except ValueError:
                return None, True
        elif cfg.case == "shockwave":
            out = _flga(cfg, init_shockwave(cfg.nx, cfg.rho1, cfg.rho2), tables_for(cfg))
            unstable = bool(out.instabilities)
            tau = None if unstable else _tau_from_lbm(cfg, out)
        else:
            raise ConfigError({"case": "tau sweeps run on taylor_green or shockwave"})
    except InstabilityError:
        return None, True
    return tau, unstable


def sweep_tau(cfg: RunConfig, write: bool = True) -> tuple[CalibrationCurve | None, list[dict]]:
    """Measure tau for every C in ``C_list``; unstable runs are flagged and left out of the fit."""
    if len(cfg.k) != 1:
        raise ConfigError({"k": "a tau sweep varies C of a single collision order"})
    if not cfg.C_list:
        raise ConfigError({"C_list": "give the C values to sweep"})
    outdir = _prepare_output(cfg, write)
    rows, samples, flagged = [], [], []
    for C in cfg.C_list:
        tau, unstable = measure_tau(replace(cfg, C=(C,)))
        ok = tau is not None and not unstable and tau > 0.5
        rows.append({"C": C, "tau": tau, "unstable": unstable, "used": ok})
        (samples if ok else flagged).append((C, tau) if ok else C)
    curve = CalibrationCurve.fit(samples, flagged=flagged) if samples else None
    if outdir is not None:
        with (outdir / "sweep.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, ["C", "tau", "unstable", "used"])
            w.writeheader()
            w.writerows(rows)
        if curve is not None:
            curve.write_csv(outdir / "calibration.csv")
    return curve, rows


def _timing_kernel(name: str, N: int, rng):
    desc = build_descriptor("D2Q9")
    f = feq_2d(np.ones(N), 0.05 * rng.standard_normal(N), 0.05 * rng.standard_normal(N))
    if name == "lbm":
        return lambda: _bgk_collide_f(f, desc, 1.0 / 0.8)
    table = make_table("D2Q9", 2 if name == "flga2" else 3, 1.0, 0.5)
    return lambda: _collide_f(f, [table], None)


def bench_timing(cfg: RunConfig, write: bool = True) -> tuple[list[dict], dict]:
    """Minimum wall time of one collision over ``repeats`` runs per solver and site count.

    Returns the rows and, per solver, the log-log slope and its R^2.
    """
    Ns = cfg.Ns or (1000, 4000, 16000, 64000, 256000, 1000000)
    rng = np.random.default_rng(cfg.seed)
    rows, fits = [], {}
    for name in cfg.solvers:
        ts = []
        for N in Ns:
            fn = _timing_kernel(name, N, rng)
            fn()
            best = np.inf
            for _ in range(cfg.repeats):
                t0 = time.perf_counter()
                fn()
                best = min(best, time.perf_counter() - t0)
            ts.append(best)
            rows.append({"solver": name, "N": N, "seconds": best})
        if len(Ns) > 1:
            x, y = np.log(Ns), np.log(ts)
            slope, icpt = np.polyfit(x, y, 1)
            resid = y - (slope * x + icpt)
            r2 = 1.0 - resid.var() / y.var()
            fits[name] = {"slope": float(slope), "r2": float(r2)}
    outdir = _prepare_output(cfg, write)
    if outdir is not None:
        with (outdir / "timing.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, ["solver", "N", "seconds"])
            w.writeheader()
            w.writerows(rows)
    return rows, fits
