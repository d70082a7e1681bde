"""Reference single-relaxation-time (BGK) lattice Boltzmann solver for D1Q3 and D2Q9.

Streaming and wall treatment are shared with the FLGA stepper so that any
difference between the two solvers comes from the collision alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import run
from .state import FieldState, density


@dataclass(frozen=True)
class BgkParams:
    tau: float
    cs2: float = 1.0 / 3.0

    def __post_init__(self):
        if not self.tau > 0.5:
            raise ValueError(f"BGK relaxation time must exceed 0.5, got {self.tau}")


def lbm_feq(rho, u, desc) -> np.ndarray:
    """Second-order BGK equilibrium; ``u`` has shape ``(dimension, *grid)``."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float).reshape(desc.dimension, *rho.shape)
    v = desc.velocities.astype(float)
    vu = np.tensordot(v, u, axes=(1, 0))
    usq = (u * u).sum(axis=0)
    w = desc.weights.reshape(-1, *([1] * rho.ndim))
    return w * rho * (1.0 + 3.0 * vu + 4.5 * vu * vu - 1.5 * usq)


def _bgk_collide_f(f, desc, omega, chunk=2048):
    """BGK relaxation over site blocks small enough to keep temporaries in cache."""
    flat = f.reshape(desc.Q, -1)
    out = np.empty_like(flat)
    v = desc.velocities.astype(float)
    w = desc.weights[:, None] * omega
    for lo in range(0, flat.shape[1], chunk):
        blk = flat[:, lo:lo + chunk]
        rho = density(blk, desc)
        u = v.T @ blk
        np.divide(u, rho, out=u, where=rho > 0)
        vu = v @ u
        feq = vu * (3.0 + 4.5 * vu)
        feq += 1.0 - 1.5 * (u * u).sum(axis=0)
        feq *= w * rho
        o = out[:, lo:lo + chunk]
        np.multiply(blk, 1.0 - omega, out=o)
        o += feq
    return out.reshape(f.shape)


def bgk_collide(state: FieldState, params: BgkParams) -> FieldState:
    return state.with_f(_bgk_collide_f(state.f, state.desc, 1.0 / params.tau))


def lbm_step(state: FieldState, params: BgkParams, n: int = 1, callback=None,
             timings: dict | None = None) -> FieldState:
    """``n`` BGK steps: relax towards equilibrium, stream, bounce back."""
    omega = 1.0 / params.tau
    return run(state, lambda f: _bgk_collide_f(f, state.desc, omega), n,
               negative="ignore", callback=callback, timings=timings)
