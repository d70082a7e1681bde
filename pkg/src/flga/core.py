"""
FLGA time stepper: ensemble-averaged collision, streaming and wall conditions.

Per site and per table of order k the collision adds

    df_i = sum_J A[i, J] * prod_{j in J} f_j / rho**(k-1)
         = rho * sum_J A[i, J] * prod_{j in J} (f_j / rho)

where ``A`` is the table's assembled gain matrix (see
:class:`flga.lattice.CollisionTable`).  All increments of one table are
computed from the same pre-collision populations.
"""

from __future__ import annotations

import time
from typing import Sequence

import numpy as np

from .lattice import CollisionTable
from .state import (
    FLUID,
    MOVING_WALL,
    WALL,
    FieldState,
    InstabilityError,
    density,
    macroscopic,
)

__all__ = [
    "collision_increment",
    "collide",
    "stream",
    "apply_boundaries",
    "step",
    "macroscopic",
    "NEGATIVE_POLICIES",
]

CS2 = 1.0 / 3.0
# products of one chunk are kept near this size so they stay in cache
CHUNK_BYTES = 1 << 19
NEGATIVE_POLICIES = ("clamp", "strict", "ignore")


def _as_tables(tables) -> list[CollisionTable]:
    if isinstance(tables, CollisionTable):
        return [tables]
    return sorted(tables, key=lambda t: t.k)


def collision_increment(f: np.ndarray, table: CollisionTable, rho=None) -> np.ndarray:
    """Collision increment for populations ``f`` of shape ``(Q, *grid)``.

    ``rho`` overrides the normalising density (scalar or grid); by default the
    local site density is used.  Sites with zero density get no increment.
    """
    Q = f.shape[0]
    flat = f.reshape(Q, -1)
    n = flat.shape[1]
    if len(table.inputs) == 0:  # e.g. D1Q3 has no three-body collisions
        return np.zeros(f.shape)
    if rho is None:
        rho = density(flat, table.desc)
    rho = np.broadcast_to(np.asarray(rho, dtype=float).reshape(-1) if np.ndim(rho) else rho, (n,))
    live = rho > 0

    # products of channel fractions f_j / rho stay in [0, 1] whatever the scale of f
    out = np.empty_like(flat)
    idx = table.inputs
    A = table.assembled
    chunk = max(256, CHUNK_BYTES // (8 * len(idx)))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        frac = np.zeros((Q, hi - lo))
        np.divide(flat[:, lo:hi], rho[lo:hi], out=frac, where=live[lo:hi])
        prod = frac[idx[:, 0]] * frac[idx[:, 1]]
        for c in range(2, table.k):
            prod *= frac[idx[:, c]]
        out[:, lo:hi] = A @ prod
        out[:, lo:hi] *= rho[lo:hi]
    return out.reshape(f.shape)


def _collide_f(f, tables, fluid, incompressible=False):
    for table in tables:
        if incompressible:
            rho = density(f, table.desc)[fluid].mean()
        else:
            rho = None
        f = f + collision_increment(f, table, rho)
    return f


def _handle_negative(f, fluid, policy, time, record, desc):
    bad = (f < 0).any(axis=0) & fluid
    if not bad.any():
        return f
    sites = np.argwhere(bad)
    if policy == "strict":
        raise InstabilityError([tuple(int(c) for c in s) for s in sites], time)
    record.append({"time": time, "sites": sites})
    if policy == "clamp":
        before = density(f, desc)
        f = np.where(bad, np.maximum(f, 0.0), f)
        after = density(f, desc)
        scale = np.ones_like(before)
        np.divide(before, after, out=scale, where=bad & (after > 0))
        f = f * scale
    return f


def collide(state: FieldState, tables: CollisionTable | Sequence[CollisionTable], *,
            incompressible: bool = False, negative: str = "clamp") -> FieldState:
    """Apply one FLGA collision; tables of several orders are applied in ascending k.

    ``incompressible`` replaces the local density by the mean fluid density.
    ``negative`` selects what happens to negative populations: ``clamp``
    (zero them and rescale the site to its mass), ``strict`` (raise
    :class:`InstabilityError`) or ``ignore`` (flag only).
    """
    if negative not in NEGATIVE_POLICIES:
        raise ValueError(f"negative policy must be one of {NEGATIVE_POLICIES}")
    tables = _as_tables(tables)
    for t in tables:
        if t.desc.model_id != state.desc.model_id:
            raise ValueError("collision table and state use different lattices")
    out = state.with_f(state.f)
    f = _collide_f(state.f, tables, state.fluid, incompressible)
    out.f = _handle_negative(f, state.fluid, negative, state.time, out.instabilities, state.desc)
    return out


def _stream_f(f, desc):
    out = np.empty_like(f)
    axes = tuple(range(desc.dimension))
    for i, v in enumerate(desc.velocities):
        out[i] = np.roll(f[i], tuple(int(c) for c in v), axis=axes)
    return out


def stream(state: FieldState) -> FieldState:
    """Move every population one link along its velocity, wrapping periodically."""
    return state.with_f(_stream_f(state.f, state.desc))


def _boundaries_f(f, flags, wall_velocity, desc):
    solid = flags != FLUID
    if not solid.any():
        return f
    f = f.copy()
    axes = tuple(range(desc.dimension))
    fluid = ~solid
    w = desc.weights
    moving = flags == MOVING_WALL
    corrections = []
    for i, v in enumerate(desc.velocities):
        if not v.any():
            continue
        back = tuple(-int(c) for c in v)
        arrived = np.where(solid, f[i], 0.0)
        j = int(desc.opposite[i])
        # population that entered a wall node returns to its source site, reversed
        f[j] += np.roll(arrived, back, axis=axes) * fluid
        if moving.any():
            vu = np.tensordot(v.astype(float), wall_velocity, axes=(0, 0)) * moving
            if vu.any():
                corrections.append((j, np.roll(-2.0 * w[i] * vu / CS2, back, axis=axes) * fluid))
    f[:, solid] = 0.0
    if corrections:
        rho = density(f, desc)
        for j, c in corrections:
            f[j] += c * rho
    return f


def apply_boundaries(state: FieldState) -> FieldState:
    """Half-way bounce-back at wall sites, with a momentum correction at moving walls.

    Must follow :func:`stream`.  A population that streamed into a wall node is
    sent back to the fluid node it left, into the opposite channel; at a moving
    wall it is corrected by ``-2 w_i rho (v_i . u_w) / c_s^2``.
    """
    return state.with_f(_boundaries_f(state.f, state.flags, state.wall_velocity, state.desc))


def run(state: FieldState, collide_fn, n: int, negative: str = "clamp",
        callback=None, timings: dict | None = None) -> FieldState:
    """Repeat collide -> stream -> boundaries ``n`` times with a population-level collision.

    ``timings``, if given, accumulates wall seconds under ``collide`` and ``stream``.
    """
    if n < 0:
        raise ValueError("step count must be non-negative")
    if negative not in NEGATIVE_POLICIES:
        raise ValueError(f"negative policy must be one of {NEGATIVE_POLICIES}")
    out = state.copy()
    fluid = state.fluid
    f = out.f
    clock = time.perf_counter
    t_col = t_str = 0.0
    for _ in range(n):
        t0 = clock()
        f = collide_fn(f)
        f = _handle_negative(f, fluid, negative, out.time, out.instabilities, state.desc)
        t1 = clock()
        f = _stream_f(f, state.desc)
        f = _boundaries_f(f, state.flags, state.wall_velocity, state.desc)
        t_col += t1 - t0
        t_str += clock() - t1
        out.time += 1
        if callback is not None:
            out.f = f
            callback(out)
    out.f = f
    if timings is not None:
        timings["collide"] = timings.get("collide", 0.0) + t_col
        timings["stream"] = timings.get("stream", 0.0) + t_str
    return out


def step(state: FieldState, tables: CollisionTable | Sequence[CollisionTable], n: int = 1, *,
         incompressible: bool = False, negative: str = "clamp", callback=None,
         timings: dict | None = None) -> FieldState:
    """Advance ``n`` FLGA steps; instability records accumulate on the returned state."""
    tables = _as_tables(tables)
    fluid = state.fluid
    return run(state, lambda f: _collide_f(f, tables, fluid, incompressible), n,
               negative=negative, callback=callback, timings=timings)
