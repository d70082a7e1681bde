"""Grid state shared by the FLGA and BGK steppers, plus snapshot I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .lattice import LatticeDescriptor, ModelId, build_descriptor

FLUID, WALL, MOVING_WALL = 0, 1, 2


class InstabilityError(RuntimeError):
    """Raised in strict mode when a step produces negative populations."""

    def __init__(self, sites, time):
        self.sites = sites
        self.time = time
        super().__init__(f"negative populations at {len(sites)} site(s) at step {time}: {sites[:5]}")


@dataclass
class FieldState:
    """Populations ``f`` of shape ``(Q, *grid)`` with per-site boundary flags.

    Wall and moving-wall sites carry no mass; streaming into them is reflected
    back by :func:`flga.core.apply_boundaries`.  ``wall_velocity`` has shape
    ``(dimension, *grid)`` and is only read at moving-wall sites.
    """

    desc: LatticeDescriptor
    f: np.ndarray
    flags: np.ndarray
    wall_velocity: np.ndarray | None = None
    time: int = 0
    instabilities: list = field(default_factory=list)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        if self.f.shape[0] != self.desc.Q or self.f.ndim - 1 != self.desc.dimension:
            raise ValueError(f"f has shape {self.f.shape}, incompatible with {self.desc.model_id.value}")
        self.flags = np.asarray(self.flags, dtype=np.int8)
        if self.flags.shape != self.shape:
            raise ValueError("flags and populations disagree on the grid shape")
        if np.any(self.flags == MOVING_WALL):
            if self.wall_velocity is None:
                raise ValueError("moving-wall sites need a wall_velocity field")
            speed = np.sqrt((self.wall_velocity ** 2).sum(axis=0))
            if np.any(speed[self.flags == MOVING_WALL] >= 1.0):
                raise ValueError("moving-wall speed must be below one lattice unit per step")

    @classmethod
    def periodic(cls, desc: LatticeDescriptor, f) -> "FieldState":
        f = np.asarray(f, dtype=float)
        return cls(desc, f, np.zeros(f.shape[1:], dtype=np.int8))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.f.shape[1:]

    @property
    def fluid(self) -> np.ndarray:
        return self.flags == FLUID

    @property
    def is_periodic(self) -> bool:
        return not np.any(self.flags != FLUID)

    def with_f(self, f: np.ndarray, **changes) -> "FieldState":
        return replace(self, f=f, instabilities=list(self.instabilities), **changes)

    def copy(self) -> "FieldState":
        return self.with_f(self.f.copy())

    def mass(self) -> float:
        return float(self.f.sum())

    def momentum(self) -> np.ndarray:
        v = self.desc.velocities.astype(float)
        return np.tensordot(v.T, self.f, axes=(1, 0)).reshape(self.desc.dimension, -1).sum(axis=1)


def density(f: np.ndarray, desc: LatticeDescriptor) -> np.ndarray:
    """Site density, summed as rest + (i + opposite(i)) pairs so mirrored states give identical bits."""
    rho = f[0].copy()
    for i in range(1, desc.Q):
        j = int(desc.opposite[i])
        if i < j:
            rho += f[i] + f[j]
    return rho


def macroscopic(state: FieldState) -> tuple[np.ndarray, np.ndarray]:
    """Density and velocity fields; velocity is zero where density vanishes."""
    rho = density(state.f, state.desc)
    v = state.desc.velocities.astype(float)
    mom = np.tensordot(v.T, state.f, axes=(1, 0))
    u = np.zeros_like(mom)
    np.divide(mom, rho, out=u, where=rho > 0)
    return rho, u


def write_snapshot_csv(state: FieldState, path: str | Path) -> Path:
    """One row per site: coordinates, density, velocity, populations."""
    path = Path(path)
    rho, u = macroscopic(state)
    dim = state.desc.dimension
    coords = np.indices(state.shape).reshape(dim, -1)
    f = state.f.reshape(state.desc.Q, -1)
    axes = ["x", "y"][:dim]
    header = axes + ["rho"] + [f"u_{a}" for a in axes] + [f"f_{i}" for i in range(state.desc.Q)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for n in range(coords.shape[1]):
            row = [int(c) for c in coords[:, n]]
            row.append(repr(float(rho.reshape(-1)[n])))
            row += [repr(float(u[a].reshape(-1)[n])) for a in range(dim)]
            row += [repr(float(x)) for x in f[:, n]]
            w.writerow(row)
    return path


def read_snapshot_csv(path: str | Path, model: ModelId | str) -> np.ndarray:
    """Populations from a snapshot CSV, shape ``(Q, *grid)``."""
    desc = build_descriptor(model)
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    axes = ["x", "y"][:desc.dimension]
    shape = tuple(max(int(r[a]) for r in rows) + 1 for a in axes)
    f = np.zeros((desc.Q, *shape))
    for r in rows:
        idx = tuple(int(r[a]) for a in axes)
        for i in range(desc.Q):
            f[(i, *idx)] = float(r[f"f_{i}"])
    return f


def write_snapshot_binary(state: FieldState, path: str | Path) -> Path:
    """Row-major float64 dump of ``f`` (shape stored in an ``.npy`` header) for exact replay."""
    path = Path(path)
    with path.open("wb") as fh:
        np.save(fh, np.ascontiguousarray(state.f), allow_pickle=False)
    return path


def read_snapshot_binary(path: str | Path) -> np.ndarray:
    with Path(path).open("rb") as fh:
        return np.load(fh, allow_pickle=False)
