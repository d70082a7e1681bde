"""Equilibrium distributions and the initial conditions used by the benchmark cases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import ModelId, build_descriptor
from .state import FLUID, MOVING_WALL, WALL, FieldState

D1Q3_WEIGHTS = np.array([2 / 3, 1 / 6, 1 / 6])


@dataclass
class MacroField:
    rho: np.ndarray
    u: np.ndarray  # (dim, *shape)
    pressure: np.ndarray | None = None

    def __post_init__(self):
        if self.u.shape[1:] != self.rho.shape:
            raise ValueError("velocity and density grids differ in shape")
        if np.any(self.rho < 0):
            raise ValueError("negative density")


def feq_1d(rho, u) -> np.ndarray:
    """D1Q3 equilibrium of the ensemble-averaged collision, shape ``(3, *shape)``.

    The fixed point of the two-body D1Q3 collision: rest ``f0``, right ``f1``
    and left ``f2`` satisfy ``f1 * f2 = f0**2 / 16`` with moments ``rho`` and
    ``rho * u``.
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    s = np.sqrt(1.0 + 3.0 * u * u) - 1.0
    return np.stack([
        rho * (2 / 3) * (1.0 - s),
        rho * (1 / 6) * (1.0 + 3.0 * u + 2.0 * s),
        rho * (1 / 6) * (1.0 - 3.0 * u + 2.0 * s),
    ])


def feq_2d(rho, ux, uy) -> np.ndarray:
    """D2Q9 equilibrium as the tensor product of two D1Q3 equilibria, shape ``(9, *shape)``."""
    desc = build_descriptor(ModelId.D2Q9)
    fx = feq_1d(rho, ux)
    fy = feq_1d(np.ones_like(np.asarray(rho, dtype=float)), uy)
    chan = {0: 0, 1: 1, -1: 2}
    return np.stack([fx[chan[int(vx)]] * fy[chan[int(vy)]] for vx, vy in desc.velocities])


def init_sine(U: float, L: int, moving_fraction: float = 1 / 3) -> FieldState:
    """Periodic D1Q3 line with unit mass per site and a sine-shaped moving population.

    Right and left channels receive ``moving_fraction * (1 +- U)/2 * sin(pi x / L)``;
    the rest channel takes the remainder of the unit site mass.
    """
    if abs(U) > 1:
        raise ValueError(f"|U| must be <= 1, got {U}")
    x = np.arange(L)
    env = moving_fraction * np.sin(np.pi * x / L)
    right = 0.5 * (1 + U) * env
    left = 0.5 * (1 - U) * env
    f = np.stack([1.0 - right - left, right, left])
    return FieldState.periodic(build_descriptor(ModelId.D1Q3), f)


def init_sine_2d(U: float, Lx: int, Ly: int | None = None,
                 moving_fraction: float = 1 / 3) -> FieldState:
    """Periodic D2Q9 grid: the 1D sine profile along x times rest-state D1Q3 weights along y."""
    Ly = Lx if Ly is None else Ly
    fx = init_sine(U, Lx, moving_fraction).f
    desc = build_descriptor(ModelId.D2Q9)
    chan = {0: 0, 1: 1, -1: 2}
    f = np.stack([np.outer(fx[chan[int(vx)]], np.full(Ly, D1Q3_WEIGHTS[chan[int(vy)]]))
                  for vx, vy in desc.velocities])
    return FieldState.periodic(desc, f)


def init_shockwave(L: int, rho1: float = 4.0, rho2: float = 2.0) -> FieldState:
    """Riemann problem at rest with impermeable walls at both ends (sites 0 and L-1)."""
    if L % 2:
        raise ValueError("shockwave domain length must be even")
    rho = np.where(np.arange(L) < L // 2, rho1, rho2).astype(float)
    flags = np.full(L, FLUID, dtype=np.int8)
    flags[[0, -1]] = WALL
    f = feq_1d(rho, np.zeros(L))
    f[:, flags == WALL] = 0.0
    return FieldState(build_descriptor(ModelId.D1Q3), f, flags)


def _tg_fields(t, nu, Lx, Ly, u_max, rho0):
    kx, ky = 2 * np.pi / Lx, 2 * np.pi / Ly
    x = np.arange(Lx)[:, None]
    y = np.arange(Ly)[None, :]
    decay = np.exp(-nu * (kx**2 + ky**2) * t)
    ux = -u_max * np.sqrt(ky / kx) * np.cos(kx * x) * np.sin(ky * y) * decay
    uy = u_max * np.sqrt(kx / ky) * np.sin(kx * x) * np.cos(ky * y) * decay
    p = -0.25 * u_max**2 * (ky / kx * np.cos(2 * kx * x) + kx / ky * np.cos(2 * ky * y)) * decay**2
    rho = rho0 + 3.0 * p
    return rho, np.stack([ux, uy]), p


def taylor_green_analytic(t: float, nu: float, Lx: int, Ly: int | None = None,
                          u_max: float = 0.1, rho0: float = 1.0) -> MacroField:
    """Decaying Taylor-Green vortex on a periodic ``Lx x Ly`` grid (one period each way).

    Velocity decays as ``exp(-nu (kx^2 + ky^2) t)``, i.e. ``exp(-2 nu k^2 t)`` on
    a square box; the pressure decays at twice that rate.
    """
    if t < 0 or nu <= 0:
        raise ValueError("need t >= 0 and nu > 0")
    Ly = Lx if Ly is None else Ly
    rho, u, p = _tg_fields(t, nu, Lx, Ly, u_max, rho0)
    return MacroField(rho=rho, u=u, pressure=p)


def init_lid_cavity(L: int, u_lid: float, rho0: float = 1.0) -> FieldState:
    """Square cavity at rest: walls on the left, right and bottom rows, lid on the top row.

    The lid moves along +x; the two top corners are stationary walls.
    """
    desc = build_descriptor(ModelId.D2Q9)
    flags = np.full((L, L), FLUID, dtype=np.int8)
    flags[[0, -1], :] = WALL
    flags[:, 0] = WALL
    flags[1:-1, -1] = MOVING_WALL
    flags[[0, -1], -1] = WALL
    wall_u = np.zeros((2, L, L))
    wall_u[0, flags == MOVING_WALL] = u_lid
    f = feq_2d(np.full((L, L), rho0), np.zeros((L, L)), np.zeros((L, L)))
    f[:, flags != FLUID] = 0.0
    return FieldState(desc, f, flags, wall_velocity=wall_u)


def init_taylor_green(Lx: int, Ly: int | None = None, u_max: float = 0.1,
                      rho0: float = 1.0) -> FieldState:
    Ly = Lx if Ly is None else Ly
    rho, u, _ = _tg_fields(0.0, 1.0, Lx, Ly, u_max, rho0)
    return FieldState.periodic(build_descriptor(ModelId.D2Q9), feq_2d(rho, u[0], u[1]))
