"""Relaxation time, collision scale and viscosity relations, and decay fitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

CS2 = 1.0 / 3.0

# Unordered tables relax non-conserved moments at half the rate given by the
# gamma formulas, so the exponent seen by a simulation is C * gamma / 2.
UNORDERED_RATE_FACTOR = 0.5


def tau_approx(C: float, gamma: float) -> float:
    """Small-deviation relaxation time ``1 / (1 - exp(-C gamma))``."""
    x = C * gamma
    if x <= 0:
        raise ZeroDivisionError("relaxation time diverges for C * gamma <= 0")
    return 1.0 / -math.expm1(-x)


def tau_full(gamma: float, pi0: float) -> float:
    """Relaxation time with second-order moment deviations (1D).

    ``tau = 1 / (pi0 (e^gamma - 1/(2 sqrt 6)) + e^gamma) - 1``, evaluated as
    written.  ``gamma`` is the total collision exponent (``C`` times the
    per-collision rate) and ``pi0`` the initial non-conserved moment deviation.
    """
    eg = math.exp(gamma)
    den = pi0 * (eg - 1.0 / (2.0 * math.sqrt(6.0))) + eg
    if den <= 0:
        raise ValueError(f"non-positive denominator {den} in the full relaxation formula")
    return 1.0 / den - 1.0


def gamma_d2q9(lambdas: Sequence[float]) -> float:
    """Shear-stress relaxation rate of two-body D2Q9 collisions for 9 class rates."""
    lam = [float(x) for x in lambdas]
    if len(lam) != 9:
        raise ValueError("D2Q9 two-body collisions have 9 equivalence classes")
    if any(x < 0 for x in lam):
        raise ValueError("class rates must be non-negative")
    l1, _, l3, l4, _, l6, l7, l8, _ = lam
    return (8 * l1 + l3 + 2 * (l4 + l6 + 2 * l7 + 4 * l8)) / 9.0


def viscosity_from_tau(tau: float, mode: str = "standard") -> float:
    """Kinematic viscosity for relaxation time ``tau``.

    ``standard``: ``c_s^2 (tau - 1/2)``.  ``literal``: ``(tau - 1/2) / c_s^2``,
    the inverted form kept for comparison.
    """
    if tau <= 0.5:
        if tau == 0.5:
            return 0.0
        raise ValueError(f"tau must be >= 0.5, got {tau}")
    if mode == "standard":
        return CS2 * (tau - 0.5)
    if mode == "literal":
        return (tau - 0.5) / CS2
    raise ValueError(f"unknown viscosity mode {mode!r}")


def tau_from_viscosity(nu: float, mode: str = "standard") -> float:
    if mode == "standard":
        return 0.5 + nu / CS2
    if mode == "literal":
        return 0.5 + nu * CS2
    raise ValueError(f"unknown viscosity mode {mode!r}")


def fit_tau_from_decay(amplitudes: Sequence[float], k: float = 1.0, dt: float = 1.0,
                       mode: str = "standard") -> tuple[float, float]:
    """Fit ``A(t) = A0 exp(-2 nu k^2 t)`` by least squares on ``log A``.

    ``k`` is the wavenumber of the decaying mode in lattice units (``2 pi / L``
    for one period across the box); ``k = 1`` treats the time axis as already
    scaled.  Returns ``(nu, tau)``.
    """
    a = np.asarray(amplitudes, dtype=float)
    if a.size < 10:
        raise ValueError("need at least 10 samples to fit a decay")
    if np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise ValueError("decay amplitudes must be positive and finite")
    t = np.arange(a.size) * dt
    slope = np.polyfit(t, np.log(a), 1)[0]
    nu = -slope / (2.0 * k * k)
    return nu, tau_from_viscosity(nu, mode)


def fit_gamma(C: Sequence[float], tau: Sequence[float],
              rate_factor: float = UNORDERED_RATE_FACTOR) -> float:
    """Fit ``gamma`` in ``tau = 1 / (1 - exp(-rate_factor * C * gamma))`` to samples.

    The model cannot go below ``tau = 1``; samples at or under it still enter the
    residual but not the starting guess.
    """
    C = np.asarray(C, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if C.size == 0:
        raise ValueError("no samples to fit")

    def resid(p):
        return 1.0 / -np.expm1(-rate_factor * C * p[0]) - tau

    above = tau > 1.0
    if above.any():
        x0 = float(np.median(-np.log1p(-1.0 / tau[above]) / (rate_factor * C[above])))
    else:
        x0 = 10.0 / (rate_factor * C.min())
    x0 = max(1e-3, x0)
    return float(least_squares(resid, [x0], bounds=(1e-9, np.inf)).x[0])


def fit_pi0(exponents: Sequence[float], tau: Sequence[float]) -> float:
    """Fit the initial moment deviation of :func:`tau_full` to ``(C * gamma, tau)`` samples."""
    g = np.asarray(exponents, dtype=float)
    tau = np.asarray(tau, dtype=float)
    eg = np.exp(g)
    b = eg - 1.0 / (2.0 * math.sqrt(6.0))
    # 1/(tau+1) = pi0 * b + eg  is linear in pi0
    return float(np.dot(b, 1.0 / (tau + 1.0) - eg) / np.dot(b, b))


@dataclass
class CalibrationCurve:
    samples: list[tuple[float, float]]
    gamma: float | None = None
    pi0: float | None = None
    model: str = "approx"
    rate_factor: float = UNORDERED_RATE_FACTOR
    flagged: list[float] = field(default_factory=list)

    def __post_init__(self):
        cs = [c for c, _ in self.samples]
        if any(c <= 0 for c in cs) or any(b <= a for a, b in zip(cs, cs[1:])):
            raise ValueError("C samples must be positive and strictly increasing")
        if any(t <= 0.5 for _, t in self.samples):
            raise ValueError("measured tau must exceed 0.5")

    @classmethod
    def fit(cls, samples, rate_factor: float = UNORDERED_RATE_FACTOR, flagged=()):
        samples = [(float(c), float(t)) for c, t in samples]
        C = [c for c, _ in samples]
        tau = [t for _, t in samples]
        gamma = fit_gamma(C, tau, rate_factor) if samples else None
        pi0 = fit_pi0([rate_factor * c * gamma for c in C], tau) if samples else None
        return cls(samples, gamma=gamma, pi0=pi0, model="approx",
                   rate_factor=rate_factor, flagged=list(flagged))

    def predict(self, C: float) -> tuple[float, float | None]:
        g = self.rate_factor * C * self.gamma
        try:
            full = tau_full(g, self.pi0)
        except ValueError:
            full = None
        return tau_approx(C, self.rate_factor * self.gamma), full

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["C", "tau_measured", "tau_approx", "tau_full"])
            for c, t in self.samples:
                ta, tf = self.predict(c)
                w.writerow([c, t, ta, "" if tf is None else tf])
        return path
