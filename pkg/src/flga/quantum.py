"""Statevector emulation of the one-step quantum FLGA algorithm for D1Q3.

Register layout, most significant qubit first::

    lattice (n_l qubits) | c1 (2) | c2 (2) | c3 (2) | ancilla (1)

Channel codes are ``00`` rest, ``01`` right, ``10`` left; in each channel
register the first qubit is the high bit.  ``c1`` and ``c2`` hold two copies of
the site distribution, ``c3`` is a copy of ``c1`` that carries the collided
channel, and the ancilla flags the input pair selected by a collision box.

The two-body D1Q3 collision with scale ``C`` and rate ``lam`` becomes:

* box B: ``c1 = c2 = rest`` moves ``c3`` out of rest with probability
  ``C lam / 8``, split evenly between right and left;
* boxes C1, C2: ``(c1, c2) = (right, left)`` or ``(left, right)`` moves ``c3``
  to rest with probability ``C lam``.

Measuring ``(l, c3)`` after the conditional shift gives the streamed FLGA
update, so the split probability ``p = C lam / 2`` must not exceed one half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import _boundaries_f
from .lattice import ModelId, build_descriptor
from .state import FieldState

REST, RIGHT, LEFT = 0, 1, 2
CODES = {REST: (0, 0), RIGHT: (0, 1), LEFT: (1, 0)}
NORM_TOL = 1e-12


@dataclass(frozen=True)
class RegisterLayout:
    L: int

    def __post_init__(self):
        if self.L < 1 or self.L & (self.L - 1):
            raise ValueError(f"lattice size must be a power of two, got {self.L}")

    @property
    def n_l(self) -> int:
        return self.L.bit_length() - 1

    @property
    def n_qubits(self) -> int:
        return self.n_l + 7

    @property
    def c1(self) -> tuple[int, int]:
        return (self.n_l, self.n_l + 1)

    @property
    def c2(self) -> tuple[int, int]:
        return (self.n_l + 2, self.n_l + 3)

    @property
    def c3(self) -> tuple[int, int]:
        return (self.n_l + 4, self.n_l + 5)

    @property
    def ancilla(self) -> int:
        return self.n_l + 6

    @property
    def shape(self) -> tuple[int, ...]:
        # lattice index, then c1, c2, c3 as 4-level registers, then the ancilla
        return (self.L, 4, 4, 4, 2)


@dataclass(frozen=True)
class Gate:
    """Single-qubit gate on ``target`` with ``controls`` as (qubit, required bit) pairs."""

    name: str
    target: int
    controls: tuple[tuple[int, int], ...] = ()
    angle: float = 0.0

    def matrix(self) -> np.ndarray:
        if self.name == "X":
            return np.array([[0.0, 1.0], [1.0, 0.0]])
        if self.name == "H":
            return np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
        if self.name == "RY":
            c, s = math.cos(self.angle / 2), math.sin(self.angle / 2)
            return np.array([[c, -s], [s, c]])
        raise ValueError(f"unknown gate {self.name!r}")

    def describe(self) -> str:
        ctl = " ".join(f"{q}:{b}" for q, b in self.controls) or "-"
        return f"{self.name} target={self.target} controls={ctl} angle={self.angle!r}"


def angle_from_probability(p: float) -> float:
    """``RY`` angle that moves probability ``p`` into the rotated branch."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    return 2.0 * math.asin(math.sqrt(p))


def split_probability(lam: float, C: float) -> float:
    p = C * lam / 2.0
    if p < 0:
        raise ValueError("lam and C must be non-negative")
    if p > 0.5:
        raise ValueError(f"split probability C*lam/2 = {p:.4g} exceeds 1/2; the circuit cannot represent it")
    return p


def _ctrl(reg: tuple[int, int], code: int) -> tuple[tuple[int, int], ...]:
    hi, lo = CODES[code]
    return ((reg[0], hi), (reg[1], lo))


def _flag(lay, a_code, b_code):
    return Gate("X", lay.ancilla, _ctrl(lay.c1, a_code) + _ctrl(lay.c2, b_code))


def copy_gates(lay: RegisterLayout) -> list[Gate]:
    """Box A: CNOTs that copy ``c1`` into ``c3`` (which starts in ``|00>``)."""
    return [Gate("X", lay.c3[0], ((lay.c1[0], 1),)), Gate("X", lay.c3[1], ((lay.c1[1], 1),))]


def collision_circuit(lam: float, C: float, L: int = 1, include_copy: bool = True) -> list[Gate]:
    """Gate list of boxes A (copy), B (rest pair split) and C1/C2 (opposite pair merge)."""
    lay = RegisterLayout(L)
    p = split_probability(lam, C)
    a = ((lay.ancilla, 1),)
    hi, lo = lay.c3
    theta_b = angle_from_probability(p / 4.0)
    theta_c = angle_from_probability(2.0 * p)
    gates = copy_gates(lay) if include_copy else []
    # B: rest -> right with prob p/4, then right -> (right + left)/sqrt2
    gates += [
        _flag(lay, REST, REST),
        Gate("RY", lo, a, theta_b),
        Gate("H", hi, a + ((lo, 1),)),
        Gate("X", lo, a + ((hi, 1),)),
        _flag(lay, REST, REST),
    ]
    # C1: c3 = right -> rest;  C2: c3 = left -> rest
    gates += [_flag(lay, RIGHT, LEFT), Gate("RY", lo, a + ((hi, 0),), -theta_c), _flag(lay, RIGHT, LEFT)]
    gates += [_flag(lay, LEFT, RIGHT), Gate("RY", hi, a + ((lo, 0),), -theta_c), _flag(lay, LEFT, RIGHT)]
    return gates


def dump_circuit(gates: Sequence[Gate], path: str | Path) -> Path:
    path = Path(path)
    path.write_text("".join(g.describe() + "\n" for g in gates))
    return path


def apply_gate(psi: np.ndarray, gate: Gate, n_qubits: int, check: bool = True) -> np.ndarray:
    t = psi.reshape((2,) * n_qubits)
    idx: list = [slice(None)] * n_qubits
    for q, b in gate.controls:
        idx[q] = b
    sub_axes = [q for q in range(n_qubits) if not isinstance(idx[q], int)]
    tax = sub_axes.index(gate.target)
    out = t.copy()
    sub = t[tuple(idx)]
    out[tuple(idx)] = np.moveaxis(np.tensordot(gate.matrix(), sub, axes=(1, tax)), 0, tax)
    out = out.reshape(-1)
    if check:
        nrm = np.linalg.norm(out)
        if abs(nrm - np.linalg.norm(psi)) > NORM_TOL:
            raise FloatingPointError(f"gate {gate.describe()} broke normalisation ({nrm})")
    return out


def apply_circuit(psi: np.ndarray, gates: Sequence[Gate], n_qubits: int) -> np.ndarray:
    for g in gates:
        psi = apply_gate(psi, g, n_qubits)
    return psi


def _site_distribution(f: np.ndarray):
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or f.shape[0] != 3:
        raise ValueError("expected D1Q3 populations of shape (3, L)")
    if np.any(f < 0):
        raise ValueError("populations must be non-negative")
    total = f.sum()
    if not abs(total - 1.0) <= 1e-12:
        raise ValueError(f"populations must be globally normalised, sum is {total}")
    RegisterLayout(f.shape[1])
    rho = f.sum(axis=0)
    return f, rho


def prepare(f) -> np.ndarray:
    """Two copies of the site distribution on one lattice register, ``c3`` and ancilla zero.

    Amplitude of ``|l, c1, c2>`` is ``sqrt(f_c1(l) f_c2(l) / rho_l)``.
    """
    f = f.f if isinstance(f, FieldState) else f
    f, rho = _site_distribution(f)
    lay = RegisterLayout(f.shape[1])
    psi = np.zeros(lay.shape)
    inv = np.zeros_like(rho)
    np.divide(1.0, rho, out=inv, where=rho > 0)
    amp = np.sqrt(np.einsum("al,bl,l->lab", f, f, inv))
    codes = [REST, RIGHT, LEFT]
    for i, ci in enumerate(codes):
        for j, cj in enumerate(codes):
            psi[:, _code(ci), _code(cj), 0, 0] = amp[:, i, j]
    return psi.reshape(-1)


def _code(c: int) -> int:
    hi, lo = CODES[c]
    return 2 * hi + lo


def encode(f) -> np.ndarray:
    """Encoded state after box A: ``sqrt(f_c1 f_c2 / rho) |l>|c1>|c2>|c3 = c1>``."""
    arr = f.f if isinstance(f, FieldState) else np.asarray(f, dtype=float)
    lay = RegisterLayout(arr.shape[1])
    return apply_circuit(prepare(arr), copy_gates(lay), lay.n_qubits)


def propagate(psi: np.ndarray, L: int, method: str = "permutation") -> np.ndarray:
    """Shift the lattice register by the velocity of ``c3`` (cyclic)."""
    lay = RegisterLayout(L)
    t = psi.reshape(lay.shape).copy()
    for code, v in ((_code(RIGHT), 1), (_code(LEFT), -1)):
        block = t[:, :, :, code, :]
        if method == "permutation":
            t[:, :, :, code, :] = np.roll(block, v, axis=0)
        elif method == "qft":
            k = np.fft.fftfreq(L) * L
            phase = np.exp(-2j * np.pi * k * v / L).reshape(-1, 1, 1, 1)
            t[:, :, :, code, :] = np.fft.ifft(np.fft.fft(block, axis=0) * phase, axis=0).real
        else:
            raise ValueError(f"unknown propagation method {method!r}")
    return t.reshape(-1)


def marginals(psi: np.ndarray, L: int) -> np.ndarray:
    """Probabilities of ``(c3, l)``, shape ``(3, L)`` in channel order rest, right, left."""
    lay = RegisterLayout(L)
    p = (np.abs(psi.reshape(lay.shape)) ** 2).sum(axis=(1, 2, 4))
    return np.stack([p[:, _code(c)] for c in (REST, RIGHT, LEFT)])


def measure_step(psi: np.ndarray, L: int, mass: float = 1.0, shots: int | None = None,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Populations after measurement: exact marginals by default, or ``shots`` samples."""
    p = marginals(psi, L)
    total = p.sum()
    if total <= 0:
        raise ValueError("measured marginal has zero total probability")
    p = p / total
    if shots is not None:
        rng = rng or np.random.default_rng()
        p = rng.multinomial(shots, p.reshape(-1)).reshape(p.shape) / shots
    return mass * p


def dense_unitary(gates: Sequence[Gate], n_qubits: int) -> np.ndarray:
    dim = 1 << n_qubits
    U = np.empty((dim, dim))
    for col in range(dim):
        e = np.zeros(dim)
        e[col] = 1.0
        U[:, col] = apply_circuit(e, gates, n_qubits)
    return U


def qflga_step(state: FieldState, lam: float, C: float, *, shots: int | None = None,
               rng: np.random.Generator | None = None, propagation: str = "permutation") -> FieldState:
    """One quantum FLGA step: encode, collide, shift, measure, then fold wall content back.

    The state is normalised by its total mass before encoding and rescaled after
    measurement.  Populations that moved into wall sites are returned to the
    fluid site they came from in the opposite channel, as in the classical stepper.
    """
    if state.desc.model_id != ModelId.D1Q3:
        raise ValueError("the quantum emulator supports D1Q3 only")
    mass = state.mass()
    L = state.shape[0]
    lay = RegisterLayout(L)
    psi = prepare(state.f / mass)
    psi = apply_circuit(psi, collision_circuit(lam, C, L), lay.n_qubits)
    psi = propagate(psi, L, propagation)
    f = measure_step(psi, L, mass, shots, rng)
    f = _boundaries_f(f, state.flags, state.wall_velocity, build_descriptor(ModelId.D1Q3))
    out = state.with_f(f)
    out.time += 1
    return out
