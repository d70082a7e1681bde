"""
Lattice descriptors, k-body equivalence classes and FLGA collision tables.

Channel numbering (D2Q9)::

    6   2   5
      \\ | /
    3 - 0 - 1
      / | \\
    7   4   8

D1Q3 uses 0 = rest, 1 = right, 2 = left.

A collision term maps an unordered input multiset J of k channels to an
unordered output multiset M with the same mass and momentum.  Multisets are
stored in canonical form (sorted channel tuples).  Inputs and outputs never
share a channel: a shared channel is a spectator and the term is really a
lower-order collision.
"""

from __future__ import annotations

import csv
import enum
import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "ModelId",
    "LatticeDescriptor",
    "EquivalenceClass",
    "CollisionTable",
    "build_descriptor",
    "enumerate_equivalence_classes",
    "build_collision_table",
    "make_table",
    "dump_table_csv",
    "class_summary",
    "PAPER_TERM_COUNTS",
]


class ModelId(str, enum.Enum):
    D1Q3 = "D1Q3"
    D2Q9 = "D2Q9"


# Counts reported for D2Q9: k -> (terms, distinct inputs).  The k=2 prose
# gives two different pair counts (22 and 33); both are listed.
PAPER_TERM_COUNTS = {
    2: {"terms": 60, "inputs": (33, 22)},
    3: {"terms": 156, "inputs": (77,)},
    4: {"terms": 6, "inputs": (6,)},
}


@dataclass(frozen=True)
class LatticeDescriptor:
    model_id: ModelId
    dimension: int
    velocities: np.ndarray  # (Q, dimension) integers
    weights_exact: tuple[Fraction, ...]
    opposite: np.ndarray  # (Q,)

    @property
    def Q(self) -> int:
        return len(self.weights_exact)

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights_exact])

    def symmetries(self) -> list[np.ndarray]:
        """Channel permutations induced by the point group of the lattice."""
        vel = [tuple(int(c) for c in v) for v in self.velocities]
        index = {v: i for i, v in enumerate(vel)}
        if self.dimension == 1:
            mats = [((1,),), ((-1,),)]
        else:
            mats = [
                ((1, 0), (0, 1)), ((0, -1), (1, 0)), ((-1, 0), (0, -1)), ((0, 1), (-1, 0)),
                ((1, 0), (0, -1)), ((-1, 0), (0, 1)), ((0, 1), (1, 0)), ((0, -1), (-1, 0)),
            ]
        perms = []
        for m in mats:
            a = np.array(m)
            perms.append(np.array([index[tuple(int(c) for c in a @ np.array(v))] for v in vel]))
        return perms


def build_descriptor(model_id: ModelId | str) -> LatticeDescriptor:
    model_id = ModelId(model_id)
    w1 = (Fraction(2, 3), Fraction(1, 6), Fraction(1, 6))
    if model_id is ModelId.D1Q3:
        return LatticeDescriptor(
            model_id=model_id,
            dimension=1,
            velocities=np.array([[0], [1], [-1]]),
            weights_exact=w1,
            opposite=np.array([0, 2, 1]),
        )
    vel = np.array([[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1],
                    [1, 1], [-1, 1], [-1, -1], [1, -1]])
    # tensor product of the 1D weight set, indexed by each component's D1Q3 channel
    one_d = {0: w1[0], 1: w1[1], -1: w1[2]}
    weights = tuple(one_d[int(vx)] * one_d[int(vy)] for vx, vy in vel)
    return LatticeDescriptor(
        model_id=model_id,
        dimension=2,
        velocities=vel,
        weights_exact=weights,
        opposite=np.array([0, 3, 4, 1, 2, 7, 8, 5, 6]),
    )


@dataclass(frozen=True)
class EquivalenceClass:
    k: int
    members: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    class_index: int

    @property
    def representative(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.members[0]


def _momentum(desc: LatticeDescriptor, J: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(c) for c in desc.velocities[list(J)].sum(axis=0))


def _canon(ms: Sequence[int]) -> tuple[int, ...]:
    return tuple(sorted(int(m) for m in ms))


def _pair_key(J, M):
    return (J, M) if J <= M else (M, J)


def _shear_weight(desc: LatticeDescriptor, J, M) -> float:
    """Linear response of the xy shear moment to one unit of flux J<->M at rest equilibrium."""
    w = desc.weights
    v = desc.velocities
    vxvy = v[:, 0] * v[:, 1]
    pert = w * vxvy * 3.0
    rate = 0.0
    for a, b in ((J, M), (M, J)):
        wa, wb = np.prod(w[list(a)]), np.prod(w[list(b)])
        coeff = min(1.0, wb / wa)
        # d(prod f_a)/df along the perturbation, at f = w
        dprod = sum(np.prod(w[list(a)]) / w[j] * pert[j] for j in a)
        dmom = sum(vxvy[j] for j in b) - sum(vxvy[j] for j in a)
        rate += coeff * dprod * dmom
    return -rate / float((vxvy * pert).sum())


# Coefficients (x9) multiplying lambda_1..lambda_9 in the D2Q9 shear-rate
# formula gamma(lambda) = [8 l1 + l3 + 2 (l4 + l6 + 2 l7 + 4 l8)] / 9.
_GAMMA_D2Q9_COEFFS = (8, 0, 1, 2, 0, 2, 4, 8, 0)


def enumerate_equivalence_classes(
    desc: LatticeDescriptor, k: int, max_occupancy: int | None = None
) -> list[EquivalenceClass]:
    """Enumerate all mass- and momentum-conserving k-body collisions, grouped by symmetry.

    Every member is an unordered (input, output) pair listed once, with
    ``input < output`` in canonical order; the reverse collision belongs to
    the same member.  ``max_occupancy`` limits how many times one channel may
    appear on either side (``1`` reproduces a Boolean exclusion rule).

    Classes are ordered so that, for two-body D2Q9, class ``i`` carries the
    rate ``lambda_{i+1}`` of the shear-rate formula (see :func:`class_summary`).
    """
    if k not in (2, 3, 4):
        raise ValueError(f"unsupported collision order k={k}; expected 2, 3 or 4")
    multisets = [
        tuple(int(j) for j in J) for J in itertools.combinations_with_replacement(range(desc.Q), k)
        if max_occupancy is None or max(Counter(J).values()) <= max_occupancy
    ]
    by_momentum: dict[tuple[int, ...], list[tuple[int, ...]]] = defaultdict(list)
    for J in multisets:
        by_momentum[_momentum(desc, J)].append(J)

    transitions = set()
    for group in by_momentum.values():
        for J, M in itertools.combinations(group, 2):
            if set(J) & set(M):
                continue
            transitions.add(_pair_key(J, M))

    perms = desc.symmetries()
    orbits: list[list[tuple]] = []
    seen: set = set()
    for t in sorted(transitions):
        if t in seen:
            continue
        orbit = set()
        for p in perms:
            orbit.add(_pair_key(_canon(p[list(t[0])]), _canon(p[list(t[1])])))
        seen |= orbit
        orbits.append(sorted(orbit))

    if desc.model_id is ModelId.D2Q9 and k == 2 and max_occupancy is None:
        orbits = _order_like_gamma(desc, orbits)

    return [
        EquivalenceClass(k=k, members=tuple(o), class_index=i) for i, o in enumerate(orbits)
    ]


def _order_like_gamma(desc, orbits):
    """Assign the 9 two-body classes to lambda slots by matching shear responses.

    Each class's shear-moment response is proportional to its coefficient in
    the gamma formula; ties are broken by canonical order.
    """
    resp = [sum(_shear_weight(desc, J, M) for J, M in o) for o in orbits]
    scale = 2 * 9  # unordered terms relax the shear moment at half the formula rate
    slots: list[list[int]] = defaultdict(list)
    for slot, c in enumerate(_GAMMA_D2Q9_COEFFS):
        slots[c].append(slot)
    ordered = [None] * len(orbits)
    for idx, r in enumerate(resp):
        c = int(round(r * scale))
        if not slots.get(c):
            return orbits
        ordered[slots[c].pop(0)] = orbits[idx]
    return ordered


@dataclass(frozen=True)
class CollisionTable:
    """Flat collision table ready for a multiply-accumulate kernel.

    ``inputs`` lists each distinct input multiset once (shape ``(n_inputs, k)``);
    ``assembled[i, a]`` is the net gain of channel ``i`` per unit product of
    input ``a``, summed over all outputs of that input.
    """

    desc: LatticeDescriptor
    k: int
    lambdas: tuple[float, ...]
    C: float
    terms: tuple[tuple[int, tuple[int, ...], tuple[int, ...], float], ...]
    inputs: np.ndarray = field(repr=False)
    assembled: np.ndarray = field(repr=False)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def rate(self, J: Sequence[int], M: Sequence[int]) -> float:
        J, M = _canon(J), _canon(M)
        for _, a, b, c in self.terms:
            if a == J and b == M:
                return c
        return 0.0

    def input_rows(self) -> dict[tuple[int, ...], list[tuple[tuple[int, ...], float]]]:
        out: dict = defaultdict(list)
        for _, J, M, c in self.terms:
            out[J].append((M, c))
        return dict(out)


def build_collision_table(
    desc: LatticeDescriptor,
    classes: Sequence[EquivalenceClass],
    lambdas: float | Sequence[float],
    C: float = 1.0,
) -> CollisionTable:
    """Build the FLGA table: coefficient ``C * lambda_class * min(1, w_M / w_J)`` per direction."""
    if np.isscalar(lambdas):
        lambdas = [float(lambdas)] * len(classes)
    lambdas = tuple(float(x) for x in lambdas)
    if len(lambdas) != len(classes):
        raise ValueError(f"expected {len(classes)} lambda values, got {len(lambdas)}")
    if any(x < 0 for x in lambdas) or C < 0:
        raise ValueError("collision rates lambda and scale C must be non-negative")
    k = classes[0].k if classes else 2

    wx = desc.weights_exact
    terms = []
    for cls in classes:
        lam = lambdas[cls.class_index]
        for A, B in cls.members:
            wa = math.prod(wx[j] for j in A)
            wb = math.prod(wx[j] for j in B)
            terms.append((cls.class_index, A, B, C * lam * float(min(Fraction(1), wb / wa))))
            terms.append((cls.class_index, B, A, C * lam * float(min(Fraction(1), wa / wb))))
    terms.sort(key=lambda t: (t[1], t[2]))

    inputs = sorted({t[1] for t in terms})
    col = {J: a for a, J in enumerate(inputs)}
    assembled = np.zeros((desc.Q, len(inputs)))
    for _, J, M, c in terms:
        for j in J:
            assembled[j, col[J]] -= c
        for m in M:
            assembled[m, col[J]] += c
    return CollisionTable(
        desc=desc,
        k=k,
        lambdas=lambdas,
        C=float(C),
        terms=tuple(terms),
        inputs=np.array(inputs, dtype=np.intp).reshape(len(inputs), k),
        assembled=assembled,
    )


def make_table(model: ModelId | str, k: int, lambdas: float | Sequence[float] = 1.0,
               C: float = 1.0, max_occupancy: int | None = None) -> CollisionTable:
    """Convenience: descriptor + classes + table in one call."""
    desc = build_descriptor(model)
    classes = enumerate_equivalence_classes(desc, k, max_occupancy=max_occupancy)
    return build_collision_table(desc, classes, lambdas, C)


def dump_table_csv(table: CollisionTable, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class_index", "in_multiset", "out_multiset", "coefficient"])
        for cls, J, M, c in table.terms:
            w.writerow([cls, " ".join(map(str, J)), " ".join(map(str, M)), repr(c)])
    return path


def class_summary(desc: LatticeDescriptor, classes: Sequence[EquivalenceClass]) -> list[dict]:
    """Rows describing each class: index, representative collision, size, velocities."""
    rows = []
    for cls in classes:
        J, M = cls.representative
        rows.append({
            "class_index": cls.class_index,
            "lambda_slot": cls.class_index + 1,
            "members": len(cls.members),
            "representative_in": J,
            "representative_out": M,
            "in_velocities": [tuple(int(c) for c in desc.velocities[j]) for j in J],
            "out_velocities": [tuple(int(c) for c in desc.velocities[j]) for j in M],
        })
    return rows
