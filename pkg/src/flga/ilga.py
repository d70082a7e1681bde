"""Integer lattice gas collisions by Monte Carlo, used as an oracle for the FLGA increment.

A site holds integer counts ``n_i``.  One collision attempt draws an ordered
pair of particles (the second from the ``N - 1`` particles left after the
first) and then picks at most one outcome of that pair from the table.  The
probability of outcome ``M`` for an ordered draw of input ``J`` is the table
coefficient divided by the number of distinct orderings of ``J``, so that the
mean count change of one attempt tends to ``collision_increment(n) / N`` as
``N`` grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import CollisionTable


def select_channel(counts, r: int) -> int:
    """Channel ``s`` with ``sum(n[:s]) < r <= sum(n[:s+1])`` for ``r`` in ``1..N``."""
    cum = np.cumsum(np.asarray(counts, dtype=np.int64))
    if not 1 <= r <= cum[-1]:
        raise ValueError(f"r must lie in 1..{int(cum[-1])}, got {r}")
    return int(np.searchsorted(cum, r, side="left"))


def sample_pair(counts, rng: np.random.Generator) -> tuple[int, int]:
    """Draw two distinct particles; the second draw excludes the first particle."""
    n = np.asarray(counts, dtype=np.int64)
    if np.any(n < 0):
        raise ValueError("counts must be non-negative")
    N = int(n.sum())
    if N < 2:
        raise ValueError("need at least two particles to collide")
    s1 = select_channel(n, int(rng.integers(1, N + 1)))
    rest = n.copy()
    rest[s1] -= 1
    s2 = select_channel(rest, int(rng.integers(1, N)))
    return s1, s2


@dataclass(frozen=True)
class PairRules:
    """Outcome probabilities per ordered input pair.

    ``prob[a, b, m]`` is the chance that the ordered draw ``(a, b)`` turns into
    outcome ``m``; ``delta[a, b, m]`` is the resulting count change.
    """

    prob: np.ndarray
    delta: np.ndarray

    @property
    def Q(self) -> int:
        return self.prob.shape[0]


def pair_rules(table: CollisionTable) -> PairRules:
    if table.k != 2:
        raise ValueError("the Monte Carlo oracle handles two-body tables only")
    Q = table.desc.Q
    rows = table.input_rows()
    width = max((len(v) for v in rows.values()), default=0)
    prob = np.zeros((Q, Q, max(width, 1)))
    delta = np.zeros((Q, Q, max(width, 1), Q), dtype=np.int64)
    for J, outs in rows.items():
        a, b = J
        orderings = 1 if a == b else 2
        total = sum(c for _, c in outs) / orderings
        if total > 1.0 + 1e-12:
            raise ValueError(f"outcome probabilities of input {J} sum to {total:.4g} > 1; lower C")
        for m, (M, c) in enumerate(outs):
            d = np.zeros(Q, dtype=np.int64)
            np.add.at(d, list(M), 1)
            np.add.at(d, list(J), -1)
            for s1, s2 in {(a, b), (b, a)}:
                prob[s1, s2, m] = c / orderings
                delta[s1, s2, m] = d
    return PairRules(prob, delta)


def mc_collide(counts, table: CollisionTable | PairRules, C_int: int,
               rng: np.random.Generator) -> np.ndarray:
    """Apply ``C_int`` sequential collision attempts to one site's counts."""
    if C_int < 0:
        raise ValueError("C_int must be non-negative")
    rules = table if isinstance(table, PairRules) else pair_rules(table)
    n = np.array(counts, dtype=np.int64)
    if n.shape != (rules.Q,):
        raise ValueError(f"expected {rules.Q} channel counts")
    for _ in range(C_int):
        if n.sum() < 2:
            break
        s1, s2 = sample_pair(n, rng)
        p = rules.prob[s1, s2]
        r = rng.random()
        m = int(np.searchsorted(np.cumsum(p), r, side="right"))
        if m < p.size:
            n += rules.delta[s1, s2, m]
    return n


def ensemble_increment(counts, table: CollisionTable | PairRules, trials: int,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of the count change of one collision attempt.

    Trials are independent single attempts from the same ``counts``, drawn in
    one vectorised batch with the same two-step pair rule as :func:`sample_pair`.
    """
    rules = table if isinstance(table, PairRules) else pair_rules(table)
    n = np.asarray(counts, dtype=np.int64)
    N = int(n.sum())
    if N < 2:
        raise ValueError("need at least two particles to collide")
    Q = rules.Q
    s1 = np.searchsorted(np.cumsum(n), rng.integers(1, N + 1, size=trials), side="left")
    # cumulative counts with one particle removed from each possible first channel
    cum2 = np.cumsum(n[None, :] - np.eye(Q, dtype=np.int64), axis=1)
    r2 = rng.integers(1, N, size=trials)
    s2 = (cum2[s1] < r2[:, None]).sum(axis=1)
    cp = np.cumsum(rules.prob, axis=2)[s1, s2]
    m = (cp <= rng.random(trials)[:, None]).sum(axis=1)
    hit = m < cp.shape[1]
    d = np.zeros((trials, Q))
    d[hit] = rules.delta[s1[hit], s2[hit], m[hit]]
    return d.mean(axis=0), d.std(axis=0, ddof=1) / np.sqrt(trials)


def expected_increment(counts, table: CollisionTable | PairRules) -> np.ndarray:
    """Exact mean count change of one attempt at finite ``N`` (no sampling)."""
    rules = table if isinstance(table, PairRules) else pair_rules(table)
    n = np.asarray(counts, dtype=float)
    N = n.sum()
    first = n / N
    second = (n[None, :] - np.eye(rules.Q)) / (N - 1)
    pair = first[:, None] * second
    return np.einsum("ab,abm,abmq->q", pair, rules.prob, rules.delta.astype(float))
