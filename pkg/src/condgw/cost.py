"""Expected cost of searching a Galton-Watson tree down to level k.

Cost model: entering a node costs 1; inspecting a node below level k
costs K per child it has. Children are explored depth-first in random
order; a node at level k ends the search. A tree with no node at level k
is explored completely and then discarded for a fresh one, its cost kept.

With p = survival probabilities, the exact expectations satisfy

    E[k-1] = 1,  E[l] = 1 + (K + E[l+1]) * E[W_l | X_l = 0]
    D[k]   = 1,  D[l] = 1 + D[l+1] + K * E[W_l | X_l >= 1]
                      + E[l+1] * E[(W_l - X_l) / (1 + X_l) | X_l >= 1]
    C      = (1/p[0] - 1) * E[0] + D[0]

where E is the cost of exhausting a failing subtree, D the cost of
reaching level k inside a succeeding one, C the total with restarts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ImpossibleConditioningError, ImpossibleSearchError, NonTerminationError
from .offspring import (OffspringSchedule, expect_deadend_ratio, expect_w_given_x0,
                        expect_w_given_xge1)
from .survival import build_survival_table

MAX_RESTARTS = 10_000_000


@dataclass(frozen=True)
class CostTable:
    k: int
    K: float
    p: tuple[float, ...]
    D: tuple[float, ...]
    E: tuple[float, ...]
    C: float
    # levels whose E entry is never needed because p[l] = 1 there; stored as 0
    unused_E: tuple[int, ...] = ()


@dataclass(frozen=True)
class SearchOutcome:
    total_cost: float
    restarts: int
    nodes_visited: int


Moments = Callable[[int], tuple[float, float, float]]


def assemble_cost_table(k: int, K: float, p, moments: Moments) -> CostTable:
    """Run the E/D recursions given per-level conditional moments.

    ``moments(l)`` returns (E[W|X=0], E[W|X>=1], E[dead-end ratio|X>=1]);
    entries whose conditioning event is null may be None.
    """
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    if not p[0] > 0:
        raise ImpossibleSearchError(
            f"p_0k = {p[0]!r}: no tree reaches level {k}, the search cost is undefined")
    E = [0.0] * k
    D = [0.0] * (k + 1)
    unused = []
    D[k] = 1.0
    for l in range(k - 1, -1, -1):
        w_fail, w_ok, deadend = moments(l)
        if l == k - 1:
            E[l] = 1.0
        elif w_fail is None:
            unused.append(l)
        else:
            E[l] = math.fsum([1.0, (K + E[l + 1]) * w_fail])
        dead_cost = E[l + 1] * deadend if l + 1 < k else 0.0
        D[l] = math.fsum([1.0, D[l + 1], K * w_ok, dead_cost])
    C = D[0] if k == 0 else math.fsum([(1.0 / p[0] - 1.0) * E[0], D[0]])
    if not math.isfinite(C):
        raise ImpossibleSearchError(f"search cost overflows (p_0k = {p[0]!r})")
    return CostTable(k, float(K), tuple(p), tuple(D), tuple(E), C, tuple(sorted(unused)))


def build_cost_table(sched: OffspringSchedule, k: int, K: float) -> CostTable:
    """Exact costs for an arbitrary schedule, by summation over the joint laws."""
    table = build_survival_table(sched, k)
    p = table.p

    def moments(l):
        law = sched.law(l)
        try:
            w_fail = expect_w_given_x0(law, p[l + 1])
        except ImpossibleConditioningError:
            w_fail = None
        return w_fail, expect_w_given_xge1(law, p[l + 1]), expect_deadend_ratio(law, p[l + 1])

    return assemble_cost_table(k, K, p, moments)


class _OffspringStream:
    """Buffered offspring draws per level from a single generator."""

    def __init__(self, sched: OffspringSchedule, k: int, rng: np.random.Generator,
                 chunk: int = 4096):
        self.rng = rng
        self.chunk = chunk
        self.laws = [(np.asarray(sched.law(l).support), np.asarray(sched.law(l).probs))
                     for l in range(k)]
        self.buffers: list[list[int]] = [[] for _ in range(k)]

    def draw(self, level: int) -> int:
        buf = self.buffers[level]
        if not buf:
            support, probs = self.laws[level]
            buf.extend(self.rng.choice(support, size=self.chunk, p=probs).tolist())
            buf.reverse()
        return buf.pop()


def _search(stream: _OffspringStream, k: int, K: float, max_restarts: int) -> SearchOutcome:
    cost = 0.0
    nodes = 0
    for restart in range(max_restarts + 1):
        # remaining[d] = unexplored children of the node at depth d on the current path;
        # children are iid, so taking them in generation order is a uniformly random order
        remaining: list[int] = []
        while True:
            level = len(remaining)
            cost += 1.0
            nodes += 1
            if level == k:
                return SearchOutcome(cost, restart, nodes)
            w = stream.draw(level)
            cost += K * w
            remaining.append(w)
            while remaining and remaining[-1] == 0:
                remaining.pop()
            if not remaining:
                break
            remaining[-1] -= 1
    raise NonTerminationError(f"no tree reached level {k} within {max_restarts} restarts")


def _check_reachable(sched: OffspringSchedule, k: int) -> None:
    if k > 0 and build_survival_table(sched, k).p[0] == 0:
        raise NonTerminationError(f"p_0k = 0: no tree can reach level {k}, search never ends")


def simulate_search(sched: OffspringSchedule, k: int, K: float, seed, *,
                    max_restarts: int = MAX_RESTARTS) -> SearchOutcome:
    """One run of the searcher, with restarts, on lazily generated trees."""
    _check_reachable(sched, k)
    stream = _OffspringStream(sched, k, np.random.default_rng(seed), chunk=64)
    return _search(stream, k, K, max_restarts)


def monte_carlo_cost(sched: OffspringSchedule, k: int, K: float, reps: int, seed, *,
                     max_restarts: int = MAX_RESTARTS, records: list | None = None
                     ) -> tuple[float, float]:
    """Sample mean and standard error of the total search cost over ``reps`` runs.

    All runs draw from one generator seeded by ``seed``, each consuming a
    disjoint stretch of its stream. If ``records`` is a list, one
    SearchOutcome per run is appended to it.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    _check_reachable(sched, k)
    stream = _OffspringStream(sched, k, np.random.default_rng(seed))
    costs = np.empty(reps)
    for r in range(reps):
        outcome = _search(stream, k, K, max_restarts)
        costs[r] = outcome.total_cost
        if records is not None:
            records.append(outcome)
    mean = float(costs.mean())
    stderr = float(costs.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return mean, stderr
