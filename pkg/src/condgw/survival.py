"""Galton-Watson trees conditioned to reach (or not reach) level k.

A node at level l is of type 1 when its subtree reaches level k and of
type 2 otherwise. Conditioned on its own type, a node's children follow a
level-dependent two-type Galton-Watson law:

* type 1: (W, X) ~ (W, X) | X >= 1, the X type-1 children placed at a
  uniformly random subset of the W positions;
* type 2: W ~ W | X = 0, all children type 2.

Mixing the two with weight p_lk recovers the unconditioned law exactly;
:func:`check_equivalence` verifies that by enumeration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import trees
from .errors import DistributionError, ImpossibleConditioningError, TreeError
from .offspring import (JointWX, OffspringSchedule, Pmf, joint_wx, law_w_given_x0,
                        law_wx_given_xge1, survival_fraction)
from .trees import LEAF, Tree, _DiscreteSampler

# coin tosses treat survival probabilities this close to 0 or 1 as exact
COIN_CLAMP = 1e-15


@dataclass(frozen=True)
class LevelLaws:
    """Conditioned offspring laws at one level; None where the condition is null."""

    joint: JointWX
    given_survive: JointWX | None
    given_extinct: Pmf | None


@dataclass(frozen=True)
class SurvivalTable:
    """Survival probabilities p[l] = P(subtree rooted at level l reaches level k)."""

    k: int
    p: tuple[float, ...]
    sched: OffspringSchedule
    levels: tuple[LevelLaws, ...] = field(repr=False, compare=False)

    def laws(self, level: int) -> LevelLaws:
        return self.levels[level]


def build_survival_table(sched: OffspringSchedule, k: int) -> SurvivalTable:
    if k < 0:
        raise TreeError(f"k must be >= 0, got {k}")
    if sched.depth < k:
        raise DistributionError(f"schedule covers {sched.depth} levels, need {k}")
    p = [0.0] * (k + 1)
    p[k] = 1.0
    for l in range(k - 1, -1, -1):
        p[l] = math.fsum(q * survival_fraction(n, p[l + 1]) for n, q in sched.law(l).items())
    levels = []
    for l in range(k):
        joint = joint_wx(sched.law(l), p[l + 1])
        survive = law_wx_given_xge1(joint) if joint.prob_x_positive() > 0 else None
        extinct = law_w_given_x0(joint) if joint.prob_x_zero() > 0 else None
        levels.append(LevelLaws(joint, survive, extinct))
    return SurvivalTable(k, tuple(p), sched, tuple(levels))


def _require_survive(table: SurvivalTable, level: int) -> None:
    if not 0 <= level <= table.k:
        raise TreeError(f"level {level} outside 0..{table.k}")
    if level < table.k and table.laws(level).given_survive is None:
        raise ImpossibleConditioningError(
            f"p[{level}] = 0: no tree from level {level} reaches level {table.k}")


def _require_extinct(table: SurvivalTable, level: int) -> None:
    if level == table.k:
        raise TreeError("the extinct measure is undefined at level k")
    if not 0 <= level < table.k:
        raise TreeError(f"level {level} outside 0..{table.k - 1}")
    if table.laws(level).given_extinct is None:
        raise ImpossibleConditioningError(
            f"p[{level}] = 1: every tree from level {level} reaches level {table.k}")


class _Samplers:
    """Per-level inverse-CDF samplers built once per sampling call."""

    def __init__(self, table: SurvivalTable):
        self.survive = []
        self.extinct = []
        for laws in table.levels:
            s = laws.given_survive
            self.survive.append(_DiscreteSampler(list(s.entries), list(s.entries.values()))
                                if s is not None else None)
            e = laws.given_extinct
            self.extinct.append(_DiscreteSampler(e.support, e.probs) if e is not None else None)


def _grow_conditioned(table: SurvivalTable, level: int, survive: bool, rng) -> Tree:
    samplers = _Samplers(table)
    k = table.k

    def expand(desc):
        lvl, alive = desc
        if lvl == k:
            return ()
        if alive:
            n, m = samplers.survive[lvl].draw(rng)
            alive_at = set(rng.choice(n, size=m, replace=False).tolist()) if m < n else None
            return [(lvl + 1, alive_at is None or j in alive_at) for j in range(n)]
        n = samplers.extinct[lvl].draw(rng)
        return [(lvl + 1, False)] * n

    return trees.grow((level, survive), expand)


def sample_q(table: SurvivalTable, level: int, seed) -> Tree:
    """Draw a tree from level ``level`` conditioned to reach level k."""
    _require_survive(table, level)
    return _grow_conditioned(table, level, True, np.random.default_rng(seed))


def sample_r(table: SurvivalTable, level: int, seed) -> Tree:
    """Draw a tree from level ``level`` conditioned not to reach level k."""
    _require_extinct(table, level)
    return _grow_conditioned(table, level, False, np.random.default_rng(seed))


def sample_p(table: SurvivalTable, level: int, seed) -> Tree:
    """Coin toss with bias p[level], then a conditioned draw; same law as P_{level,k}."""
    rng = np.random.default_rng(seed)
    p = table.p[level]
    if p >= 1 - COIN_CLAMP:
        survive = True
    elif p <= COIN_CLAMP:
        survive = False
    else:
        survive = bool(rng.random() < p)
    if survive and level < table.k and table.laws(level).given_survive is None:
        survive = False
    elif not survive and (level == table.k or table.laws(level).given_extinct is None):
        survive = True
    return _grow_conditioned(table, level, survive, rng)


def _typed_log_mass(table: SurvivalTable, level: int, t: Tree) -> tuple[bool, float]:
    """(reaches level k, log mass under the measure for that type)."""
    k = table.k
    if trees.height(t) > k - level:
        raise TreeError(f"tree of height {trees.height(t)} does not fit budget {k - level}")

    def combine(node, b, acc):
        if b == 0:
            return True, 0.0
        laws = table.laws(k - b)
        n = len(acc)
        m = sum(1 for alive, _ in acc if alive)
        rest = math.fsum(v for _, v in acc)
        if m >= 1:
            cond = laws.given_survive
            q = cond.entry(n, m) if cond is not None else 0.0
            if q == 0.0:
                return True, -math.inf
            return True, math.log(q) - math.log(math.comb(n, m)) + rest
        law = laws.given_extinct
        q = law(n) if law is not None else 0.0
        return False, (math.log(q) + rest if q > 0 else -math.inf)

    return trees.fold(t, combine, k - level)


def log_q(table: SurvivalTable, level: int, t: Tree) -> float:
    _require_survive(table, level)
    alive, value = _typed_log_mass(table, level, t)
    return value if alive else -math.inf


def log_r(table: SurvivalTable, level: int, t: Tree) -> float:
    _require_extinct(table, level)
    alive, value = _typed_log_mass(table, level, t)
    return -math.inf if alive else value


def log_p_tilde(table: SurvivalTable, level: int, t: Tree) -> float:
    """log of p[l] * Q(t) + (1 - p[l]) * R(t); only one term is nonzero."""
    alive, value = _typed_log_mass(table, level, t)
    weight = table.p[level] if alive else 1.0 - table.p[level]
    if weight <= 0 or value == -math.inf:
        return -math.inf
    return math.log(weight) + value


def equivalence_stats(sched: OffspringSchedule, k: int, max_children: int,
                      table: SurvivalTable | None = None, **enum_caps) -> tuple[float, float]:
    """(total variation, max pointwise gap) between P_0k and the two-type construction.

    Computed exactly over every tree of height <= k with at most
    ``max_children`` children per node. ``table`` overrides the survival
    table, which is how corrupted tables are injected as negative controls.
    """
    if sched.max_value(range(k)) > max_children:
        raise DistributionError(
            f"offspring support exceeds max_children={max_children}; enumeration would be partial")
    table = table if table is not None else build_survival_table(sched, k)
    space = trees.enumerate_trees(k, max_children, **enum_caps)
    exact = [math.exp(trees.log_prob(t, sched, 0, k)) for t in space]
    built = [math.exp(log_p_tilde(table, 0, t)) for t in space]
    return trees.total_variation(exact, built), max(abs(a - b) for a, b in zip(exact, built))


def check_equivalence(sched: OffspringSchedule, k: int, max_children: int,
                      table: SurvivalTable | None = None, **enum_caps) -> float:
    """Total-variation distance between P_0k and the two-type construction."""
    return equivalence_stats(sched, k, max_children, table, **enum_caps)[0]
