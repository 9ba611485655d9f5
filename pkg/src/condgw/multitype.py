"""Conditioning on general recursive events through m node types.

A :class:`TypeSystem` fixes a base height ``k0``, a classifier of the
trees of height <= k0 into types 1..m, and for every larger height budget
l a partition of N^m: a tree of budget l is of type i when the vector
counting its children by type lies in the i-th set. Types are 1-based
throughout, matching how the examples are usually written down.

Given an offspring schedule, :func:`build_type_table` computes the type
probabilities per level, and :func:`sample_type` / :func:`log_q_type`
realise the law of a tree conditioned on its root type: the type counts
of the children are drawn from the multinomial split conditioned on the
target set and arranged uniformly over the child positions.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import trees
from .errors import DistributionError, ImpossibleConditioningError, InvalidSystemError, TreeError
from .offspring import (OffspringSchedule, compositions, multinomial_atoms,
                        multinomial_event_prob, multinomial_log_pmf)
from .trees import Tree, _DiscreteSampler

MAX_BASE_HEIGHT = 2
MAX_BASE_CHILDREN = 4

Counts = tuple[int, ...]


@dataclass(frozen=True)
class TypeSystem:
    name: str
    m: int
    k0: int
    base_classifier: Callable[[Tree], int]
    b_membership: Callable[[int, int, Counts], bool]

    def __post_init__(self):
        if self.m < 2:
            raise InvalidSystemError(f"a type system needs m >= 2 types, got {self.m}")
        if self.k0 < 0:
            raise InvalidSystemError(f"k0 must be >= 0, got {self.k0}")

    def type_of_counts(self, budget: int, counts: Counts) -> int:
        hits = [i for i in range(1, self.m + 1) if self.b_membership(budget, i, counts)]
        if len(hits) != 1:
            raise InvalidSystemError(
                f"{self.name}: counting vector {counts} at height {budget} lies in sets {hits}")
        return hits[0]


@dataclass(frozen=True)
class TypeProbTable:
    """p[l][i-1] = P_{l,k}(tree is of type i), for l = 0..k-k0."""

    k: int
    p: tuple[tuple[float, ...], ...]
    system: TypeSystem
    sched: OffspringSchedule
    base_atoms: tuple[tuple[tuple[Tree, float], ...], ...] = field(repr=False, compare=False)
    count_atoms: dict = field(repr=False, compare=False)

    @property
    def base_level(self) -> int:
        return self.k - self.system.k0

    def prob(self, level: int, i: int) -> float:
        return self.p[level][i - 1]


def classify(system: TypeSystem, t: Tree, budget: int) -> int:
    """Type of ``t`` viewed as a tree of height budget ``budget`` >= k0."""
    if budget < system.k0:
        raise TreeError(f"cannot classify below the base height {system.k0}")
    if trees.height(t) > budget:
        raise TreeError(f"tree of height {trees.height(t)} does not fit budget {budget}")

    def combine(node, b, acc):
        if acc is None:
            return _base_type(system, node)
        return system.type_of_counts(b, _counts(system.m, acc))

    return trees.fold(t, combine, budget, stop_at=system.k0)


def _base_type(system: TypeSystem, t: Tree) -> int:
    i = system.base_classifier(t)
    if not 1 <= i <= system.m:
        raise InvalidSystemError(f"{system.name}: base classifier returned type {i!r}")
    return i


def _counts(m: int, child_types) -> Counts:
    tally = Counter(child_types)
    return tuple(tally.get(i, 0) for i in range(1, m + 1))


def counting_vector(system: TypeSystem, t: Tree, budget: int) -> Counts:
    """Children of ``t`` counted by their type at budget - 1."""
    if budget <= system.k0:
        raise TreeError(f"counting vectors are defined above the base height {system.k0}")
    return _counts(system.m, [classify(system, child, budget - 1) for child in t])


def multinomial_coeff(counts: Counts) -> float:
    """(sum N)! / prod N_i! as a float."""
    n = sum(counts)
    if any(c < 0 for c in counts):
        raise DistributionError(f"counts must be nonnegative, got {counts}")
    if n <= 170:
        value = math.factorial(n)
        for c in counts:
            value //= math.factorial(c)
        return float(value)
    return math.exp(math.lgamma(n + 1) - sum(math.lgamma(c + 1) for c in counts))


def validate_partition(system: TypeSystem, budget: int, max_total: int) -> None:
    """Every counting vector with sum <= max_total lies in exactly one set."""
    for n in range(max_total + 1):
        for counts in compositions(n, system.m):
            system.type_of_counts(budget, counts)


def build_type_table(system: TypeSystem, sched: OffspringSchedule, k: int, *,
                     max_base_height: int = MAX_BASE_HEIGHT,
                     max_base_children: int = MAX_BASE_CHILDREN) -> TypeProbTable:
    k0, m = system.k0, system.m
    if k <= k0:
        raise TreeError(f"need k > k0 = {k0}, got k = {k}")
    if sched.depth < k:
        raise DistributionError(f"schedule covers {sched.depth} levels, need {k}")
    base = k - k0
    # base row: exact enumeration of trees of height <= k0 hanging from level k - k0
    b = sched.max_value(range(base, k))
    if k0 > max_base_height or b > max_base_children:
        raise InvalidSystemError(
            f"base enumeration needs height <= {k0} with up to {b} children; "
            f"limits are {max_base_height} and {max_base_children}")
    per_type: list[list[tuple[Tree, float]]] = [[] for _ in range(m)]
    for t in trees.enumerate_trees(k0, b, max_height=max_base_height,
                                   max_branching=max_base_children):
        q = math.exp(trees.log_prob(t, sched, base, k))
        if q > 0:
            per_type[_base_type(system, t) - 1].append((t, q))
    rows = [None] * (base + 1)
    rows[base] = _row_from_masses([math.fsum(q for _, q in atoms) for atoms in per_type])

    count_atoms = {}
    for l in range(base - 1, -1, -1):
        budget = k - l
        law = sched.law(l)
        validate_partition(system, budget, law.max_value)
        grouped: list[list[tuple[Counts, float]]] = [[] for _ in range(m)]
        for counts, q in multinomial_atoms(law, rows[l + 1]):
            grouped[system.type_of_counts(budget, counts) - 1].append((counts, q))
        masses = [math.fsum(q for _, q in atoms) for atoms in grouped]
        rows[l] = _row_from_masses(masses)
        for i, atoms in enumerate(grouped, start=1):
            if masses[i - 1] > 0:
                count_atoms[(l, i)] = tuple((c, q / masses[i - 1]) for c, q in atoms)
    base_atoms = tuple(tuple(atoms) for atoms in per_type)
    return TypeProbTable(k, tuple(rows), system, sched, base_atoms, count_atoms)


def _row_from_masses(masses: list[float]) -> tuple[float, ...]:
    total = math.fsum(masses)
    return tuple(q / total for q in masses)


def _require_type(table: TypeProbTable, level: int, i: int) -> None:
    if not 0 <= level <= table.base_level:
        raise TreeError(f"level {level} outside 0..{table.base_level}")
    if not 1 <= i <= table.system.m:
        raise TreeError(f"type {i} outside 1..{table.system.m}")
    if table.prob(level, i) == 0:
        raise ImpossibleConditioningError(
            f"type {i} has probability 0 at level {level}")


def sample_type(table: TypeProbTable, level: int, i: int, seed) -> Tree:
    """Draw from the law of a level-``level`` subtree conditioned to be of type ``i``.

    Stream discipline: depth-first pre-order; per internal node one uniform
    for the counting vector and one permutation for the arrangement.
    """
    _require_type(table, level, i)
    rng = np.random.default_rng(seed)
    base = table.base_level
    base_samplers = {}
    count_samplers = {}

    def expand(desc):
        lvl, typ = desc
        if lvl == base:
            sampler = base_samplers.get(typ)
            if sampler is None:
                atoms = table.base_atoms[typ - 1]
                sampler = base_samplers[typ] = _DiscreteSampler([t for t, _ in atoms],
                                                                [q for _, q in atoms])
            return [("fixed", t) for t in sampler.draw(rng)]
        if lvl == "fixed":
            return [("fixed", t) for t in typ]
        sampler = count_samplers.get((lvl, typ))
        if sampler is None:
            atoms = table.count_atoms[(lvl, typ)]
            sampler = count_samplers[(lvl, typ)] = _DiscreteSampler([c for c, _ in atoms],
                                                                    [q for _, q in atoms])
        counts = sampler.draw(rng)
        labels = np.repeat(np.arange(1, table.system.m + 1), counts)
        return [(lvl + 1, int(j)) for j in rng.permutation(labels)]

    return trees.grow((level, i), expand)


def _typed_log_mass(table: TypeProbTable, level: int, t: Tree) -> tuple[int, float]:
    system, k = table.system, table.k
    budget = k - level
    if trees.height(t) > budget:
        raise TreeError(f"tree of height {trees.height(t)} does not fit budget {budget}")
    base = table.base_level

    def combine(node, b, acc):
        if acc is None:
            typ = _base_type(system, node)
            q = table.prob(base, typ)
            if q == 0:
                return typ, -math.inf
            return typ, trees.log_prob(node, table.sched, base, k) - math.log(q)
        l = k - b
        counts = _counts(system.m, [typ for typ, _ in acc])
        typ = system.type_of_counts(b, counts)
        q_type = table.prob(l, typ)
        if q_type == 0:
            return typ, -math.inf
        w = table.sched.law(l)(sum(counts))
        if w == 0:
            return typ, -math.inf
        # P(X = N | X in B_i) / D(N)
        cond = math.log(w) + multinomial_log_pmf(counts, table.p[l + 1]) - math.log(q_type)
        value = cond - math.log(multinomial_coeff(counts)) + math.fsum(v for _, v in acc)
        return typ, value

    return trees.fold(t, combine, budget, stop_at=system.k0)


def log_q_type(table: TypeProbTable, level: int, i: int, t: Tree) -> float:
    _require_type(table, level, i)
    typ, value = _typed_log_mass(table, level, t)
    return value if typ == i else -math.inf


def log_p_mixture(table: TypeProbTable, level: int, t: Tree) -> float:
    """log of sum_i p[level][i] * Q^(i)(t); only the tree's own type contributes."""
    typ, value = _typed_log_mass(table, level, t)
    q = table.prob(level, typ)
    if q == 0 or value == -math.inf:
        return -math.inf
    return math.log(q) + value


def equivalence_stats(system: TypeSystem, sched: OffspringSchedule, k: int,
                      max_children: int, **enum_caps) -> tuple[float, float]:
    """(total variation, max pointwise gap) between P_0k and the m-type construction."""
    if sched.max_value(range(k)) > max_children:
        raise DistributionError(
            f"offspring support exceeds max_children={max_children}; enumeration would be partial")
    table = build_type_table(system, sched, k)
    space = trees.enumerate_trees(k, max_children, **enum_caps)
    exact = [math.exp(trees.log_prob(t, sched, 0, k)) for t in space]
    built = [math.exp(log_p_mixture(table, 0, t)) for t in space]
    return trees.total_variation(exact, built), max(abs(a - b) for a, b in zip(exact, built))


def check_equivalence_multitype(system: TypeSystem, sched: OffspringSchedule, k: int,
                                max_children: int, **enum_caps) -> float:
    """Total-variation distance between P_0k and the m-type construction, by enumeration."""
    return equivalence_stats(system, sched, k, max_children, **enum_caps)[0]


# ---------------------------------------------------------------- built-in systems

def _n_children(t: Tree) -> int:
    return len(t)


def _n_grandchildren(t: Tree) -> int:
    return sum(len(child) for child in t)


def survival_system() -> TypeSystem:
    """Two types: 1 = subtree reaches the bottom level, 2 = it does not."""
    return TypeSystem(
        name="survival", m=2, k0=1,
        base_classifier=lambda t: 1 if t else 2,
        b_membership=lambda l, i, n: (n[0] >= 1) == (i == 1),
    )


def binary_subtree_system() -> TypeSystem:
    """Type 1 = contains a full binary subtree reaching the bottom level."""
    return TypeSystem(
        name="binary-subtree", m=2, k0=1,
        base_classifier=lambda t: 1 if _n_children(t) >= 2 else 2,
        b_membership=lambda l, i, n: (n[0] >= 2) == (i == 1),
    )


def _grandchildren_base(t: Tree) -> int:
    if _n_grandchildren(t) <= 1:
        return 3
    return 1 if _n_children(t) == 1 else 2


def _grandchildren_sets(l: int, i: int, n: Counts) -> bool:
    if n == (0, 1, 0):
        return i == 1
    if n[0] + n[1] >= 2:
        return i == 2
    return i == 3


def grandchildren_system() -> TypeSystem:
    """Types 1 and 2 = every node on the typed skeleton has >= 2 grandchildren."""
    return TypeSystem(name="grandchildren", m=3, k0=2,
                      base_classifier=_grandchildren_base, b_membership=_grandchildren_sets)


def _height_band_base(t: Tree) -> int:
    h = trees.height(t)
    return {1: 1, 0: 2, 2: 3}[h]


def _height_band_sets(l: int, i: int, n: Counts) -> bool:
    if n[2] >= 1:
        return i == 3
    return i == (1 if n[0] >= 1 else 2)


def height_band_system() -> TypeSystem:
    """Type 1 = reaches one level above the bottom but not the bottom; 2 = shorter; 3 = full."""
    return TypeSystem(name="height-band", m=3, k0=2,
                      base_classifier=_height_band_base, b_membership=_height_band_sets)


BUILTIN_SYSTEMS = {
    "survival": survival_system,
    "binary-subtree": binary_subtree_system,
    "grandchildren": grandchildren_system,
    "height-band": height_band_system,
}


def get_system(name: str) -> TypeSystem:
    try:
        return BUILTIN_SYSTEMS[name]()
    except KeyError:
        raise InvalidSystemError(
            f"unknown system {name!r}; choose from {sorted(BUILTIN_SYSTEMS)}") from None
