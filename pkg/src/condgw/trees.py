"""Finite rooted ordered trees, exhaustive enumeration and Galton-Watson masses.

A tree is a nested tuple: ``()`` is the single-node tree and
``(t1, ..., tn)`` is a root whose children are t1..tn in order. Tuples
make trees immutable, hashable and cheap to compare.

Everything that walks a tree goes through :func:`fold` or :func:`grow`,
which use explicit stacks so that trees of height ~10^3 do not hit the
interpreter recursion limit.

Levels vs budgets: a node at level ``l`` of a tree cut at height ``k`` has
height budget ``k - l``; its subtree lives in the space of trees of height
at most ``k - l``.
"""
from __future__ import annotations

import math
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import EnumerationSizeError, TreeError
from .offspring import OffspringSchedule

Tree = tuple
LEAF: Tree = ()

MAX_ENUM_HEIGHT = 4
MAX_ENUM_CHILDREN = 3
MAX_ENUM_COUNT = 1_000_000


def fold(t: Tree, combine: Callable[[Tree, int, list | None], Any], budget: int = 0,
         stop_at: int | None = None) -> Any:
    """Post-order reduction of ``t``.

    ``combine(node, budget, child_values)`` is called once per node, children
    first; the root gets ``budget`` and each child one less. When the budget
    reaches ``stop_at`` the node is not descended into and ``child_values``
    is None.
    """
    if budget == stop_at:
        return combine(t, budget, None)
    stack: list[tuple[Tree, int, list]] = [(t, budget, [])]
    while True:
        node, b, acc = stack[-1]
        if len(acc) < len(node):
            child = node[len(acc)]
            if b - 1 == stop_at:
                acc.append(combine(child, b - 1, None))
            else:
                stack.append((child, b - 1, []))
            continue
        stack.pop()
        value = combine(node, b, acc)
        if not stack:
            return value
        stack[-1][2].append(value)


def grow(root: Any, expand: Callable[[Any], Sequence[Any]]) -> Tree:
    """Build a tree depth-first from node descriptors.

    ``expand(desc)`` returns the descriptors of the children of the node
    described by ``desc``. It is called in depth-first pre-order, which is
    what fixes the consumption order of any random stream it draws from.
    """
    stack: list[tuple[Sequence[Any], list]] = [(expand(root), [])]
    while True:
        pending, built = stack[-1]
        if len(built) < len(pending):
            stack.append((expand(pending[len(built)]), []))
            continue
        stack.pop()
        node = tuple(built)
        if not stack:
            return node
        stack[-1][1].append(node)


def height(t: Tree) -> int:
    return fold(t, lambda node, b, acc: 1 + max(acc) if acc else 0)


def size(t: Tree) -> int:
    return fold(t, lambda node, b, acc: 1 + sum(acc))


def reaches_level(t: Tree, level: int) -> bool:
    """Whether ``t`` has a node at depth ``level`` (membership of the survival event)."""
    if level < 0:
        raise TreeError(f"level must be >= 0, got {level}")
    # depth-first with an explicit stack; stop at the first deep-enough node
    stack = [(t, 0)]
    while stack:
        node, depth = stack.pop()
        if depth >= level:
            return True
        stack.extend((child, depth + 1) for child in node)
    return False


def serialize(t: Tree) -> str:
    parts: list[str] = []
    stack: list[Any] = [t]
    while stack:
        item = stack.pop()
        if item == ")":
            parts.append(")")
            continue
        parts.append("(")
        stack.append(")")
        stack.extend(reversed(item))
    return "".join(parts)


def parse(text: str) -> Tree:
    text = text.strip()
    stack: list[list] = []
    result = None
    for pos, ch in enumerate(text):
        if result is not None:
            raise TreeError(f"trailing input at position {pos}")
        if ch == "(":
            stack.append([])
        elif ch == ")":
            if not stack:
                raise TreeError(f"unbalanced ')' at position {pos}")
            node = tuple(stack.pop())
            if stack:
                stack[-1].append(node)
            else:
                result = node
        else:
            raise TreeError(f"unexpected character {ch!r} at position {pos}")
    if stack or result is None:
        raise TreeError(f"unbalanced input: {len(stack)} unclosed '(' at end of text")
    return result


def count_trees(h: int, max_children: int) -> int:
    """Number of trees of height <= h with at most ``max_children`` children per node."""
    count = 1
    for _ in range(h):
        count = sum(count ** n for n in range(max_children + 1))
    return count


def enumerate_trees(h: int, max_children: int, *, max_height: int = MAX_ENUM_HEIGHT,
                    max_branching: int = MAX_ENUM_CHILDREN,
                    max_count: int = MAX_ENUM_COUNT) -> list[Tree]:
    """All trees of height <= h, branching <= max_children, in canonical order.

    Canonical order is by node count, then lexicographically by serialization.
    """
    projected = count_trees(h, max_children)
    if h > max_height or max_children > max_branching or projected > max_count:
        raise EnumerationSizeError(
            f"enumerating height <= {h} with <= {max_children} children would produce "
            f"{projected} trees (limits: height {max_height}, children {max_branching}, "
            f"count {max_count})")
    level = [LEAF]
    for _ in range(h):
        nxt = [LEAF]
        prev = [LEAF]
        for _ in range(max_children):
            prev = [seq + (child,) for seq in prev for child in level]
            nxt.extend(prev)
        level = nxt
    return sorted(level, key=lambda t: (size(t), serialize(t)))


def log_prob(t: Tree, sched: OffspringSchedule, level: int, k: int) -> float:
    """log P_{level,k}(t): product of offspring masses over the nodes below level k."""
    if not 0 <= level <= k:
        raise TreeError(f"need 0 <= level <= k, got level={level}, k={k}")
    if height(t) > k - level:
        raise TreeError(f"tree of height {height(t)} does not fit budget {k - level}")

    def combine(node, b, acc):
        if b == 0:
            return 0.0
        q = sched.law(k - b)(len(acc))
        return math.log(q) + math.fsum(acc) if q > 0 else -math.inf

    return fold(t, combine, k - level)


def sample_unconditioned(sched: OffspringSchedule, level: int, k: int, seed) -> Tree:
    """Draw from P_{level,k}.

    ``seed`` is an int or a ``numpy.random.Generator``; a Generator is
    consumed in place, one uniform per internal node in depth-first pre-order.
    """
    if not 0 <= level <= k:
        raise TreeError(f"need 0 <= level <= k, got level={level}, k={k}")
    rng = np.random.default_rng(seed)
    samplers = [_DiscreteSampler(sched.law(l).support, sched.law(l).probs) for l in range(level, k)]

    def expand(lvl):
        if lvl == k:
            return ()
        return (lvl + 1,) * samplers[lvl - level].draw(rng)

    return grow(level, expand)


class _DiscreteSampler:
    """Inverse-CDF draws from a finite list of atoms."""

    def __init__(self, atoms: Sequence[Any], probs: Sequence[float]):
        self.atoms = list(atoms)
        cdf = np.cumsum(probs)
        self.cdf = cdf / cdf[-1]

    def draw(self, rng: np.random.Generator):
        i = int(np.searchsorted(self.cdf, rng.random(), side="right"))
        return self.atoms[min(i, len(self.atoms) - 1)]


def total_variation(p: Iterable[float], q: Iterable[float]) -> float:
    return 0.5 * math.fsum(abs(a - b) for a, b in zip(p, q, strict=True))
