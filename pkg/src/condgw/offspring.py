"""Offspring laws and the conditional laws of (W, X).

W is the number of children of a node at some level, X the number of
those children that are "successful" (subtree reaches the target level).
Given W = n, X ~ Bin(n, p) where p is the survival probability one level
down. The multitype generalisation replaces the binomial split with a
multinomial one.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import gammaln, xlog1py, xlogy

from .errors import DistributionError, ImpossibleConditioningError

DEFAULT_TAIL_TOL = 1e-12
MAX_TYPES = 6
MAX_MULTINOMIAL_SUPPORT = 64


@dataclass(frozen=True)
class Pmf:
    """Finite-support probability mass function on {0, 1, 2, ...}."""

    support: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.support) != len(self.probs) or not self.support:
            raise DistributionError("support and probs must be non-empty and of equal length")
        if any(b <= a for a, b in zip(self.support, self.support[1:])) or self.support[0] < 0:
            raise DistributionError("support must be strictly increasing nonnegative integers")
        if any(not (0.0 <= q <= 1.0) for q in self.probs):
            raise DistributionError("probabilities must lie in [0, 1]")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise DistributionError(f"probabilities sum to {math.fsum(self.probs)!r}, not 1")
        object.__setattr__(self, "_lookup", dict(zip(self.support, self.probs)))

    def __call__(self, n: int) -> float:
        return self._lookup.get(n, 0.0)

    def items(self) -> Iterator[tuple[int, float]]:
        return zip(self.support, self.probs)

    @property
    def max_value(self) -> int:
        return self.support[-1]

    def mean(self) -> float:
        return math.fsum(n * q for n, q in self.items())


@dataclass(frozen=True)
class OffspringSchedule:
    """Offspring law per level, ``laws[l]`` for l = 0..depth-1."""

    laws: tuple[Pmf, ...]

    @property
    def depth(self) -> int:
        return len(self.laws)

    def law(self, level: int) -> Pmf:
        if not 0 <= level < len(self.laws):
            raise DistributionError(f"schedule has no offspring law for level {level}")
        return self.laws[level]

    @classmethod
    def homogeneous(cls, pmf: Pmf, depth: int) -> "OffspringSchedule":
        return cls((pmf,) * depth)

    @classmethod
    def from_levels(cls, depth: int, default: Pmf | None = None,
                    overrides: Mapping[int, Pmf] | None = None) -> "OffspringSchedule":
        overrides = dict(overrides or {})
        laws = []
        for level in range(depth):
            law = overrides.get(level, default)
            if law is None:
                raise DistributionError(f"no offspring law for level {level} and no default")
            laws.append(law)
        return cls(tuple(laws))

    def max_value(self, levels: Iterable[int] | None = None) -> int:
        levels = range(self.depth) if levels is None else levels
        return max((self.law(l).max_value for l in levels), default=0)


@dataclass(frozen=True)
class JointWX:
    """Joint law of (W, X) as a map (n, m) -> probability, m <= n.

    Exact-zero atoms are dropped; ``entry`` returns 0 for them.
    """

    entries: Mapping[tuple[int, int], float]

    def entry(self, n: int, m: int) -> float:
        return self.entries.get((n, m), 0.0)

    def items(self):
        return self.entries.items()

    def prob_x_zero(self) -> float:
        return math.fsum(q for (n, m), q in self.entries.items() if m == 0)

    def prob_x_positive(self) -> float:
        return math.fsum(q for (n, m), q in self.entries.items() if m >= 1)

    def marginal_w(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for (n, _), q in sorted(self.entries.items()):
            out[n] = out.get(n, 0.0) + q
        return out


def pmf_from_weights(weights: Mapping[int, float]) -> Pmf:
    """Normalise nonnegative weights into a Pmf over the positively weighted keys."""
    clean = {}
    for n, w in weights.items():
        n = int(n)
        w = float(w)
        if not math.isfinite(w) or w < 0:
            raise DistributionError(f"weight for {n} must be finite and >= 0, got {w!r}")
        if n < 0:
            raise DistributionError(f"offspring count must be >= 0, got {n}")
        if w > 0:
            clean[n] = clean.get(n, 0.0) + w
    total = math.fsum(clean.values())
    if total <= 0:
        raise DistributionError("at least one weight must be strictly positive")
    support = tuple(sorted(clean))
    return Pmf(support, _normalise([clean[n] / total for n in support]))


def _normalise(probs: Sequence[float]) -> tuple[float, ...]:
    total = math.fsum(probs)
    probs = [q / total for q in probs]
    # push the residual rounding error onto the largest atom
    i = max(range(len(probs)), key=probs.__getitem__)
    probs[i] += 1.0 - math.fsum(probs)
    return tuple(probs)


def point_mass(n: int) -> Pmf:
    return Pmf((n,), (1.0,))


def poisson_pmf(mu: float, tail_tol: float = DEFAULT_TAIL_TOL) -> Pmf:
    """Poisson(mu) truncated at the first N with P(W > N) < tail_tol, renormalised."""
    if not mu > 0 or not math.isfinite(mu):
        raise DistributionError(f"Poisson mean must be positive, got {mu!r}")
    if not 0 < tail_tol < 1e-6:
        raise DistributionError(f"tail_tol must lie in (0, 1e-6), got {tail_tol!r}")
    n_max = int(mu)
    while stats.poisson.sf(n_max, mu) >= tail_tol:
        n_max += 1
    probs = stats.poisson.pmf(range(n_max + 1), mu)
    keep = [(n, float(q)) for n, q in enumerate(probs) if q > 0]
    return Pmf(tuple(n for n, _ in keep), _normalise([q for _, q in keep]))


def survival_fraction(n: int, p: float) -> float:
    """1 - (1 - p)**n, accurate for small p."""
    if n == 0 or p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-p))


def joint_wx(pmf: Pmf, p: float) -> JointWX:
    if not 0.0 <= p <= 1.0:
        raise DistributionError(f"success probability must be in [0, 1], got {p!r}")
    entries = {}
    for n, q in pmf.items():
        m = np.arange(n + 1)
        log_b = (gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1)
                 + xlogy(m, p) + xlog1py(n - m, -p))
        for mi, lb in enumerate(log_b):
            value = q * math.exp(lb)
            if value > 0:
                entries[(n, mi)] = value
    return JointWX(entries)


def law_w_given_x0(joint: JointWX) -> Pmf:
    weights = {n: q for (n, m), q in joint.items() if m == 0}
    if not weights:
        raise ImpossibleConditioningError("P(X = 0) = 0: cannot condition on no successful child")
    return pmf_from_weights(weights)


def law_wx_given_xge1(joint: JointWX) -> JointWX:
    kept = {key: q for key, q in joint.items() if key[1] >= 1}
    if not kept:
        raise ImpossibleConditioningError(
            "P(X >= 1) = 0: conditioning on survival of a null event")
    total = math.fsum(kept.values())
    return JointWX({key: q / total for key, q in sorted(kept.items())})


def expect_w_given_x0(pmf: Pmf, p: float) -> float:
    law = law_w_given_x0(joint_wx(pmf, p))
    return law.mean()


def expect_w_given_xge1(pmf: Pmf, p: float) -> float:
    cond = law_wx_given_xge1(joint_wx(pmf, p))
    return math.fsum(n * q for (n, m), q in cond.items())


def expect_deadend_ratio(pmf: Pmf, p: float) -> float:
    """E[(W - X) / (1 + X) | X >= 1]: expected dead ends tried before a successful child."""
    cond = law_wx_given_xge1(joint_wx(pmf, p))
    return math.fsum((n - m) / (1 + m) * q for (n, m), q in cond.items())


def compositions(n: int, m: int) -> Iterator[tuple[int, ...]]:
    """All vectors in N^m summing to n (stars and bars)."""
    for bars in itertools.combinations(range(n + m - 1), m - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(n + m - 2 - prev)
        yield tuple(parts)


def multinomial_log_pmf(counts: Sequence[int], q: Sequence[float]) -> float:
    n = sum(counts)
    out = math.lgamma(n + 1)
    for c, qi in zip(counts, q):
        out += float(xlogy(c, qi)) - math.lgamma(c + 1)
    return out


def _check_prob_vector(q: Sequence[float]) -> None:
    if any(not (qi >= 0) for qi in q) or abs(math.fsum(q) - 1.0) > 1e-9:
        raise DistributionError(f"not a probability vector: {tuple(q)!r}")


def multinomial_atoms(pmf: Pmf, q: Sequence[float], *, max_types: int = MAX_TYPES,
                      max_support: int = MAX_MULTINOMIAL_SUPPORT
                      ) -> Iterator[tuple[tuple[int, ...], float]]:
    """Yield (N, P(X = N)) with X | W ~ Multi(W, q), W ~ pmf; zero atoms skipped."""
    _check_prob_vector(q)
    m = len(q)
    if m > max_types:
        raise DistributionError(f"{m} types exceeds the enumeration cap of {max_types}")
    if pmf.max_value > max_support:
        raise DistributionError(
            f"offspring support up to {pmf.max_value} exceeds the enumeration cap of {max_support}")
    for n, w in pmf.items():
        for counts in compositions(n, m):
            lp = multinomial_log_pmf(counts, q)
            if lp > -math.inf:
                yield counts, w * math.exp(lp)


def multinomial_event_prob(pmf: Pmf, q: Sequence[float],
                           event: Callable[[tuple[int, ...]], bool], **caps) -> float:
    """P(Multi(W, q) in event) with W ~ pmf, by enumerating every composition."""
    return math.fsum(prob for counts, prob in multinomial_atoms(pmf, q, **caps) if event(counts))
