"""Poisson offspring: closed forms, asymptotics and optimisation of the mean.

With W ~ Pois(mu) at every level, the number of successful children is
Pois(mu * p[l+1]) and independent of the failing ones, so every
conditional moment of the cost recursions has a closed form. The forms
used here are rearranged to avoid cancellation when p is tiny (small mu,
deep trees) or 1 - p is tiny (large mu).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize
from scipy.special import gammainc

from .cost import CostTable, assemble_cost_table
from .errors import CondGWError, DistributionError, ImpossibleSearchError

DEFAULT_BRACKET = (0.05, 100.0)
GRID_POINTS = 64


def _check_mu(mu: float) -> None:
    if not mu > 0 or not math.isfinite(mu):
        raise DistributionError(f"mu must be positive and finite, got {mu!r}")


def _survival_pair(mu: float, k: int) -> tuple[list[float], list[float]]:
    """p[l] and 1 - p[l], each evaluated directly."""
    p = [0.0] * (k + 1)
    fail = [0.0] * (k + 1)
    p[k] = 1.0
    for l in range(k - 1, -1, -1):
        lam = mu * p[l + 1]
        p[l] = -math.expm1(-lam)
        fail[l] = math.exp(-lam)
    return p, fail


def poisson_survival(mu: float, k: int) -> list[float]:
    """p[l] = 1 - exp(-mu * p[l+1]), p[k] = 1."""
    _check_mu(mu)
    if k < 1:
        raise DistributionError(f"k must be >= 1, got {k}")
    return _survival_pair(mu, k)[0]


def poisson_moments(mu: float, p_next: float, p_here: float, fail_next: float
                    ) -> tuple[float, float, float]:
    """(E[W|X=0], E[W|X>=1], E[(W-X)/(1+X) | X>=1]) for W ~ Pois(mu), X | W ~ Bin(W, p_next).

    ``p_here`` = 1 - exp(-mu p_next) and ``fail_next`` = 1 - p_next are
    passed in precomputed for accuracy.
    """
    lam = mu * p_next
    w_fail = mu * fail_next
    if p_here == 0:
        return w_fail, math.nan, math.nan
    w_ok = lam / p_here + mu * fail_next
    # E[1/(1+X); X >= 1] = P(Pois(lam) >= 2) / lam
    deadend = mu * fail_next * (float(gammainc(2.0, lam)) / lam) / p_here
    return w_fail, w_ok, deadend


def poisson_moments_literal(mu: float, p_next: float, p_here: float) -> tuple[float, float, float]:
    """The same three moments in their textbook form (cancellation-prone; for testing)."""
    return (mu * (1 - p_next),
            (mu - mu * (1 - p_next) * (1 - p_here)) / p_here,
            (1 - p_next) / p_next - mu * (1 - p_next) * (1 - p_here) / p_here)


def poisson_cost(mu: float, k: int, K: float) -> CostTable:
    """Cost table for Pois(mu) offspring at every level, via closed-form moments."""
    _check_mu(mu)
    p, fail = _survival_pair(mu, k)
    if not p[0] > 0:
        raise ImpossibleSearchError(
            f"p_0k underflows to 0 for mu={mu!r}, k={k}; cost is beyond floating range")

    def moments(l):
        w_fail, w_ok, deadend = poisson_moments(mu, p[l + 1], p[l], fail[l + 1])
        return (w_fail if fail[l] > 0 else None), w_ok, deadend

    return assemble_cost_table(k, K, p, moments)


def _cost_or_inf(mu: float, k: int, K: float) -> float:
    try:
        cost = poisson_cost(mu, k, K).C
    except (ImpossibleSearchError, OverflowError):
        return math.inf
    return cost if math.isfinite(cost) else math.inf


class Optimum(NamedTuple):
    mu: float
    cost: float
    at_boundary: bool


def optimize_mu(k: int, K: float, bracket: tuple[float, float] = DEFAULT_BRACKET,
                tol: float = 1e-4, grid_points: int = GRID_POINTS) -> Optimum:
    """Mean offspring minimising the Poisson search cost C_k.

    A log-spaced scan locates the best grid point; golden-section search
    then refines inside the pocket formed by its two neighbours. Only that
    pocket is assumed unimodal.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise DistributionError(f"invalid bracket {bracket!r}")
    grid = np.geomspace(lo, hi, grid_points)
    values = [_cost_or_inf(mu, k, K) for mu in grid]
    j = int(np.argmin(values))
    if not math.isfinite(values[j]):
        raise ImpossibleSearchError(f"cost is infinite over the whole bracket {bracket!r}")
    if j == 0 or j == len(grid) - 1:
        warnings.warn(f"minimum of C_k at bracket edge mu={grid[j]:.6g}; widen the bracket",
                      RuntimeWarning, stacklevel=2)
        return Optimum(float(grid[j]), values[j], True)
    a, b, c = grid[j - 1], grid[j], grid[j + 1]
    res = optimize.minimize_scalar(lambda x: _cost_or_inf(x, k, K), bracket=(a, b, c),
                                   method="golden", tol=tol / (2 * b))
    mu = float(res.x)
    cost = float(res.fun)
    if cost > values[j]:
        mu, cost = float(b), values[j]
    return Optimum(mu, cost, False)


def infinite_survival(mu: float, max_iter: int = 10_000_000) -> float:
    """Largest root of p = 1 - exp(-p mu), by fixed-point iteration from p = 1."""
    _check_mu(mu)
    if mu <= 1:
        return 0.0
    p = 1.0
    for _ in range(max_iter):
        nxt = -math.expm1(-p * mu)
        if abs(nxt - p) < 1e-14:
            return nxt
        p = nxt
    return p


@dataclass(frozen=True)
class InfiniteTreeResult:
    mu: float
    K: float
    p: float
    E: float
    C_inf: float
    C_long_form: float
    C_from_p: float


def infinite_cost(mu: float, K: float) -> InfiniteTreeResult:
    """Expected cost per step from a successful node to a successful child, infinite tree."""
    _check_mu(mu)
    if mu <= 1:
        raise DistributionError(f"the infinite tree needs mu > 1 (supercritical), got {mu!r}")
    p = infinite_survival(mu)
    q = 1 - p
    E = (1 + K * mu * q) / (1 - mu * q)
    long_form = 1 + K * (mu - mu * q * q) / p + E * (q - mu * q * q) / p
    return InfiniteTreeResult(
        mu=mu, K=K, p=p, E=E,
        C_inf=(K * mu + 1) / p,
        C_long_form=long_form,
        # mu eliminated through mu = -log(1 - p) / p
        C_from_p=(-K * math.log1p(-p) + p) / p ** 2,
    )


def lambert_w_minus1(x: float, max_iter: int = 50) -> float:
    """Lower real branch W_{-1}(x) for x in [-1/e, 0), by Halley iteration."""
    x = float(x)
    if not -(1 + 1e-15) / math.e <= x < 0:
        raise DistributionError(f"W_-1 is real only on [-1/e, 0), got {x!r}")
    branch = math.e * x + 1
    if branch <= 1e-15:
        return -1.0
    if branch < 0.25:
        # series about the branch point
        s = -math.sqrt(2 * branch)
        w = -1 + s - s * s / 3 + 11 / 72 * s ** 3
    else:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1
        if wp1 == 0:
            break
        step = f / (ew * wp1 - (w + 2) * f / (2 * wp1))
        w -= step
        if abs(step) <= 4e-16 * abs(w):
            break
    return w


def mu_opt_limit() -> float:
    """Optimal mean offspring in the limit k -> infinity, then K -> infinity."""
    a = 0.5 + lambert_w_minus1(-1 / (2 * math.sqrt(math.e)))
    return a / math.expm1(a)


@dataclass(frozen=True)
class PoissonCostCurve:
    k: int
    K: float
    mus: tuple[float, ...]
    costs: tuple[float, ...]  # nan where the cost is not representable
    mu_opt: float
    C_opt: float

    @property
    def asym_large(self) -> tuple[float, ...]:
        return tuple(self.k * self.K * mu for mu in self.mus)

    @property
    def asym_small(self) -> tuple[float, ...]:
        return tuple(mu ** -self.k for mu in self.mus)

    def rows(self):
        return zip(self.mus, self.costs, self.asym_large, self.asym_small)


def cost_curve(k: int, K: float, mu_grid: Sequence[float],
               bracket: tuple[float, float] | None = None) -> PoissonCostCurve:
    """C_k over a grid of means plus the refined optimum (searched over ``bracket``)."""
    mus = tuple(float(mu) for mu in mu_grid)
    if any(not mu > 0 for mu in mus):
        raise DistributionError("grid values must be positive")
    costs = []
    for mu in mus:
        try:
            costs.append(poisson_cost(mu, k, K).C)
        except CondGWError:
            costs.append(math.nan)
    if bracket is None:
        bracket = (min(mus), max(mus)) if min(mus) < max(mus) else DEFAULT_BRACKET
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        opt = optimize_mu(k, K, bracket)
    return PoissonCostCurve(k, float(K), mus, tuple(costs), opt.mu, opt.cost)
