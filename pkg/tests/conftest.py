import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from condgw.offspring import OffspringSchedule, pmf_from_weights, point_mass


def bernoulli_half(depth):
    return OffspringSchedule.homogeneous(pmf_from_weights({0: 1, 1: 1}), depth)


def chain(depth):
    return OffspringSchedule.homogeneous(point_mass(1), depth)


def uniform012(depth):
    return OffspringSchedule.homogeneous(pmf_from_weights({0: 1, 1: 1, 2: 1}), depth)


def level_dependent(depth):
    laws = [pmf_from_weights({0: 1, 2: 3}), pmf_from_weights({0: 2, 1: 1, 2: 1}),
            pmf_from_weights({1: 1, 2: 4}), pmf_from_weights({0: 1, 1: 5})]
    return OffspringSchedule(tuple(laws[l % len(laws)] for l in range(depth)))


def chi_square_pvalue(draws, exact):
    """Goodness of fit of sampled trees against exact masses {tree: prob}.

    Cells with expected count < 5 are pooled; draws outside ``exact`` fail
    loudly rather than being pooled away.
    """
    n = len(draws)
    exact = {t: q for t, q in exact.items() if q > 0}
    counts = Counter(draws)
    unknown = set(counts) - set(exact)
    assert not unknown, f"draws outside the support: {sorted(unknown)[:3]}"
    big = [t for t, q in exact.items() if q * n >= 5]
    small = [t for t, q in exact.items() if q * n < 5]
    observed = [counts[t] for t in big]
    expected = [exact[t] * n for t in big]
    if small:
        observed.append(sum(counts[t] for t in small))
        expected.append(sum(exact[t] for t in small) * n)
    expected = np.asarray(expected) * (sum(observed) / sum(expected))
    if len(observed) < 2:
        return 1.0
    return float(stats.chisquare(observed, expected).pvalue)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


# acceptance verdicts, echoed in the terminal summary whatever the capture mode
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
