import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condgw.errors import DistributionError, ImpossibleConditioningError, TreeError
from condgw.offspring import OffspringSchedule, pmf_from_weights, point_mass
from condgw.survival import (build_survival_table, check_equivalence, log_p_tilde, log_q, log_r,
                             sample_p, sample_q, sample_r)
from condgw.trees import LEAF, enumerate_trees, height, log_prob, reaches_level

from conftest import bernoulli_half, chain, chi_square_pvalue, level_dependent, uniform012

law_012 = st.dictionaries(st.integers(0, 2), st.integers(0, 5), min_size=1).filter(
    lambda d: sum(d.values()) > 0).map(pmf_from_weights)


@st.composite
def schedules(draw, k):
    return OffspringSchedule(tuple(draw(law_012) for _ in range(k)))


def survival_by_enumeration(sched, level, k, b):
    return math.fsum(math.exp(log_prob(t, sched, level, k))
                     for t in enumerate_trees(k - level, b) if reaches_level(t, k - level))


class TestSurvivalTable:
    def test_chain(self):
        assert build_survival_table(chain(4), 4).p == (1.0,) * 5

    def test_extinct_root(self):
        sched = OffspringSchedule((point_mass(0),))
        assert build_survival_table(sched, 1).p == (0.0, 1.0)

    def test_bernoulli(self):
        assert build_survival_table(bernoulli_half(2), 2).p == (0.25, 0.5, 1.0)

    @pytest.mark.parametrize("make", [uniform012, level_dependent])
    def test_matches_enumeration(self, make):
        k = 3
        sched = make(k)
        table = build_survival_table(sched, k)
        for level in range(k + 1):
            assert table.p[level] == pytest.approx(
                survival_by_enumeration(sched, level, k, 2), abs=1e-13)

    def test_short_schedule(self):
        with pytest.raises(DistributionError):
            build_survival_table(chain(2), 3)


class TestSamplers:
    def test_q_at_level_k(self):
        assert sample_q(build_survival_table(uniform012(2), 2), 2, 0) == LEAF

    def test_q_chain(self):
        table = build_survival_table(chain(2), 2)
        assert all(sample_q(table, 0, s) == (((),),) for s in range(5))

    def test_q_bernoulli_one_level(self):
        table = build_survival_table(bernoulli_half(1), 1)
        assert all(sample_q(table, 0, s) == ((),) for s in range(20))

    def test_q_impossible(self):
        table = build_survival_table(OffspringSchedule((point_mass(0), point_mass(1))), 2)
        with pytest.raises(ImpossibleConditioningError):
            sample_q(table, 0, 0)

    def test_r_last_level(self):
        table = build_survival_table(uniform012(3), 3)
        assert all(sample_r(table, 2, s) == LEAF for s in range(20))

    def test_r_no_offspring(self):
        table = build_survival_table(OffspringSchedule.homogeneous(point_mass(0), 3), 3)
        assert all(sample_r(table, 0, s) == LEAF for s in range(5))

    def test_r_errors(self):
        table = build_survival_table(chain(2), 2)
        with pytest.raises(ImpossibleConditioningError):
            sample_r(table, 0, 0)
        with pytest.raises(TreeError):
            sample_r(table, 2, 0)

    def test_p_degenerate(self):
        table = build_survival_table(chain(3), 3)
        assert sample_p(table, 0, 1) == sample_q(table, 0, 1)
        dead = build_survival_table(OffspringSchedule.homogeneous(point_mass(0), 3), 3)
        assert sample_p(dead, 0, 1) == LEAF

    def test_r_bernoulli_two_to_one(self):
        n = 100_000
        table = build_survival_table(bernoulli_half(2), 2)
        rng = np.random.default_rng(3)
        draws = [sample_r(table, 0, rng) for _ in range(n)]
        assert set(draws) <= {LEAF, ((),)}
        leaf = draws.count(LEAF)
        sigma = math.sqrt(n * (2 / 3) * (1 / 3))
        assert abs(leaf - 2 * n / 3) <= 4 * sigma

    def test_p_bernoulli_half_half(self):
        n = 100_000
        table = build_survival_table(bernoulli_half(1), 1)
        rng = np.random.default_rng(4)
        leaf = sum(sample_p(table, 0, rng) == LEAF for _ in range(n))
        assert abs(leaf - n / 2) <= 4 * math.sqrt(n / 4)

    def test_support_properties(self):
        k = 4
        table = build_survival_table(level_dependent(k), k)
        rng = np.random.default_rng(5)
        for _ in range(10_000):
            assert reaches_level(sample_q(table, 0, rng), k)
            assert not reaches_level(sample_r(table, 0, rng), k)

    def test_q_goodness_of_fit(self):
        k, n = 2, 30_000
        sched = uniform012(k)
        table = build_survival_table(sched, k)
        rng = np.random.default_rng(6)
        draws = [sample_q(table, 0, rng) for _ in range(n)]
        exact = {t: math.exp(log_q(table, 0, t)) for t in enumerate_trees(k, 2)}
        assert chi_square_pvalue(draws, exact) > 1e-3

    def test_seeded(self):
        table = build_survival_table(uniform012(4), 4)
        assert sample_q(table, 0, 99) == sample_q(table, 0, 99)


class TestExactMasses:
    def test_q_level_k(self):
        assert log_q(build_survival_table(uniform012(2), 2), 2, LEAF) == 0.0

    def test_q_off_support(self):
        k = 3
        table = build_survival_table(uniform012(k), k)
        for t in enumerate_trees(k, 2):
            if height(t) < k:
                assert log_q(table, 0, t) == -math.inf
            else:
                assert log_r(table, 0, t) == -math.inf

    def test_r_bernoulli(self):
        table = build_survival_table(bernoulli_half(2), 2)
        assert math.exp(log_r(table, 0, LEAF)) == pytest.approx(2 / 3, abs=1e-15)
        assert math.exp(log_r(table, 0, ((),))) == pytest.approx(1 / 3, abs=1e-15)

    @pytest.mark.parametrize("make", [uniform012, level_dependent, bernoulli_half])
    def test_normalised_and_pointwise_mixture(self, make):
        k, b = 3, 2
        sched = make(k)
        table = build_survival_table(sched, k)
        for level in range(k):
            space = enumerate_trees(k - level, b)
            q_mass = [math.exp(log_q(table, level, t)) for t in space]
            if table.p[level] < 1:
                r_mass = [math.exp(log_r(table, level, t)) for t in space]
                assert abs(math.fsum(r_mass) - 1) <= 1e-10
            else:
                r_mass = [0.0] * len(space)
            assert abs(math.fsum(q_mass) - 1) <= 1e-10
            p = table.p[level]
            for t, q, r in zip(space, q_mass, r_mass):
                exact = math.exp(log_prob(t, sched, level, k))
                assert abs(p * q + (1 - p) * r - exact) <= 1e-12
                assert abs(math.exp(log_p_tilde(table, level, t)) - exact) <= 1e-12


class TestEquivalence:
    def test_bernoulli_hand_check(self):
        assert check_equivalence(bernoulli_half(2), 2, 1) <= 1e-12

    def test_chain_exact(self):
        assert check_equivalence(chain(3), 3, 1) == 0.0

    def test_support_too_large(self):
        with pytest.raises(DistributionError):
            check_equivalence(uniform012(2), 2, 1)

    def test_corrupted_table_detected(self):
        sched = uniform012(2)
        table = build_survival_table(sched, 2)
        bad = dataclasses.replace(table, p=(table.p[0] + 0.05,) + table.p[1:])
        assert check_equivalence(sched, 2, 2, table=bad) > 1e-3

    @given(st.integers(1, 3).flatmap(lambda k: st.tuples(st.just(k), schedules(k))))
    @settings(max_examples=25, deadline=None)
    def test_random_schedules(self, case):
        k, sched = case
        assert check_equivalence(sched, k, 2) <= 1e-10
