import math
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from condgw.errors import DistributionError, ImpossibleConditioningError
from condgw.offspring import (OffspringSchedule, Pmf, compositions, expect_deadend_ratio,
                              expect_w_given_x0, expect_w_given_xge1, joint_wx,
                              law_w_given_x0, law_wx_given_xge1, multinomial_event_prob,
                              pmf_from_weights, point_mass, poisson_pmf)
from condgw.poisson import poisson_moments_literal

UNIFORM_0_2 = pmf_from_weights({0: 1, 2: 1})

weights = st.dictionaries(st.integers(0, 8), st.floats(0, 10, allow_nan=False),
                          min_size=1, max_size=6).filter(lambda d: any(w > 0 for w in d.values()))


class TestPmf:
    def test_point_mass(self):
        pmf = pmf_from_weights({0: 1})
        assert pmf.support == (0,) and pmf.probs == (1.0,)

    def test_normalisation(self):
        assert pmf_from_weights({0: 1, 2: 1}).probs == (0.5, 0.5)
        assert pmf_from_weights({0: 2, 1: 1, 2: 1}).probs == (0.5, 0.25, 0.25)

    @pytest.mark.parametrize("bad", [{0: 0}, {0: 0, 1: 0}, {0: -1, 1: 2}, {0: math.inf}])
    def test_invalid_weights(self, bad):
        with pytest.raises(DistributionError):
            pmf_from_weights(bad)

    def test_constructor_rejects_unnormalised(self):
        with pytest.raises(DistributionError):
            Pmf((0, 1), (0.5, 0.6))
        with pytest.raises(DistributionError):
            Pmf((1, 0), (0.5, 0.5))

    @given(weights)
    def test_sums_to_one(self, w):
        pmf = pmf_from_weights(w)
        assert abs(math.fsum(pmf.probs) - 1) <= 1e-12
        assert all(q >= 0 for q in pmf.probs)
        assert list(pmf.support) == sorted(set(pmf.support))


class TestPoisson:
    def test_vanishing_mean(self):
        assert abs(poisson_pmf(1e-9, 1e-12)(0) - 1) < 1e-8

    def test_zero_mass(self):
        assert abs(poisson_pmf(1.0, 1e-12)(0) - math.exp(-1)) < 1e-10

    def test_mean(self):
        pmf = poisson_pmf(2.0, 1e-12)
        assert abs(pmf.mean() - 2.0) < 1e-9

    def test_truncation_point(self):
        pmf = poisson_pmf(3.0, 1e-12)
        n = pmf.max_value
        assert stats.poisson.sf(n, 3.0) < 1e-12 <= stats.poisson.sf(n - 1, 3.0)

    @pytest.mark.parametrize("mu", [0, -1, math.nan])
    def test_domain(self, mu):
        with pytest.raises(DistributionError):
            poisson_pmf(mu)


class TestJoint:
    def test_point_mass_zero(self):
        assert dict(joint_wx(point_mass(0), 0.5).entries) == {(0, 0): 1.0}

    def test_binomial_split(self):
        assert joint_wx(UNIFORM_0_2, 0.5).entry(2, 1) == pytest.approx(0.25, abs=1e-15)

    def test_p_one(self):
        joint = joint_wx(poisson_pmf(2.0), 1.0)
        assert all(m == n for (n, m) in joint.entries)

    @given(weights, st.floats(0, 1))
    def test_marginal_and_mixture(self, w, p):
        pmf = pmf_from_weights(w)
        joint = joint_wx(pmf, p)
        for n, q in joint.marginal_w().items():
            assert abs(q - pmf(n)) <= 1e-12
        p0, p1 = joint.prob_x_zero(), joint.prob_x_positive()
        rebuilt = {}
        if p0 > 0:
            for n, q in law_w_given_x0(joint).items():
                rebuilt[(n, 0)] = p0 * q
        if p1 > 0:
            for key, q in law_wx_given_xge1(joint).items():
                rebuilt[key] = p1 * q
        for key in set(rebuilt) | set(joint.entries):
            assert abs(rebuilt.get(key, 0.0) - joint.entry(*key)) <= 1e-12


class TestConditionalLaws:
    def test_w_given_x0_enumerated(self):
        # P(W=0, X=0) = 1/2, P(W=2, X=0) = 1/2 * 1/4
        law = law_w_given_x0(joint_wx(UNIFORM_0_2, 0.5))
        assert law(0) == pytest.approx(0.8, abs=1e-15)
        assert law(2) == pytest.approx(0.2, abs=1e-15)

    def test_w_given_x0_trivial(self):
        pmf = poisson_pmf(1.5)
        assert law_w_given_x0(joint_wx(pmf, 0.0)) == pmf
        assert law_w_given_x0(joint_wx(point_mass(0), 0.7)) == point_mass(0)

    def test_w_given_x0_impossible(self):
        with pytest.raises(ImpossibleConditioningError):
            law_w_given_x0(joint_wx(point_mass(2), 1.0))

    def test_wx_given_xge1(self):
        assert dict(law_wx_given_xge1(joint_wx(point_mass(1), 0.5)).entries) == {(1, 1): 1.0}
        assert dict(law_wx_given_xge1(joint_wx(point_mass(2), 1.0)).entries) == {(2, 2): 1.0}
        cond = law_wx_given_xge1(joint_wx(UNIFORM_0_2, 0.5))
        assert cond.entry(2, 1) == pytest.approx(2 / 3, abs=1e-15)
        assert cond.entry(2, 2) == pytest.approx(1 / 3, abs=1e-15)

    def test_wx_given_xge1_impossible(self):
        with pytest.raises(ImpossibleConditioningError):
            law_wx_given_xge1(joint_wx(UNIFORM_0_2, 0.0))

    def test_deadend_chain(self):
        assert expect_deadend_ratio(point_mass(1), 0.3) == 0.0

    @pytest.mark.parametrize("mu,p", list(product([0.1, 0.5, 1, 2, 5], [0.1, 0.5, 0.9, 1.0])))
    def test_poisson_closed_forms(self, mu, p):
        pmf = poisson_pmf(mu)
        p_here = 1 - math.exp(-mu * p)
        w_fail, w_ok, dead = poisson_moments_literal(mu, p, p_here)
        assert expect_w_given_x0(pmf, p) == pytest.approx(w_fail, abs=1e-9)
        assert expect_w_given_xge1(pmf, p) == pytest.approx(w_ok, abs=1e-9)
        assert expect_deadend_ratio(pmf, p) == pytest.approx(dead, abs=1e-9)


class TestMultinomial:
    def test_certain_and_empty(self):
        pmf = pmf_from_weights({0: 1, 1: 2, 3: 1})
        q = (0.2, 0.3, 0.5)
        assert multinomial_event_prob(pmf, q, lambda n: True) == pytest.approx(1, abs=1e-12)
        assert multinomial_event_prob(pmf, q, lambda n: False) == 0

    def test_two_splits(self):
        assert multinomial_event_prob(point_mass(2), (0.5, 0.5), lambda n: n[0] >= 1) == \
            pytest.approx(0.75, abs=1e-15)

    def test_bad_vector(self):
        with pytest.raises(DistributionError):
            multinomial_event_prob(point_mass(2), (0.5, 0.6), lambda n: True)

    def test_compositions_count(self):
        for n in range(6):
            for m in range(1, 5):
                comps = list(compositions(n, m))
                assert len(comps) == math.comb(n + m - 1, m - 1) == len(set(comps))
                assert all(sum(c) == n and len(c) == m for c in comps)

    @given(weights, st.lists(st.floats(0.01, 1), min_size=2, max_size=4))
    @settings(max_examples=40)
    def test_partition_sums_to_one(self, w, raw_q):
        pmf = pmf_from_weights(w)
        q = [x / sum(raw_q) for x in raw_q]
        m = len(q)
        parts = [lambda n, i=i: max(range(m), key=lambda j: (n[j], -j)) == i for i in range(m)]
        total = sum(multinomial_event_prob(pmf, q, part) for part in parts)
        assert abs(total - 1) <= 1e-10
