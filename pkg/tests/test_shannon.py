import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclic_entropy.shannon import (
    Distribution,
    DominationError,
    InvalidDistribution,
    MonotonicityViolation,
    RatioChain,
    distribution_from_ratios,
    dominates,
    entropy,
    entropy_bounds_check,
    first_domination_violation,
    ratio_domination_verdict,
    ratio_monotonicity_probe,
    ratios_from_distribution,
    sample_dominating_pair,
    sample_equal_ratio_pair,
)

ratios = st.lists(st.floats(min_value=1e-3, max_value=1.0), min_size=1, max_size=9)


class TestDistribution:
    def test_rejects_bad_sum(self):
        with pytest.raises(InvalidDistribution):
            Distribution([0.5, 0.6])

    def test_rejects_negative(self):
        with pytest.raises(InvalidDistribution):
            Distribution([1.2, -0.2])

    def test_rejects_single_entry(self):
        with pytest.raises(InvalidDistribution):
            Distribution([1.0])

    def test_probs_read_only(self):
        d = Distribution([0.25, 0.75])
        with pytest.raises(ValueError):
            d.probs[0] = 0.5


class TestEntropy:
    def test_three_point_value(self):
        expected = -(0.6 * np.log(0.3) + 0.4 * np.log(0.4))
        assert entropy([0.3, 0.4, 0.3]) == pytest.approx(expected, abs=1e-15)
        assert entropy([0.3, 0.4, 0.3]) == pytest.approx(1.0888999753452238, abs=1e-12)

    @pytest.mark.parametrize("r", [2, 3, 7, 50])
    def test_uniform_is_log_r(self, r):
        rep = entropy_bounds_check(np.full(r, 1.0 / r))
        assert rep.max_attained and rep.uniform and rep.pattern_consistent
        assert rep.entropy == pytest.approx(np.log(r), abs=1e-12)

    def test_point_mass_is_zero(self):
        rep = entropy_bounds_check([0.0, 1.0, 0.0])
        assert rep.entropy == 0.0 and rep.min_attained and rep.point_mass

    @given(st.lists(st.floats(min_value=0, max_value=1), min_size=2, max_size=12).filter(lambda v: sum(v) > 1e-3))
    def test_bounds_and_pattern(self, w):
        p = np.array(w) / sum(w)
        rep = entropy_bounds_check(p / p.sum())
        assert rep.within_bounds and rep.pattern_consistent


class TestDomination:
    def test_worked_example(self):
        assert dominates([0.2, 0.3, 0.5], [0.1, 0.3, 0.6])

    def test_violation_index(self):
        assert first_domination_violation([0.1, 0.3, 0.6], [0.2, 0.3, 0.5]) == 0

    def test_unsorted_rejected(self):
        with pytest.raises(DominationError) as exc:
            dominates([0.5, 0.3, 0.2], [0.2, 0.3, 0.5])
        assert exc.value.index == 0

    def test_verdict_names_index(self):
        with pytest.raises(DominationError, match="index 0"):
            ratio_domination_verdict([0.1, 0.3, 0.6], [0.2, 0.3, 0.5])

    def test_zero_head_allowed(self):
        v = ratio_domination_verdict([0.0, 0.5, 0.5], [0.0, 0.25, 0.75])
        assert v.consistent and v.margin > 0

    def test_equal_pair_is_equality(self):
        v = ratio_domination_verdict([0.2, 0.3, 0.5], [0.2, 0.3, 0.5])
        assert v.equality and v.ratios_equal and v.consistent

    @settings(max_examples=200)
    @given(st.integers(3, 8), st.integers(0, 2**32 - 1))
    def test_dominated_entropy_not_larger(self, r, seed):
        p, q = sample_dominating_pair(r, np.random.default_rng(seed))
        v = ratio_domination_verdict(p, q)
        assert v.consistent and v.entropy_q <= v.entropy_p + 1e-12

    @given(st.integers(3, 8), st.integers(0, 2**32 - 1))
    def test_equal_ratio_pairs(self, r, seed):
        p, q = sample_equal_ratio_pair(r, np.random.default_rng(seed))
        assert abs(entropy(p) - entropy(q)) <= 1e-12


class TestRatioChain:
    def test_two_point_chain(self):
        np.testing.assert_allclose(distribution_from_ratios([1 / 3]).probs, [0.25, 0.75], atol=1e-15)

    def test_all_ones_uniform(self):
        np.testing.assert_allclose(distribution_from_ratios([1.0] * 4).probs, np.full(5, 0.2), atol=1e-15)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            RatioChain([0.5, 0.0])

    @given(ratios)
    def test_round_trip(self, s):
        c = ratios_from_distribution(distribution_from_ratios(s))
        np.testing.assert_allclose(c.ratios, s, rtol=1e-10)

    @given(ratios)
    def test_ascending(self, s):
        assert np.all(np.diff(distribution_from_ratios(s).probs) >= -1e-15)


def _analytic_slope(s, k):
    t = distribution_from_ratios(s).probs
    dt = t * ((np.arange(t.size) <= k) - t[: k + 1].sum()) / s[k]
    return float(np.sum(-(np.log(t) + 1.0) * dt))


class TestMonotonicityProbe:
    def test_matches_chain_rule(self):
        s = [0.3, 0.6, 0.9]
        for k in range(3):
            assert ratio_monotonicity_probe(s, k, 1e-5) == pytest.approx(_analytic_slope(np.array(s), k), rel=1e-6)

    @settings(max_examples=100)
    @given(st.lists(st.floats(min_value=0.05, max_value=0.95), min_size=1, max_size=7), st.data())
    def test_positive_inside_unit_box(self, s, data):
        k = data.draw(st.integers(0, len(s) - 1))
        assert ratio_monotonicity_probe(s, k, 1e-6) > 0

    def test_step_outside_domain(self):
        with pytest.raises(ValueError):
            ratio_monotonicity_probe([0.99], 0, 0.05)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            ratio_monotonicity_probe([0.5], 3, 1e-3)

    def test_violation_type(self):
        assert issubclass(MonotonicityViolation, ArithmeticError)
