import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from global_bandits.analysis import (
    BayesConfig,
    StructuralSummary,
    avg_regret_bound,
    bayes_constant,
    bayes_risk_bound,
    empirical_regret,
    estimate_distance_density_bound,
    informativeness_check,
    lemma1_lower_bound,
    lower_bound_boundary,
    lower_bound_instance,
    lower_bound_value,
    one_step_bound,
    optimality_regions,
    regime_constants,
    structural_summary,
    suboptimality_distance,
    suboptimality_distance_grid,
    suboptimality_gap,
    three_regime_bound,
    worst_case_bound,
    worst_case_constants,
)
from global_bandits.environment import ComonotoneSampler, GIEnvironment, GPEnvironment, ParameterPrior
from global_bandits.errors import AggregationError, InvalidFunctionError, OutOfScopeError
from global_bandits.reward_model import (
    AggregateHolder,
    EstimatorFunction,
    RewardFunction,
    aggregate_holder,
    derived_estimator_matrix,
    three_arm_example,
    two_linear_arms,
)
from global_bandits.simulation import run_replication

ONES = AggregateHolder(1.0, 1.0, 1.0, 1.0)
B1 = 0.430164


def models():
    return [
        three_arm_example(),
        two_linear_arms(),
        lower_bound_instance(3),
        [RewardFunction.exponential(0.3, 1.0), RewardFunction.linear(-0.5, 0.9), RewardFunction.power(2.0)],
        [RewardFunction.piecewise([(0, 0.2), (0.4, 0.6), (1, 0.7)]), RewardFunction.linear(0.9, 0.05)],
    ]


class TestRegions:
    def test_three_arm(self):
        r = optimality_regions(three_arm_example())
        (a,), (b,), (c,) = r.regions
        assert a[0] == 0 and a[1] == pytest.approx(B1, abs=1e-6)
        assert b[0] == pytest.approx(B1, abs=1e-6) and b[1] == pytest.approx(0.8, abs=1e-9)
        assert c == pytest.approx((0.8, 1.0), abs=1e-9)

    def test_symmetric_pair(self):
        r = optimality_regions(two_linear_arms())
        assert r.regions[0][0] == pytest.approx((0.5, 1.0)) and len(r.regions[0]) == 1
        assert r.regions[1][0] == pytest.approx((0.0, 0.5)) and len(r.regions[1]) == 1

    def test_dominated_arm_is_empty(self):
        model = [RewardFunction.linear(0.1, 0.5), RewardFunction.linear(0.2, 0.0)]
        assert optimality_regions(model).regions[1] == ()

    def test_coarse_resolution_rejected(self):
        with pytest.raises(ValueError):
            optimality_regions(three_arm_example(), 1e-2)

    @pytest.mark.parametrize("model", models())
    def test_partition(self, model):
        r = optimality_regions(model)
        grid = np.linspace(0, 1, 2001)
        vals = np.vstack([f.values(grid) for f in model])
        for i, th in enumerate(grid):
            owners = r.owners(th)
            assert owners, th
            if len(owners) > 1:
                continue
            # interior points: the owner strictly wins
            (k,) = owners
            others = np.delete(vals[:, i], k)
            if others.size:
                assert vals[k, i] >= others.max() - 1e-9
        # no two arms share interior points
        K = len(model)
        for i in range(K):
            for j in range(i + 1, K):
                for lo, hi in r.regions[i]:
                    for lo2, hi2 in r.regions[j]:
                        assert min(hi, hi2) - max(lo, lo2) <= 1e-9


class TestGapAndDistance:
    def test_gap_examples(self):
        m = three_arm_example()
        assert suboptimality_gap(m, 0.6) == pytest.approx(0.12)
        assert suboptimality_gap(m, 0.8) == 0.0
        assert suboptimality_gap([RewardFunction.linear(1.0)], 0.3) == 1.0

    @pytest.mark.parametrize("theta,want", [(0.2, 0.230164), (0.6, 0.169836), (0.9, 0.1)])
    def test_distance_examples(self, theta, want):
        m = three_arm_example()
        assert suboptimality_distance(m, theta) == pytest.approx(want, abs=1e-5)
        assert suboptimality_distance_grid(m, theta) == pytest.approx(want, abs=1e-5)

    def test_single_arm_distance(self):
        assert suboptimality_distance([RewardFunction.power(2.0)], 0.4) == 1.0

    def test_tied_arms_both_count_as_optimal(self):
        # at 0.8 arms 1 and 2 tie, so only arm 0's region is suboptimal
        m = three_arm_example()
        assert suboptimality_distance(m, 0.8) == pytest.approx(0.8 - B1, abs=1e-5)
        assert suboptimality_distance(m, 0.8 - 1e-6) == pytest.approx(1e-6, abs=1e-9)

    @pytest.mark.parametrize("model", models())
    def test_lemma1_on_grid(self, model):
        h = aggregate_holder(model)
        for th in np.linspace(0, 1, 1000):
            d = suboptimality_distance(model, float(th))
            assert d >= lemma1_lower_bound(suboptimality_gap(model, float(th)), h.D2, h.gamma2) - 1e-9

    @pytest.mark.parametrize("model", models())
    def test_matches_brute_force(self, model):
        for th in np.linspace(0.013, 0.987, 23):
            fast = suboptimality_distance(model, float(th))
            slow = suboptimality_distance_grid(model, float(th), resolution=1e-5)
            assert abs(fast - slow) <= 2e-4

    @given(st.floats(0, 1))
    def test_in_unit_interval(self, th):
        assert 0.0 <= suboptimality_distance(three_arm_example(), th) <= 1.0

    def test_distance_rejects_outside(self):
        with pytest.raises(ValueError):
            suboptimality_distance(three_arm_example(), 1.2)


class TestLemma1:
    def test_examples(self):
        assert lemma1_lower_bound(0.2, 1, 1) == pytest.approx(0.1)
        assert lemma1_lower_bound(0.12, 2, 0.5) == pytest.approx(0.0009)
        assert lemma1_lower_bound(1e-14, 1, 1) == pytest.approx(0.0, abs=1e-13)


class TestRegimeConstants:
    def test_example(self):
        assert regime_constants(0.5, 2, 1.0, 1.0) == (9, 27)

    @given(st.floats(0.05, 1.0), st.integers(1, 6), st.floats(0.5, 3.0), st.floats(0.2, 1.0))
    def test_defining_property(self, Delta, K, D1, g1):
        C1, C2 = regime_constants(Delta, K, D1, g1)
        assert C1 <= C2
        a1 = D1 ** (2 / g1) * K / (2 * Delta ** (2 / g1))
        for C, a in ((C1, a1), (C2, 2 * a1)):
            assert C >= a * math.log(C)
            if C > 1:
                assert C - 1 < a * math.log(C - 1)
            # stays true beyond
            for tau in range(C, C + 50):
                assert tau >= a * math.log(tau)

    def test_nonincreasing_in_distance(self):
        prev = math.inf
        for d in np.linspace(0.01, 1.0, 60):
            C1, _ = regime_constants(float(d), 3, 2.0, 0.5)
            assert C1 <= prev
            prev = C1

    def test_nonpositive_distance(self):
        with pytest.raises(OutOfScopeError):
            regime_constants(0.0, 2, 1.0, 1.0)

    def test_summary_invariants(self):
        m = three_arm_example()
        h = aggregate_holder(m)
        s = structural_summary(m, 0.6)
        assert isinstance(s, StructuralSummary)
        assert s.C1 <= s.C2
        assert s.Delta_min >= lemma1_lower_bound(s.delta_min, h.D2, h.gamma2) - 1e-9
        b = structural_summary(m, 0.8)
        assert b.delta_min == 0.0 and b.C1 <= b.C2


class TestBounds:
    def test_one_step(self):
        assert one_step_bound(4, 1, 1, 1, 1, 1) == pytest.approx(1.25331, abs=1e-5)
        assert one_step_bound(1, 1, 1, 1, 1, 1) == pytest.approx(2.50663, abs=1e-5)
        assert one_step_bound(1e12, 1, 1, 1, 1, 1) < 1e-5

    def test_worst_case(self):
        assert worst_case_bound(100, 1, 1, 1, 1, 1) == pytest.approx(56.146, abs=1e-3)
        S1, S2 = worst_case_constants(1, 1, 1, 1, 1)
        assert worst_case_bound(0, 1, 1, 1, 1, 1) == pytest.approx(1 + 2 * S2 - S2)
        assert S1 == pytest.approx(1 + S2)
        v = worst_case_bound(np.arange(1, 500), 3, 2, 2, 0.5, 0.5)
        assert np.all(np.diff(v) >= 0)

    @pytest.mark.parametrize("h", [ONES, AggregateHolder(2, 0.5, 2, 0.5), AggregateHolder(1.5, 0.3, 1, 1)])
    @pytest.mark.parametrize("K", [1, 3])
    def test_summation_inequality(self, h, K):
        t = np.arange(1, 20001)
        cum = np.cumsum(one_step_bound(t, K, h.D1, h.D2, h.gamma1, h.gamma2))
        wc = worst_case_bound(t, K, h.D1, h.D2, h.gamma1, h.gamma2)
        assert np.all(cum <= wc * (1 + 1e-6))

    def test_three_regime(self):
        s = StructuralSummary(0.6, 0.1, 0.5, 9, 27)
        S1, S2 = worst_case_constants(2, 1, 1, 1, 1)
        v1 = S1 + S2 * 9**0.5
        assert three_regime_bound(9, s, 2, ONES) == pytest.approx(v1)
        assert three_regime_bound(27, s, 2, ONES) - v1 == pytest.approx(1 + 4 * math.log(3))
        far = three_regime_bound(np.array([28.0, 1e6, 1e12]), s, 2, ONES)
        assert np.ptp(far) == 0 and far[0] == pytest.approx(v1 + 1 + 4 * math.log(3) + 2 * math.pi**2 / 3)

    def test_three_regime_falls_back(self):
        s = StructuralSummary(0.8, 0.0, 0.0, None, None)
        assert three_regime_bound(50, s, 2, ONES) == pytest.approx(worst_case_bound(50, 2, 1, 1, 1, 1))

    def test_bayes(self):
        assert bayes_constant(1, 1, 1, 1, 2) == pytest.approx(math.pi)
        assert bayes_risk_bound(math.e, 1, 1, 1, 1, 1, 2) == pytest.approx(1 + 3 * math.pi, abs=1e-9)
        assert bayes_constant(2, 1, 1, 1, 6) == pytest.approx(3 * bayes_constant(2, 1, 1, 1, 2))
        g_lt_1 = bayes_risk_bound(100, 1, 1, 1, 1, 0.5, 2)
        assert g_lt_1 == pytest.approx(1 + math.pi * (1 + 100**0.5 / 0.5))
        with pytest.raises(ValueError):
            bayes_risk_bound(10, 1, 1, 1, 1, 1, 0)
        with pytest.raises(ValueError):
            BayesConfig(ParameterPrior(), 0.0)

    def test_density_estimate_two_linear(self):
        # distance |theta - 1/2| under a uniform prior has density 2
        assert estimate_distance_density_bound(two_linear_arms(), ParameterPrior()) == pytest.approx(2.0, rel=1e-3)

    def test_lower_bound_value(self):
        assert lower_bound_value(1000, 1 / 3, 1) == pytest.approx(14.82, abs=5e-3)
        assert lower_bound_value(8, 1, 1) == pytest.approx(0.04419, abs=1e-5)
        v = lower_bound_value(np.arange(8, 200), 1 / 3, 1)
        assert np.all(np.diff(v) > 0)
        with pytest.raises(OutOfScopeError):
            lower_bound_value(7, 1, 1)

    def test_avg_regret(self):
        assert avg_regret_bound(4096, 1, 1, 1, ONES) == pytest.approx(0.4755, abs=1e-4)
        v = avg_regret_bound(np.geomspace(2, 1e8, 50), 3, 1, 1, AggregateHolder(2, 0.5, 2, 0.5))
        assert np.all(np.diff(v) < 0)
        zero_L = avg_regret_bound(4096, 1, 0, 1, ONES)
        assert zero_L == pytest.approx(4096 ** (-2 / 3) + 2 * math.sqrt(math.pi) / 16)


class TestLowerBoundInstance:
    @pytest.mark.parametrize("g,b", [(1, 0.5), (3, 0.793701), (5, 2 ** -0.2)])
    def test_boundary(self, g, b):
        m = lower_bound_instance(g)
        assert lower_bound_boundary(g) == pytest.approx(b, abs=1e-6)
        assert m[0].eval(lower_bound_boundary(g)) == pytest.approx(0.5)
        assert m[1].eval(lower_bound_boundary(g)) == pytest.approx(0.5)
        (reg,) = optimality_regions(m).regions[0]
        assert reg[0] == pytest.approx(lower_bound_boundary(g), abs=1e-9)

    def test_constants(self):
        h = aggregate_holder(lower_bound_instance(3))
        assert h.gamma1 == pytest.approx(1 / 3) and h.gamma2 == 1

    @pytest.mark.parametrize("g", [0, 2, 4, 1.5, -1])
    def test_rejects(self, g):
        with pytest.raises(InvalidFunctionError):
            lower_bound_instance(g)


class TestInformativeness:
    def _shifted(self, arms, delta):
        base = derived_estimator_matrix(arms)
        return [[None if f is None else EstimatorFunction(f.source_arm, f.target_arm,
                                                          lambda u, _f=f: _f(u) + delta)
                 for f in row] for row in base]

    def _env(self, est):
        arms = tuple(three_arm_example())
        sampler = ComonotoneSampler(arms)
        return GIEnvironment(sampler.sample(np.random.default_rng(0)), est, sampler=sampler)

    def test_derived_is_informative(self):
        est = derived_estimator_matrix(three_arm_example())
        assert informativeness_check(self._env(est), 1e-6, 1000)

    def test_gross_violation(self):
        assert not informativeness_check(self._env(self._shifted(three_arm_example(), 0.3)), 0.1, 1000)

    def test_margin(self):
        assert informativeness_check(self._env(self._shifted(three_arm_example(), 0.04)), 0.05, 1000)


class TestEmpiricalRegret:
    def test_oracle_zero(self):
        env = GPEnvironment(three_arm_example(), 0.3)
        s = empirical_regret([run_replication(env, "oracle", 200, 5, r) for r in range(5)])
        assert not s.mean.any() and not s.stderr.any()

    def test_constant_gap(self):
        s = empirical_regret(np.full((1, 50), 0.12))
        assert s.mean[-1] == pytest.approx(0.12 * 50)
        assert s.average == pytest.approx(np.full(50, 0.12))

    def test_bernoulli_thinning_stderr(self):
        rng = np.random.default_rng(11)
        p, T = 0.3, 400
        mat = (rng.random((100, T)) < p).astype(float)
        s = empirical_regret(mat)
        want = math.sqrt(T * p * (1 - p)) / math.sqrt(100)
        assert want / 4 <= s.stderr[-1] <= want * 4

    def test_mismatched(self):
        env = GPEnvironment(three_arm_example(), 0.3)
        with pytest.raises(AggregationError):
            empirical_regret([run_replication(env, "oracle", 10, 1, 0), run_replication(env, "oracle", 11, 1, 0)])

    def test_single_trace(self):
        tr = run_replication(GPEnvironment(three_arm_example(), 0.6), "ucb1", 100, 1, 0)
        s = empirical_regret(tr)
        assert s.replications == 1 and s.mean[-1] == pytest.approx(tr.regret.sum())
