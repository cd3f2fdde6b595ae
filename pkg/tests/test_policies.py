import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from global_bandits.environment import GPEnvironment
from global_bandits.errors import SequencingError
from global_bandits.policies import (OraclePolicy, UCB1Policy, WagpGiPolicy, WagpGpPolicy, WindowedWagpPolicy,
                                     tune_tau_h, wagp_gi_select, wagp_gi_update, wagp_gp_select, wagp_gp_update,
                                     window_schedule)
from global_bandits.reward_model import RewardFunction, derived_estimator_matrix, three_arm_example


def feed(policy, pulls):
    """Drive ``policy`` through ``(arm, reward)`` pairs regardless of its own choices."""
    for t, (arm, x) in enumerate(pulls, start=1):
        policy._pending = (arm, t)
        policy.update(arm, x, t)
    return policy


class TestWagpGi:
    def test_first_pull_uniform(self):
        rng = np.random.default_rng(0)
        est = derived_estimator_matrix(three_arm_example())
        counts = np.zeros(3)
        for _ in range(100_000):
            counts[WagpGiPolicy(est).select(1, rng)] += 1
        assert np.all(np.abs(counts / counts.sum() - 1 / 3) <= 0.01)

    @pytest.mark.parametrize("uc,arm", [((0.2, 0.9, 0.5), 1), ((0.7, 0.7, 0.1), 0)])
    def test_argmax(self, uc, arm):
        p = WagpGiPolicy([[None] * 3] * 3)
        p.u_c = list(uc)
        assert wagp_gi_select(p, 5) == arm

    def test_combined_estimate(self):
        f = [[None, lambda u: 0.6], [lambda u: u, None]]
        p = WagpGiPolicy(f)
        feed(p, [(0, 0.5), (0, 0.5), (0, 0.5), (1, 0.7)])
        assert p.N == [3, 1]
        assert p.u_c[0] == pytest.approx(0.525)

    def test_zero_weight_identity(self):
        f = [[None, lambda u: 0.99], [lambda u: 0.01, None]]
        p = feed(WagpGiPolicy(f), [(0, 0.2), (0, 0.4)])
        assert p.u_c[0] == pytest.approx(p.u_hat[0])

    def test_single_arm(self):
        p = feed(WagpGiPolicy([[None]]), [(0, 0.3), (0, 0.9)])
        assert p.u_c[0] == pytest.approx(0.6)

    def test_sequencing(self):
        p = WagpGiPolicy([[None]])
        with pytest.raises(SequencingError):
            wagp_gi_update(p, 0, 0.5, 1)


class TestWagpGp:
    @pytest.mark.parametrize("theta,arm", [(0.6, 1), (0.9, 2)])
    def test_select(self, theta, arm):
        p = WagpGpPolicy(three_arm_example())
        p.theta_hat = theta
        assert wagp_gp_select(p, 2) == arm

    def test_identical_arms(self):
        f = RewardFunction.linear(0.5)
        p = WagpGpPolicy([f, f])
        p.theta_hat = 0.3
        assert p.select(2) == 0

    def test_update_example(self):
        p = WagpGpPolicy([RewardFunction.linear(1.0), RewardFunction.linear(-1.0, 1.0)])
        feed(p, [(0, 0.6), (0, 0.6), (0, 0.6), (1, 0.3)])
        assert p.theta_k == pytest.approx([0.6, 0.7])
        assert p.w == pytest.approx([0.75, 0.25])
        assert p.theta_hat == pytest.approx(0.625)

    def test_identity(self):
        p = feed(WagpGpPolicy([RewardFunction.linear(1.0)]), [(0, 0.42)])
        assert p.theta_hat == pytest.approx(0.42)

    def test_clamped(self):
        p = feed(WagpGpPolicy([RewardFunction.linear(0.5)]), [(0, 0.9)])
        assert p.theta_k[0] == 1.0

    def test_sequencing(self):
        p = WagpGpPolicy(three_arm_example())
        a = p.select(1, np.random.default_rng(0))
        with pytest.raises(SequencingError):
            wagp_gp_update(p, (a + 1) % 3, 0.5, 1)
        with pytest.raises(SequencingError):
            p.update(a, 0.5, 2)

    @given(st.lists(st.tuples(st.integers(0, 2), st.sampled_from([0.0, 1.0])), min_size=1, max_size=80))
    def test_weight_simplex_and_estimate(self, pulls):
        arms = three_arm_example()
        p = WagpGpPolicy(arms)
        for t, (arm, x) in enumerate(pulls, start=1):
            p._pending = (arm, t)
            p.update(arm, x, t)
            assert abs(sum(p.w) - 1.0) <= 1e-12
            assert all(0.0 <= w <= 1.0 for w in p.w)
            assert 0.0 <= p.theta_hat <= 1.0
            for k in range(3):
                if p.N[k]:
                    assert p.theta_k[k] == arms[k].pseudo_inverse(p.X_hat[k])


class TestWindowed:
    def test_schedule(self):
        assert window_schedule(7, 5) == (1, (1, 2))
        assert window_schedule(11, 5)[0] == 2
        assert window_schedule(3, 5) == (1, (1,))

    def test_first_pull_random(self):
        p = WindowedWagpPolicy(three_arm_example(), 5)
        assert p.select(1, np.random.default_rng(4)) in (0, 1, 2)

    def test_acting_window_has_history(self):
        tau_h = 5
        p = WindowedWagpPolicy(three_arm_example(), tau_h)
        rng = np.random.default_rng(1)
        for t in range(1, 60):
            a = p.select(t, rng)
            if t > 2 * tau_h:
                assert sum(p.current.N) >= tau_h
                # the acting window only holds steps from its own span
                assert sum(p.current.N) <= 2 * tau_h
            p.update(a, float(rng.random() < 0.5), t)

    def test_window_counts_match_schedule(self):
        tau_h = 4
        p = WindowedWagpPolicy([RewardFunction.linear(1.0)], tau_h)
        for t in range(1, 40):
            p.select(t, np.random.default_rng(0))
            p.update(0, 0.5, t)
            rho, _ = window_schedule(t, tau_h)
            start = 1 if rho == 1 else (rho - 1) * tau_h + 1
            assert sum(p.current.N) == t - start + 1

    def test_bad_tau(self):
        with pytest.raises(ValueError):
            WindowedWagpPolicy(three_arm_example(), 0)


class TestTuneTau:
    def test_power_of_two(self):
        assert tune_tau_h(4096, 1.0, 1.0) == 256

    def test_unit(self):
        assert tune_tau_h(1.0, 1.0, 1.0) == 1

    def test_square_root_at_half_exponent(self):
        # exponent 0.5 / (0.5 + 0.5) = 1/2
        assert tune_tau_h(1e6, 1.0, 0.5) == 1000

    def test_monotone_in_tau(self):
        vals = [tune_tau_h(t, 1.0, 0.5) for t in (10, 100, 1e3, 1e4, 1e5)]
        assert vals == sorted(vals)


class TestUCB1:
    def test_initial_sweep(self):
        p = UCB1Policy(4)
        for t in range(1, 5):
            assert p.select(t) == t - 1
            p.update(t - 1, 0.0, t)

    def test_tie(self):
        p = UCB1Policy(2)
        p.N, p.u_hat = [10, 10], [0.5, 0.5]
        assert p.select(100) == 0

    def test_bonus(self):
        p = UCB1Policy(2)
        p.N, p.u_hat = [100, 1], [0.6, 0.5]
        assert p.select(101) == 1
        assert math.sqrt(2 * math.log(101)) == pytest.approx(3.04, abs=0.01)


class TestOracle:
    @pytest.mark.parametrize("theta,arm", [(0.6, 1), (0.8, 1)])
    def test_lowest_optimal(self, theta, arm):
        assert OraclePolicy(GPEnvironment(three_arm_example(), theta)).select(1) == arm
