"""Pure-Python twins of the compiled loops, driven through the policy classes."""

from __future__ import annotations

import numpy as np

from ..policies import UCB1Policy, WagpGpPolicy, WindowedWagpPolicy


class _Fixed:
    """Stands in for a generator whose only job is the first random pick."""

    def __init__(self, arm: int):
        self.arm = int(arm)

    def integers(self, K):
        return self.arm


def run_wagp_gp(model, rewards, first_arm, record=False):
    X = np.asarray(rewards, dtype=np.float64)
    T, K = X.shape
    pol = WagpGpPolicy(model)
    rng = _Fixed(first_arm)
    arms = np.empty(T, dtype=np.int64)
    est = np.empty(T, dtype=np.float64)
    xh = np.empty((T, K)) if record else None
    nn = np.empty((T, K), dtype=np.int64) if record else None
    for t in range(1, T + 1):
        a = pol.select(t, rng)
        pol.update(a, float(X[t - 1, a]), t)
        arms[t - 1] = a
        est[t - 1] = pol.theta_hat
        if record:
            xh[t - 1] = pol.X_hat
            nn[t - 1] = pol.N
    return arms, est, xh, nn


def run_windowed_wagp(model, rewards, first_arm, tau_h):
    X = np.asarray(rewards, dtype=np.float64)
    T = X.shape[0]
    pol = WindowedWagpPolicy(model, tau_h)
    rng = _Fixed(first_arm)
    arms = np.empty(T, dtype=np.int64)
    est = np.empty(T, dtype=np.float64)
    for t in range(1, T + 1):
        a = pol.select(t, rng)
        pol.update(a, float(X[t - 1, a]), t)
        arms[t - 1] = a
        est[t - 1] = pol.estimate()
    return arms, est


def run_ucb1(rewards):
    X = np.asarray(rewards, dtype=np.float64)
    T, K = X.shape
    pol = UCB1Policy(K)
    arms = np.empty(T, dtype=np.int64)
    for t in range(1, T + 1):
        a = pol.select(t)
        pol.update(a, float(X[t - 1, a]), t)
        arms[t - 1] = a
    return arms
