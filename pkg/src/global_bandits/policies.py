"""Decision policies behind a ``select(t, rng)`` / ``update(arm, reward, t)`` interface.

All argmax operations break ties towards the lowest arm index. Time steps
are 1-based. The arithmetic in the WAGP, windowed WAGP and UCB1 classes is
kept in the same order as the compiled kernels so the two backends agree
bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SequencingError
from .reward_model import RewardFunction


def _argmax(values: Sequence[float]) -> int:
    best, arm = values[0], 0
    for k in range(1, len(values)):
        if values[k] > best:
            best, arm = values[k], k
    return arm


class Policy:
    """Base class: enforces the select-then-update sequencing."""

    name = "policy"

    def __init__(self, K: int):
        self.K = K
        self._pending = None

    def select(self, t: int, rng=None) -> int:
        arm = self._select(t, rng)
        self._pending = (arm, t)
        return arm

    def update(self, arm: int, reward: float, t: int) -> None:
        if self._pending != (arm, t):
            raise SequencingError(f"update(arm={arm}, t={t}) does not match the last selection {self._pending}")
        self._pending = None
        self._update(arm, reward, t)

    def estimate(self) -> float:
        """Scalar estimate recorded in traces (the global parameter where defined)."""
        return math.nan

    def _select(self, t, rng):
        raise NotImplementedError

    def _update(self, arm, reward, t):
        raise NotImplementedError


def _random_arm(K: int, rng) -> int:
    if rng is None:
        raise ValueError("the first selection needs a random generator")
    return int(rng.integers(K))


class WagpGiPolicy(Policy):
    """Weighted-arm greedy policy for globally informative bandits.

    Keeps per-arm sample means ``u_hat`` and combined estimates
    ``u_c[k] = (sum_{i != k} N_i f_{k,i}(u_hat_i) + N_k u_hat_k) / t``,
    recomputed from scratch after every update.
    """

    name = "wagp_gi"

    def __init__(self, estimators: Sequence[Sequence]):
        super().__init__(len(estimators))
        self.estimators = estimators
        self.N = [0] * self.K
        self.u_hat = [0.0] * self.K
        self.u_c = [0.0] * self.K

    def _select(self, t, rng):
        if t == 1:
            return _random_arm(self.K, rng)
        return _argmax(self.u_c)

    def _update(self, arm, reward, t):
        n = self.N[arm]
        self.u_hat[arm] = (n * self.u_hat[arm] + reward) / (n + 1)
        self.N[arm] = n + 1
        for k in range(self.K):
            acc = self.N[k] * self.u_hat[k]
            for i in range(self.K):
                if i != k and self.N[i]:
                    acc += self.N[i] * self.estimators[k][i](self.u_hat[i])
            self.u_c[k] = acc / t


class WagpGpPolicy(Policy):
    """Weighted-arm greedy policy for globally parametrized bandits.

    State: counts ``N``, sample means ``X_hat``, per-arm parameter estimates
    ``theta_k`` (pseudo-inverse of the sample mean; 0 for unpulled arms),
    weights ``w = N / t`` and the global estimate ``theta_hat = sum w_k theta_k``.
    """

    name = "wagp_gp"

    def __init__(self, arms: Sequence[RewardFunction]):
        super().__init__(len(arms))
        self.arms = list(arms)
        self.N = [0] * self.K
        self.X_hat = [0.0] * self.K
        self.theta_k = [0.0] * self.K
        self.w = [0.0] * self.K
        self.theta_hat = 0.0

    def _select(self, t, rng):
        if t == 1:
            return _random_arm(self.K, rng)
        th = self.theta_hat
        return _argmax([f._eval(th) for f in self.arms])

    def _update(self, arm, reward, t):
        n = self.N[arm]
        self.X_hat[arm] = (n * self.X_hat[arm] + reward) / (n + 1)
        self.N[arm] = n + 1
        self.theta_k[arm] = self.arms[arm].pseudo_inverse(self.X_hat[arm])
        theta = 0.0
        for k in range(self.K):
            self.w[k] = self.N[k] / t
            theta += self.w[k] * self.theta_k[k]
        self.theta_hat = theta

    def estimate(self) -> float:
        return self.theta_hat


class _Window:
    __slots__ = ("N", "X_hat", "theta_k")

    def __init__(self, K: int):
        self.N = [0] * K
        self.X_hat = [0.0] * K
        self.theta_k = [0.0] * K

    def add(self, f: RewardFunction, arm: int, reward: float):
        n = self.N[arm]
        self.X_hat[arm] = (n * self.X_hat[arm] + reward) / (n + 1)
        self.N[arm] = n + 1
        self.theta_k[arm] = f.pseudo_inverse(self.X_hat[arm])

    def theta(self) -> float:
        total = sum(self.N)
        theta = 0.0
        for k in range(len(self.N)):
            theta += (self.N[k] / total) * self.theta_k[k]
        return theta


def window_schedule(t: int, tau_h: int) -> tuple[int, tuple]:
    """Acting instance and the instances that record the observation at ``t``.

    Instance ``rho`` accumulates over ``[(rho-1) tau_h + 1, (rho+1) tau_h]``
    and acts over ``[rho tau_h + 1, (rho+1) tau_h]``; instance 1 also acts
    over ``[1, tau_h]``.
    """
    block = (t - 1) // tau_h
    acting = max(1, block)
    recording = (block, block + 1) if block >= 1 else (1,)
    return acting, recording


class WindowedWagpPolicy(Policy):
    """WAGP on overlapping windows of length ``2 tau_h`` for a drifting parameter.

    Two window accumulators are live at a time: the acting one and the one
    that will act next. Every observation is recorded into both.
    """

    name = "windowed_wagp"

    def __init__(self, arms: Sequence[RewardFunction], tau_h: int):
        super().__init__(len(arms))
        if tau_h < 1:
            raise ValueError("tau_h must be a positive integer")
        self.arms = list(arms)
        self.tau_h = int(tau_h)
        self.rho = 1
        self.current = _Window(self.K)
        self.upcoming = _Window(self.K)
        self._theta = 0.0

    def _roll(self, t):
        block = (t - 1) // self.tau_h
        if block >= 2 and block != self.rho:
            self.current = self.upcoming
            self.upcoming = _Window(self.K)
            self.rho = block

    def _select(self, t, rng):
        self._roll(t)
        if sum(self.current.N) == 0:
            return _random_arm(self.K, rng)
        th = self.current.theta()
        return _argmax([f._eval(th) for f in self.arms])

    def _update(self, arm, reward, t):
        f = self.arms[arm]
        self.current.add(f, arm, reward)
        if (t - 1) // self.tau_h >= 1:
            self.upcoming.add(f, arm, reward)
        self._theta = self.current.theta()

    def estimate(self) -> float:
        return self._theta


class UCB1Policy(Policy):
    """Each arm once, then ``argmax u_hat_k + sqrt(2 ln t / N_k)``."""

    name = "ucb1"

    def __init__(self, K: int):
        super().__init__(K)
        self.N = [0] * K
        self.u_hat = [0.0] * K

    def _select(self, t, rng):
        if t <= self.K:
            return t - 1
        lt = math.log(t)
        return _argmax([self.u_hat[k] + math.sqrt(2.0 * lt / self.N[k]) for k in range(self.K)])

    def _update(self, arm, reward, t):
        n = self.N[arm]
        self.u_hat[arm] = (n * self.u_hat[arm] + reward) / (n + 1)
        self.N[arm] = n + 1


class OraclePolicy(Policy):
    """Lowest-index optimal arm at each step; knows the environment."""

    name = "oracle"

    def __init__(self, env):
        super().__init__(env.K)
        self.env = env

    def _select(self, t, rng):
        return min(self.env.oracle_arm(t))

    def _update(self, arm, reward, t):
        pass


def tune_tau_h(tau: float, alpha: float, gamma2: float) -> int:
    """Half window length ``round(tau^(alpha gamma2 / (alpha gamma2 + 1/2)))``, at least 1."""
    if tau <= 1:
        return 1
    e = alpha * gamma2 / (alpha * gamma2 + 0.5)
    return max(1, int(round(tau**e)))


@dataclass
class RunTrace:
    """Per-step record of one run.

    ``estimate`` holds the global-parameter estimate after each update
    (NaN for policies without one). ``history`` optionally carries per-step
    state snapshots (``X_hat`` and ``N`` arrays of shape ``(T, K)``).
    """

    policy: str
    arms: np.ndarray
    rewards: np.ndarray
    estimate: np.ndarray
    regret: np.ndarray
    history: dict | None = None

    @property
    def horizon(self) -> int:
        return int(self.arms.size)

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.regret)

    def rows(self):
        cum = self.cum_regret
        for i in range(self.horizon):
            yield (i + 1, int(self.arms[i]), float(self.rewards[i]), float(self.estimate[i]),
                   float(self.regret[i]), float(cum[i]))


def wagp_gi_select(state: WagpGiPolicy, t: int, rng=None) -> int:
    return state.select(t, rng)


def wagp_gi_update(state: WagpGiPolicy, arm: int, reward: float, t: int) -> WagpGiPolicy:
    state.update(arm, reward, t)
    return state


def wagp_gp_select(state: WagpGpPolicy, t: int, rng=None) -> int:
    return state.select(t, rng)


def wagp_gp_update(state: WagpGpPolicy, arm: int, reward: float, t: int) -> WagpGpPolicy:
    state.update(arm, reward, t)
    return state
