"""One replication of one or more policies against a shared reward table."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .environment import GIEnvironment, GPEnvironment, replication_streams
from .errors import InvalidSpecError
from .policies import RunTrace, WagpGiPolicy
from .reward_model import derived_estimator_matrix

POLICIES = ("wagp_gp", "wagp_gi", "windowed_wagp", "ucb1", "oracle")


@dataclass(frozen=True)
class PolicySpec:
    """Which policy to run, plus its parameters (``tau_h`` for the windowed one)."""

    policy: str
    params: dict = field(default_factory=dict, hash=False)
    label: str | None = None

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise InvalidSpecError(f"unknown policy {self.policy!r}; expected one of {', '.join(POLICIES)}")

    @property
    def name(self) -> str:
        return self.label or self.policy


def _arms_of(env):
    arms = getattr(env, "arms", None)
    if arms is None:
        raise InvalidSpecError("this policy needs reward functions; the GI environment has none")
    return arms


def _run_gi(env, X, first_arm):
    estimators = env.estimators
    pol = WagpGiPolicy(estimators)

    class _First:
        def integers(self, K):
            return first_arm

    T = X.shape[0]
    arms = np.empty(T, dtype=np.int64)
    for t in range(1, T + 1):
        a = pol.select(t, _First())
        pol.update(a, float(X[t - 1, a]), t)
        arms[t - 1] = a
    return arms


def play(env, spec: PolicySpec, X: np.ndarray, means: np.ndarray, first_arm: int, record: bool = False) -> RunTrace:
    """Run ``spec`` on the reward table ``X`` with expected rewards ``means``.

    ``means`` has shape ``(1, K)`` for static environments or ``(T, K)``.
    """
    T = X.shape[0]
    est = None
    history = None
    p = spec.policy
    if p == "wagp_gp":
        arms, est, xh, nn = kernels.run_wagp_gp(_arms_of(env), X, first_arm, record)
        if record:
            history = {"X_hat": xh, "N": nn}
    elif p == "windowed_wagp":
        tau_h = spec.params.get("tau_h")
        if tau_h is None:
            raise InvalidSpecError("windowed_wagp needs a resolved tau_h")
        arms, est = kernels.run_windowed_wagp(_arms_of(env), X, first_arm, int(tau_h))
    elif p == "ucb1":
        arms = kernels.run_ucb1(X)
    elif p == "wagp_gi":
        if isinstance(env, GIEnvironment):
            gi_env = env
        else:
            gi_env = GIEnvironment(tuple(means[0]), derived_estimator_matrix(_arms_of(env)), env.noise)
        arms = _run_gi(gi_env, X, first_arm)
    else:
        arms = np.argmax(means, axis=1).astype(np.int64)
        if arms.size == 1:
            arms = np.full(T, arms[0], dtype=np.int64)
    rows = np.arange(T) if means.shape[0] > 1 else np.zeros(T, dtype=np.int64)
    best = means.max(axis=1)[rows]
    regret = np.maximum(best - means[rows, arms], 0.0)
    rewards = X[np.arange(T), arms]
    if est is None:
        est = np.full(T, np.nan)
    return RunTrace(spec.name, arms, rewards, est, regret, history)


def replicate(env, specs, T: int, master_seed: int, rep: int, record: bool = False,
              theta_prior=None) -> tuple:
    """One replication: every policy in ``specs`` faces the same reward table.

    With ``theta_prior`` the global parameter of a GP environment is first
    drawn from the prior on the environment stream. Returns
    ``(env_used, [RunTrace, ...])``.
    """
    env_rng, pol_rng = replication_streams(master_seed, rep)
    if theta_prior is not None:
        if not isinstance(env, GPEnvironment):
            raise InvalidSpecError("a parameter prior needs a GP environment")
        env = GPEnvironment(env.arms, theta_prior.sample(env_rng), env.noise)
    elif isinstance(env, GIEnvironment):
        env = env.redraw(env_rng)
    means = env.mean_table(T)
    X = env.reward_table(T, env_rng)
    first_arm = int(pol_rng.integers(env.K))
    return env, [play(env, s, X, means, first_arm, record) for s in specs]


def run_replication(env, spec, T: int, master_seed: int, rep: int, record: bool = False) -> RunTrace:
    """Single-policy convenience wrapper around :func:`replicate`."""
    if isinstance(spec, str):
        spec = PolicySpec(spec)
    return replicate(env, [spec], T, master_seed, rep, record)[1][0]


__all__ = ["PolicySpec", "POLICIES", "play", "replicate", "run_replication"]
