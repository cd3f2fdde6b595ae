"""Reward generators for the static, globally informative and drifting settings.

Randomness is never drawn from a global state. Each replication derives two
independent child streams from ``(master_seed, rep)``: one feeds the
environment (parameter draws and the full ``T x K`` reward table), the other
feeds the policy (the uniformly random first pull). Every policy run in the
same replication therefore sees the same rewards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DomainError, InvalidSpecError
from .reward_model import RewardFunction, derived_estimator_matrix

TIE_TOL = 1e-12


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------
def replication_streams(master_seed: int, rep: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Environment and policy generators for replication ``rep``.

    The child entropy is numpy's ``SeedSequence`` hash of ``master_seed`` with
    spawn key ``(rep,)``, split once more into an environment and a policy
    stream. Both are PCG64 generators.
    """
    root = np.random.SeedSequence(entropy=int(master_seed) & (2**64 - 1), spawn_key=(int(rep),))
    env_ss, pol_ss = root.spawn(2)
    return np.random.Generator(np.random.PCG64(env_ss)), np.random.Generator(np.random.PCG64(pol_ss))


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Noise:
    """Reward noise with support ``[0, 1]``: ``bernoulli`` or ``truncated-gaussian``."""

    kind: str = "bernoulli"
    sigma: float = 0.1

    def __post_init__(self):
        if self.kind not in ("bernoulli", "truncated-gaussian"):
            raise InvalidSpecError(f"unknown noise kind {self.kind!r}")
        if self.kind == "truncated-gaussian" and not self.sigma > 0:
            raise InvalidSpecError("truncated-gaussian noise needs sigma > 0")

    def draw(self, means: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Map uniforms ``u`` to rewards with the given means (same shape)."""
        if self.kind == "bernoulli":
            return (u < means).astype(np.float64)
        return truncated_gaussian_from_uniform(means, self.sigma, u)


def _truncnorm_mean(loc, sigma):
    a = (0.0 - loc) / sigma
    b = (1.0 - loc) / sigma
    return stats.truncnorm.mean(a, b, loc=loc, scale=sigma)


def truncated_gaussian_location(target, sigma: float, tol: float = 1e-9) -> np.ndarray:
    """Pre-truncation location whose ``[0, 1]``-truncated mean equals ``target``.

    The truncated mean is increasing in the location, so a vectorised bisection
    over ``[-1 - 40 sigma, 2 + 40 sigma]`` converges. Targets at 0 or 1 are
    returned unchanged (the reward is then constant).
    """
    target = np.asarray(target, dtype=float)
    lo = np.full(target.shape, -1.0 - 40.0 * sigma)
    hi = np.full(target.shape, 2.0 + 40.0 * sigma)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        m = _truncnorm_mean(mid, sigma)
        below = m < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo < tol):
            break
    return 0.5 * (lo + hi)


def truncated_gaussian_from_uniform(means, sigma: float, u) -> np.ndarray:
    """Truncated-Gaussian rewards on ``[0, 1]`` whose means equal ``means``.

    Uses the inverse CDF of the truncated law, which has the same
    distribution as redrawing a Gaussian until it lands in ``[0, 1]``.
    """
    means = np.asarray(means, dtype=float)
    u = np.asarray(u, dtype=float)
    flat, inv = np.unique(means, return_inverse=True)
    locs = truncated_gaussian_location(flat, sigma)[inv].reshape(means.shape)
    locs = np.broadcast_to(locs, u.shape)
    a = (0.0 - locs) / sigma
    b = (1.0 - locs) / sigma
    out = stats.truncnorm.ppf(u, a, b, loc=locs, scale=sigma)
    means_b = np.broadcast_to(means, u.shape)
    out = np.where(means_b <= 0.0, 0.0, np.where(means_b >= 1.0, 1.0, out))
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# environments
# ---------------------------------------------------------------------------
class _Environment:
    """Shared behaviour: expected rewards per step and the reward table."""

    noise: Noise
    K: int

    def means(self, t: int = 1) -> np.ndarray:
        raise NotImplementedError

    def mean_table(self, T: int) -> np.ndarray:
        """Expected rewards, shape ``(1, K)`` for static settings or ``(T, K)``."""
        return self.means(1)[None, :]

    def reward_table(self, T: int, rng: np.random.Generator) -> np.ndarray:
        """All rewards ``X[t-1, k]`` for ``t = 1..T`` drawn at once."""
        u = rng.random((T, self.K))
        return self.noise.draw(self.mean_table(T), u)

    def sample_reward(self, arm: int, t: int, rng: np.random.Generator) -> float:
        if not 0 <= arm < self.K:
            raise IndexError(f"arm {arm} out of range for K={self.K}")
        mean = float(self.means(t)[arm])
        u = rng.random()
        if self.noise.kind == "bernoulli":
            return 1.0 if u < mean else 0.0
        return float(truncated_gaussian_from_uniform(np.array(mean), self.noise.sigma, np.array(u)))

    def oracle_arm(self, t: int = 1) -> frozenset:
        """All arms maximising the expected reward at step ``t`` (ties within 1e-12)."""
        m = self.means(t)
        best = m.max()
        return frozenset(int(k) for k in np.flatnonzero(m >= best - TIE_TOL))


@dataclass(frozen=True, eq=False)
class GPEnvironment(_Environment):
    """Single global parameter ``theta_star`` shared by all arms."""

    arms: tuple
    theta_star: float
    noise: Noise = field(default_factory=Noise)

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        if len(self.arms) < 1:
            raise InvalidSpecError("a GP environment needs at least one arm")
        if not 0.0 <= self.theta_star <= 1.0:
            raise DomainError(f"theta_star={self.theta_star!r} is outside [0, 1]")
        object.__setattr__(self, "_means", np.array([f.eval(self.theta_star) for f in self.arms]))

    @property
    def K(self) -> int:
        return len(self.arms)

    def means(self, t: int = 1) -> np.ndarray:
        return self._means


@dataclass(frozen=True, eq=False)
class GIEnvironment(_Environment):
    """Per-arm parameters ``u`` plus the learner's known estimator matrix.

    ``estimators[i][j]`` maps arm ``j``'s parameter to an estimate of arm
    ``i``'s; the diagonal is unused. ``sampler`` (anything with
    ``sample(rng) -> u``) redraws ``u`` per replication when given.
    """

    u: tuple
    estimators: list = field(repr=False)
    noise: Noise = field(default_factory=Noise)
    sampler: object = field(default=None, repr=False)

    def __post_init__(self):
        u = tuple(float(v) for v in self.u)
        if any(not 0.0 <= v <= 1.0 for v in u):
            raise DomainError(f"arm parameters must lie in [0, 1], got {u}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "_means", np.array(u))

    @property
    def K(self) -> int:
        return len(self.u)

    def means(self, t: int = 1) -> np.ndarray:
        return self._means

    def redraw(self, rng: np.random.Generator) -> "GIEnvironment":
        """A copy with ``u`` drawn from ``sampler`` (``self`` if there is none)."""
        if self.sampler is None:
            return self
        return GIEnvironment(self.sampler.sample(rng), self.estimators, self.noise, self.sampler)


@dataclass(frozen=True, eq=False)
class DriftEnvironment(_Environment):
    """Global parameter follows ``path[t-1]`` at step ``t``."""

    arms: tuple
    path: np.ndarray = field(repr=False)
    noise: Noise = field(default_factory=Noise)

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        path = np.asarray(self.path, dtype=float)
        if path.ndim != 1 or path.size == 0:
            raise InvalidSpecError("drift path must be a non-empty 1-d sequence")
        if path.min() < 0 or path.max() > 1:
            raise DomainError("drift path leaves [0, 1]")
        object.__setattr__(self, "path", path)
        table = np.column_stack([f.values(path) for f in self.arms])
        object.__setattr__(self, "_table", table)

    @property
    def K(self) -> int:
        return len(self.arms)

    def means(self, t: int = 1) -> np.ndarray:
        return self._table[t - 1]

    def mean_table(self, T: int) -> np.ndarray:
        if T > len(self.path):
            raise InvalidSpecError(f"horizon {T} exceeds drift path length {len(self.path)}")
        return self._table[:T]


def sample_reward(env: _Environment, arm: int, t: int, rng: np.random.Generator) -> float:
    return env.sample_reward(arm, t, rng)


def oracle_arm(env: _Environment, t: int = 1) -> frozenset:
    return env.oracle_arm(t)


# ---------------------------------------------------------------------------
# parameter prior and GI joint samplers
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ParameterPrior:
    """Distribution of the global parameter on ``[0, 1]``.

    ``kind`` is ``uniform``, ``beta`` (with ``a``, ``b``) or ``grid-weighted``
    (``points`` with ``weights``, normalised on construction).
    """

    kind: str = "uniform"
    a: float = 1.0
    b: float = 1.0
    points: tuple = ()
    weights: tuple = ()

    def __post_init__(self):
        if self.kind == "beta":
            if not (self.a > 0 and self.b > 0):
                raise InvalidSpecError("beta prior needs a > 0 and b > 0")
        elif self.kind == "grid-weighted":
            pts = np.asarray(self.points, float)
            w = np.asarray(self.weights, float)
            if pts.size == 0 or pts.shape != w.shape:
                raise InvalidSpecError("grid-weighted prior needs matching points and weights")
            if pts.min() < 0 or pts.max() > 1 or w.min() < 0 or w.sum() <= 0:
                raise InvalidSpecError("grid-weighted prior needs points in [0, 1] and nonnegative weights")
            object.__setattr__(self, "points", tuple(map(float, pts)))
            object.__setattr__(self, "weights", tuple(map(float, w / w.sum())))
        elif self.kind != "uniform":
            raise InvalidSpecError(f"unknown prior kind {self.kind!r}")

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "uniform":
            return float(rng.random())
        if self.kind == "beta":
            return float(rng.beta(self.a, self.b))
        idx = rng.choice(len(self.points), p=np.asarray(self.weights))
        return self.points[int(idx)]

    def pdf(self, theta) -> np.ndarray:
        """Density on ``[0, 1]``; undefined (raises) for the discrete grid prior."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "uniform":
            return np.ones_like(theta)
        if self.kind == "beta":
            return stats.beta.pdf(theta, self.a, self.b)
        raise InvalidSpecError("grid-weighted prior has no density")


def sample_parameter_prior(prior: ParameterPrior, rng: np.random.Generator) -> float:
    return prior.sample(rng)


@dataclass(frozen=True)
class ComonotoneSampler:
    """``u_k = mu_k(theta)`` with ``theta`` drawn from ``prior``.

    With ``spread > 0`` each ``u_k`` gets an independent uniform perturbation
    in ``[-spread, spread]`` (clipped to ``[0, 1]``); this is the
    ``independent-with-point-correlation`` sampler used for negative tests.
    """

    arms: tuple
    prior: ParameterPrior = field(default_factory=ParameterPrior)
    spread: float = 0.0

    def sample(self, rng: np.random.Generator) -> tuple:
        theta = self.prior.sample(rng)
        u = np.array([f.eval(theta) for f in self.arms])
        if self.spread > 0:
            u = np.clip(u + rng.uniform(-self.spread, self.spread, size=u.size), 0.0, 1.0)
        return tuple(float(v) for v in u)

    def default_estimators(self) -> list:
        return derived_estimator_matrix(self.arms)


# ---------------------------------------------------------------------------
# drift paths
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DriftSpec:
    """Drift of the global parameter obeying
    ``|theta^t - theta^t'| <= L |t/tau - t'/tau|^alpha``.

    Kinds and their ``params``:

    * ``ramp``: ``theta0``, ``slope`` (per unit of ``t/tau``; default ``L``).
      Requires ``alpha == 1``.
    * ``sinusoid``: ``center``, ``amplitude``, ``frequency`` (radians per unit
      of ``t/tau``; default ``L / amplitude``), ``phase``.
    * ``piecewise``: ``knots`` as ``(s, theta)`` pairs with ``s = t/tau``,
      linearly interpolated and held constant past the last knot.
    """

    kind: str
    L: float
    tau: float
    alpha: float = 1.0
    params: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.kind not in ("ramp", "sinusoid", "piecewise"):
            raise InvalidSpecError(f"unknown drift kind {self.kind!r}")
        if not (self.L >= 0 and self.tau > 0 and self.alpha > 0):
            raise InvalidSpecError("drift needs L >= 0, tau > 0 and alpha > 0")
        slope, span = self._slope_and_span()
        # A path with Lipschitz constant s (in t/tau) and total span R is
        # alpha-Hölder with constant max(s, R) for alpha <= 1; for alpha > 1
        # only constant paths qualify.
        if self.alpha > 1:
            ok = slope == 0
        elif self.alpha == 1:
            ok = slope <= self.L * (1 + 1e-12)
        else:
            ok = max(slope, span) <= self.L * (1 + 1e-12)
        if not ok:
            raise InvalidSpecError(
                f"{self.kind} drift with slope {slope:.6g} and span {span:.6g} violates "
                f"L={self.L}, alpha={self.alpha}"
            )

    def _slope_and_span(self) -> tuple[float, float]:
        p = self.params
        if self.kind == "ramp":
            if self.alpha != 1:
                raise InvalidSpecError("ramp drift requires alpha = 1")
            slope = abs(float(p.get("slope", self.L)))
            return slope, math.inf if slope else 0.0
        if self.kind == "sinusoid":
            amp = abs(float(p.get("amplitude", 0.0)))
            freq = abs(float(p.get("frequency", self.L / amp if amp else 0.0)))
            return amp * freq, 2 * amp
        knots = np.asarray(p.get("knots", []), dtype=float)
        if knots.ndim != 2 or knots.shape[0] < 1 or knots.shape[1] != 2:
            raise InvalidSpecError("piecewise drift needs a list of (s, theta) knots")
        if knots.shape[0] == 1:
            return 0.0, 0.0
        ds = np.diff(knots[:, 0])
        if np.any(ds <= 0):
            raise InvalidSpecError("piecewise drift knots must have increasing s")
        slope = float(np.max(np.abs(np.diff(knots[:, 1]) / ds)))
        return slope, float(np.ptp(knots[:, 1]))

    def value(self, s: np.ndarray) -> np.ndarray:
        """Parameter at rescaled times ``s = t / tau``."""
        p = self.params
        if self.kind == "ramp":
            return float(p.get("theta0", 0.0)) + float(p.get("slope", self.L)) * s
        if self.kind == "sinusoid":
            amp = float(p.get("amplitude", 0.0))
            freq = float(p.get("frequency", self.L / abs(amp) if amp else 0.0))
            return float(p.get("center", 0.5)) + amp * np.sin(freq * s + float(p.get("phase", 0.0)))
        knots = np.asarray(p["knots"], dtype=float)
        return np.interp(s, knots[:, 0], knots[:, 1])

    def with_tau(self, tau: float) -> "DriftSpec":
        return DriftSpec(self.kind, self.L, tau, self.alpha, dict(self.params))


def gen_drift_path(spec: DriftSpec, T: int) -> np.ndarray:
    """``theta^t`` for ``t = 1..T`` (index ``t - 1``)."""
    if T < 1:
        raise InvalidSpecError("drift path needs T >= 1")
    s = np.arange(1, T + 1, dtype=float) / spec.tau
    path = np.asarray(spec.value(s), dtype=float)
    if path.min() < 0 or path.max() > 1:
        raise InvalidSpecError(
            f"{spec.kind} drift leaves [0, 1] within {T} steps (min {path.min():.4g}, max {path.max():.4g})"
        )
    return path


def _lags(T: int, min_pairs: int) -> np.ndarray:
    n_lags = min(T - 1, max(256, -(-2 * min_pairs // T)))
    head = np.arange(1, min(T - 1, 64) + 1)
    tail = np.unique(np.geomspace(1, T - 1, num=n_lags).astype(np.int64))
    return np.unique(np.concatenate([head, tail]))


def validate_drift(path, L: float, tau: float, alpha: float, min_pairs: int = 1_000_000) -> bool:
    """Check the drift inequality on all pairs (``T <= 1414``) or a lag-stratified sample.

    For long paths every position is compared at each of a set of lags
    spread geometrically over ``1..T-1`` (always including lags 1..64), giving
    at least ``min_pairs`` pairs. The bound gets a relative slack of 1e-12
    and an absolute slack of a few ulps so exact-equality paths pass.
    """
    x = np.asarray(path, dtype=float)
    T = x.size
    if T < 2:
        return True
    s = np.arange(1, T + 1, dtype=float) / tau
    abs_slack = 8 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(x))))
    if T <= 1414:
        lhs = np.abs(x[:, None] - x[None, :])
        rhs = L * np.abs(s[:, None] - s[None, :]) ** alpha
        return bool(np.all(lhs <= rhs * (1 + 1e-12) + abs_slack))
    for lag in _lags(T, min_pairs):
        lhs = np.abs(x[lag:] - x[:-lag])
        rhs = L * np.abs(s[lag:] - s[:-lag]) ** alpha
        if not np.all(lhs <= rhs * (1 + 1e-12) + abs_slack):
            return False
    return True


def default_gi_estimators(arms: Sequence[RewardFunction]) -> list:
    return derived_estimator_matrix(arms)
