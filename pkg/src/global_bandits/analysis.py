"""Structural quantities of a parametrized model and closed-form regret bounds.

Everything here is a pure function of immutable inputs. The bound
evaluators take the model-level Hölder constants ``(D1, gamma1, D2, gamma2)``
and write ``g = gamma1 * gamma2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import optimize, special

from .environment import ParameterPrior
from .errors import AggregationError, InvalidFunctionError, OutOfScopeError
from .reward_model import AggregateHolder, RewardFunction, aggregate_holder

TIE_TOL = 1e-12
ROOT_XTOL = 1e-12


# ---------------------------------------------------------------------------
# optimality regions
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class OptimalityRegions:
    """Closed intervals of ``[0, 1]`` on which each arm is optimal.

    ``regions[k]`` is a tuple of ``(lo, hi)`` pairs (empty when arm ``k`` is
    never optimal); ``boundaries`` lists every interior switch point.
    """

    regions: tuple
    boundaries: tuple

    def owners(self, theta: float) -> frozenset:
        return frozenset(k for k, ivs in enumerate(self.regions)
                         if any(lo - 1e-9 <= theta <= hi + 1e-9 for lo, hi in ivs))


def _optimal_set(model, theta: float) -> list[int]:
    v = [f._eval(theta) for f in model]
    best = max(v)
    return [k for k, x in enumerate(v) if x >= best - TIE_TOL]


def _pair_roots(fi: RewardFunction, fj: RewardFunction, grid: np.ndarray) -> list[float]:
    d = fi.values(grid) - fj.values(grid)
    roots = []
    s = np.sign(d)
    for c in np.flatnonzero(s[:-1] * s[1:] < 0):
        a, b = float(grid[c]), float(grid[c + 1])
        roots.append(optimize.bisect(lambda x: fi._eval(x) - fj._eval(x), a, b, xtol=ROOT_XTOL, maxiter=200))
    # exact touch points on the grid that separate strictly signed neighbours
    for c in np.flatnonzero(s == 0):
        left = s[c - 1] if c > 0 else 0
        right = s[c + 1] if c + 1 < s.size else 0
        if left != 0 or right != 0:
            roots.append(float(grid[c]))
    return roots


@lru_cache(maxsize=64)
def _regions_cached(model: tuple, resolution: float) -> OptimalityRegions:
    K = len(model)
    n = max(2, int(math.ceil(1.0 / resolution)))
    grid = np.linspace(0.0, 1.0, n + 1)
    pts = [0.0, 1.0]
    for i in range(K):
        for j in range(i + 1, K):
            pts.extend(_pair_roots(model[i], model[j], grid))
    pts = np.unique(np.clip(pts, 0.0, 1.0))
    merged = [pts[0]]
    for p in pts[1:]:
        if p - merged[-1] > 1e-9:
            merged.append(p)
    merged[-1] = 1.0
    per_arm: list[list[list[float]]] = [[] for _ in range(K)]
    for lo, hi in zip(merged[:-1], merged[1:]):
        for k in _optimal_set(model, 0.5 * (lo + hi)):
            ivs = per_arm[k]
            if ivs and abs(ivs[-1][1] - lo) <= 1e-9:
                ivs[-1][1] = hi
            else:
                ivs.append([lo, hi])
    regions = tuple(tuple((float(a), float(b)) for a, b in ivs) for ivs in per_arm)
    bounds = sorted({float(e) for ivs in regions for iv in ivs for e in iv} - {0.0, 1.0})
    return OptimalityRegions(regions, tuple(bounds))


def optimality_regions(model: Sequence[RewardFunction], resolution: float = 1e-4) -> OptimalityRegions:
    """Where each arm is optimal, from a grid scan refined by bisection.

    Sign changes of ``mu_i - mu_j`` are located on a grid of step
    ``resolution`` and refined to ``1e-12``; consecutive switch points are
    then labelled by the optimal arms at their midpoint. At most one
    crossing per pair per grid cell is detected.
    """
    if resolution > 1e-3:
        raise ValueError("resolution must be at most 1e-3")
    return _regions_cached(tuple(model), float(resolution))


def suboptimality_gap(model: Sequence[RewardFunction], theta: float) -> float:
    """Gap between the best and the second-best expected reward at ``theta``.

    Zero at a tie for the best arm; 1 for a single-arm model.
    """
    if len(model) == 1:
        return 1.0
    v = sorted((f.eval(theta) for f in model), reverse=True)
    gap = v[0] - v[1]
    return 0.0 if gap <= TIE_TOL else gap


def suboptimality_distance(model: Sequence[RewardFunction], theta: float, resolution: float = 1e-4) -> float:
    """Distance from ``theta`` to the closest point where some non-optimal arm is optimal (1 if none)."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta={theta!r} is outside [0, 1]")
    regs = optimality_regions(model, resolution)
    star = set(_optimal_set(model, theta))
    best = math.inf
    for k, ivs in enumerate(regs.regions):
        if k in star:
            continue
        for lo, hi in ivs:
            best = min(best, 0.0 if lo <= theta <= hi else min(abs(theta - lo), abs(theta - hi)))
    return 1.0 if math.isinf(best) else best


def suboptimality_distance_grid(model: Sequence[RewardFunction], theta: float, resolution: float = 1e-6) -> float:
    """Brute-force reference: nearest grid point where an arm outside the optimal set wins."""
    grid = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)
    vals = np.vstack([f.values(grid) for f in model])
    top = vals.max(axis=0)
    star = _optimal_set(model, theta)
    others = [k for k in range(len(model)) if k not in star]
    if not others:
        return 1.0
    hit = np.zeros(grid.size, dtype=bool)
    for k in others:
        hit |= vals[k] >= top - TIE_TOL
    if not hit.any():
        return 1.0
    return float(np.min(np.abs(grid[hit] - theta)))


def lemma1_lower_bound(delta_min: float, D2: float, gamma2: float) -> float:
    """``(delta_min / (2 D2)) ** (1 / gamma2)``: distance floor implied by the gap."""
    if delta_min <= 0:
        return 0.0
    return (delta_min / (2.0 * D2)) ** (1.0 / gamma2)


def _upper_crossing(a: float) -> int:
    """Least integer ``n`` with ``m >= a ln m`` for every integer ``m >= n``."""
    if a <= math.e:
        return 1
    f = lambda x: x - a * math.log(x)
    hi = max(2.0 * a, 3.0)
    while f(hi) < 0:
        hi *= 2.0
    root = optimize.brentq(f, a, hi, xtol=1e-12)
    n = max(1, int(math.floor(root)) - 2)
    while n < a or f(n) < 0:
        n += 1
    # f is increasing past a, so every larger integer also qualifies
    return n


def regime_constants(Delta: float, K: int, D1: float, gamma1: float) -> tuple[int, int]:
    """Horizons ``(C1, C2)`` separating the three regimes of the problem-specific bound."""
    if not Delta > 0:
        raise OutOfScopeError("regime constants need a positive suboptimality distance")
    a1 = D1 ** (2.0 / gamma1) * K / (2.0 * Delta ** (2.0 / gamma1))
    return _upper_crossing(a1), _upper_crossing(2.0 * a1)


@dataclass(frozen=True)
class StructuralSummary:
    """Gap, distance and regime constants at one parameter value (``C1``/``C2`` are None at a boundary)."""

    theta: float
    delta_min: float
    Delta_min: float
    C1: int | None
    C2: int | None


def structural_summary(model: Sequence[RewardFunction], theta: float,
                       constants: AggregateHolder | None = None) -> StructuralSummary:
    h = constants or aggregate_holder(model)
    gap = suboptimality_gap(model, theta)
    dist = suboptimality_distance(model, theta)
    C1 = C2 = None
    if dist > 0:
        C1, C2 = regime_constants(dist, len(model), h.D1, h.gamma1)
    return StructuralSummary(theta, gap, dist, C1, C2)


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------
def _c(K, D1, D2, gamma1, gamma2):
    g = gamma1 * gamma2
    return 2.0 * D1**gamma2 * D2 * (math.pi / 2.0) ** (g / 2.0) * K ** (g / 2.0)


def one_step_bound(t, K, D1, D2, gamma1, gamma2):
    """Expected one-step regret bound ``c t^(-g/2)``."""
    g = gamma1 * gamma2
    return _c(K, D1, D2, gamma1, gamma2) * np.power(np.asarray(t, dtype=float), -g / 2.0)


def worst_case_constants(K, D1, D2, gamma1, gamma2) -> tuple[float, float]:
    """``(S1, S2)`` with the worst-case bound equal to ``S1 + S2 T^(1-g/2)``."""
    g = gamma1 * gamma2
    S2 = _c(K, D1, D2, gamma1, gamma2) / (1.0 - g / 2.0)
    return 1.0 + S2, S2


def worst_case_bound(T, K, D1, D2, gamma1, gamma2):
    """``1 + c/(1-g/2) (1 + T^(1-g/2))``, uniform over the true parameter."""
    g = gamma1 * gamma2
    S1, S2 = worst_case_constants(K, D1, D2, gamma1, gamma2)
    return S1 + S2 * np.power(np.asarray(T, dtype=float), 1.0 - g / 2.0)


def three_regime_bound(T, summary: StructuralSummary, K, constants: AggregateHolder):
    """Sub-linear up to ``C1``, logarithmic up to ``C2``, then constant.

    Falls back to the worst-case bound when the regime constants are undefined.
    """
    D1, g1, D2, g2 = constants.D1, constants.gamma1, constants.D2, constants.gamma2
    if summary.C1 is None:
        return worst_case_bound(T, K, D1, D2, g1, g2)
    g = g1 * g2
    S1, S2 = worst_case_constants(K, D1, D2, g1, g2)
    C1, C2 = summary.C1, summary.C2
    v1 = S1 + S2 * C1 ** (1.0 - g / 2.0)
    v2 = v1 + 1.0 + 2.0 * K * math.log(C2 / C1)
    T = np.asarray(T, dtype=float)
    first = S1 + S2 * np.power(T, 1.0 - g / 2.0)
    second = v1 + 1.0 + 2.0 * K * np.log(np.maximum(T, C1) / C1)
    third = np.full_like(T, v2 + K * math.pi**2 / 3.0)
    out = np.where(T <= C1, first, np.where(T <= C2, second, third))
    return out if out.ndim else float(out)


def bayes_constant(K, D1, D2, gamma1, B) -> float:
    """``A`` of the Bayesian-risk bound."""
    inner = B * gamma1**2 * D1**2 * K ** (1.0 + gamma1) / 2.0 ** (1.0 + gamma1)
    return 2.0 * D2 * inner * special.gamma(gamma1 / 2.0) ** 2


def bayes_risk_bound(T, K, D1, D2, gamma1, gamma2, B):
    if not B > 0:
        raise ValueError("density bound B must be positive")
    A = bayes_constant(K, D1, D2, gamma1, B)
    g = gamma1 * gamma2
    T = np.asarray(T, dtype=float)
    if g >= 1.0 - 1e-12:
        out = 1.0 + A * (1.0 + 2.0 * np.log(T))
    else:
        out = 1.0 + A * (1.0 + np.power(T, 1.0 - g) / (1.0 - g))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BayesConfig:
    """Prior on the global parameter and a bound ``B`` on the induced density of the distance."""

    prior: ParameterPrior
    B: float

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError("B must be positive")


def distance_profile(model: Sequence[RewardFunction], thetas) -> np.ndarray:
    """Vectorised suboptimality distance at each of ``thetas``."""
    th = np.asarray(thetas, dtype=float)
    regs = optimality_regions(model)
    vals = np.vstack([f.values(th) for f in model])
    star = vals >= vals.max(axis=0) - TIE_TOL
    out = np.full(th.shape, np.inf)
    for k, ivs in enumerate(regs.regions):
        dk = np.full(th.shape, np.inf)
        for lo, hi in ivs:
            dk = np.minimum(dk, np.maximum(0.0, np.maximum(lo - th, th - hi)))
        out = np.where(star[k], out, np.minimum(out, dk))
    return np.where(np.isinf(out), 1.0, out)


def estimate_distance_density_bound(model: Sequence[RewardFunction], prior: ParameterPrior,
                                    n: int = 200_000, bins: int = 200) -> float:
    """Histogram estimate of ``sup g``, ``g`` the density of the distance when ``theta ~ prior``."""
    grid = (np.arange(n) + 0.5) / n
    w = prior.pdf(grid) / n
    d = distance_profile(model, grid)
    hist, edges = np.histogram(d, bins=bins, range=(0.0, max(float(d.max()), 1e-12)), weights=w)
    return float(np.max(hist / np.diff(edges)))


def lower_bound_instance(gamma: int) -> list[RewardFunction]:
    """Two Bernoulli arms ``theta^gamma`` and ``1 - theta^gamma`` (``gamma`` odd)."""
    if int(gamma) != gamma or gamma < 1 or int(gamma) % 2 == 0:
        raise InvalidFunctionError(f"gamma must be an odd positive integer, got {gamma!r}")
    g = float(gamma)
    return [RewardFunction.power(g), RewardFunction.power(g, a=-1.0, b=1.0)]


def lower_bound_boundary(gamma: int) -> float:
    return 2.0 ** (-1.0 / gamma)


def lower_bound_value(T, gamma1, gamma2):
    """Minimax lower bound ``(1 - e^-16)/(64 g) T^(1-g/2)``, valid for ``T >= 8``."""
    Tarr = np.asarray(T, dtype=float)
    if np.any(Tarr < 8):
        raise OutOfScopeError("the lower bound is stated for T >= 8")
    g = gamma1 * gamma2
    out = (1.0 - math.exp(-16.0)) / (64.0 * g) * np.power(Tarr, 1.0 - g / 2.0)
    return out if out.ndim else float(out)


def avg_regret_bound(tau, K, L, alpha, constants: AggregateHolder):
    """Average-regret bound of the windowed policy with the tuned half window."""
    D1, g1, D2, g2 = constants.D1, constants.gamma1, constants.D2, constants.gamma2
    tau = np.asarray(tau, dtype=float)
    first = np.power(tau, -alpha * g2 / (0.5 + alpha * g2))
    coef = (2.0 * D2 * D1**g2 * ((math.pi * K) ** (g1 / 2.0) + 2.0 * D2**g1 * L ** (g1 * g2))) ** g2
    second = coef * np.power(tau, -alpha * g2**2 * g1 / (1.0 + 2.0 * alpha * g2))
    out = first + second
    return out if out.ndim else float(out)


def informativeness_check(gi_env, epsilon: float, samples: int = 1000, rng=None) -> bool:
    """True iff every sampled ``u`` satisfies ``|f_ij(u_j) - u_i| < epsilon`` for all pairs.

    Draws from ``gi_env.sampler`` when present; otherwise checks the fixed ``u``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    sampler = getattr(gi_env, "sampler", None)
    draws = [sampler.sample(rng) for _ in range(samples)] if sampler is not None else [gi_env.u]
    f = gi_env.estimators
    K = len(draws[0])
    for u in draws:
        for i in range(K):
            for j in range(K):
                if i != j and not abs(f[i][j](u[j]) - u[i]) < epsilon:
                    return False
    return True


# ---------------------------------------------------------------------------
# empirical regret
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RegretSummary:
    """Per-step mean cumulative regret over replications with its standard error."""

    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    replications: int

    @property
    def average(self) -> np.ndarray:
        """Average regret ``cumulative / t``."""
        return self.mean / self.t


def empirical_regret(traces) -> RegretSummary:
    """Aggregate one trace, a list of traces, or an ``(R, T)`` array of per-step regrets."""
    if hasattr(traces, "regret"):
        traces = [traces]
    if isinstance(traces, np.ndarray):
        mat = np.atleast_2d(traces).astype(float)
    else:
        lens = {len(tr.regret) for tr in traces}
        if len(lens) != 1:
            raise AggregationError(f"traces have different horizons: {sorted(lens)}")
        mat = np.vstack([tr.regret for tr in traces])
    cum = np.cumsum(mat, axis=1)
    R, T = cum.shape
    mean = cum.mean(axis=0)
    se = cum.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(T)
    return RegretSummary(np.arange(1, T + 1, dtype=float), mean, se, R)
