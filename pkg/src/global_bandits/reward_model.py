"""Reward functions of the global parameter, their inverses and Hölder metadata.

Every arm of a globally parametrized bandit has an expected reward
``mu_k(theta)`` that is a strictly monotone function of a scalar parameter
``theta`` in ``[0, 1]``. The learner knows these functions and uses their
inverses to turn sample means into parameter estimates.

Scalar evaluation here is written with ``math`` calls in a fixed operation
order; the compiled kernels mirror it so that both backends produce
bit-identical runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DomainError, InvalidFunctionError, InvalidPairError, RangeError

FAMILIES = ("linear", "power", "exponential", "piecewise-linear", "custom")

# Codes shared with the compiled kernels.
FAMILY_CODES = {"linear": 0, "power": 1, "exponential": 2, "piecewise-linear": 3, "custom": 3}

INVERSE_TOL = 1e-9
HOLDER_SLACK = 1e-12


@dataclass(frozen=True)
class HolderMeta:
    """Hölder constants of one reward function.

    ``|mu^-1(y) - mu^-1(y')| <= D1 |y - y'|^gamma1`` and
    ``|mu(t) - mu(t')| <= D2 |t - t'|^gamma2``.
    """

    D1: float
    gamma1: float
    D2: float
    gamma2: float

    def __post_init__(self):
        if not (self.D1 > 0 and self.D2 > 0):
            raise InvalidFunctionError(f"Hölder constants must be positive, got D1={self.D1}, D2={self.D2}")
        if not (0 < self.gamma1 <= 1 and 0 < self.gamma2 <= 1):
            raise InvalidFunctionError(
                f"Hölder exponents must lie in (0, 1], got gamma1={self.gamma1}, gamma2={self.gamma2}"
            )


@dataclass(frozen=True)
class AggregateHolder:
    """Model-level constants: largest ``D``'s and smallest exponents over the arms."""

    D1: float
    gamma1: float
    D2: float
    gamma2: float

    @property
    def gamma_product(self) -> float:
        return self.gamma1 * self.gamma2


def holder_constants(family: str, params: Mapping[str, object]) -> HolderMeta:
    """Hölder constants certified by calculus for a built-in family.

    Args:
        family: one of ``linear``, ``power``, ``exponential``, ``piecewise-linear``.
        params: family parameters (``a``, ``b``, ``gamma`` or ``knots``).

    Returns:
        A :class:`HolderMeta` valid on the whole of ``[0, 1]``.
    """
    if family == "linear":
        a = float(params["a"])
        if a == 0:
            raise InvalidFunctionError("linear reward needs a != 0")
        return HolderMeta(1.0 / abs(a), 1.0, abs(a), 1.0)
    if family == "power":
        a = float(params.get("a", 1.0))
        g = float(params["gamma"])
        if a == 0 or not g > 0:
            raise InvalidFunctionError(f"power reward needs a != 0 and gamma > 0, got a={a}, gamma={g}")
        if g >= 1:
            # y^(1/g) is (1/g)-Hölder with constant 1 after rescaling by |a|.
            return HolderMeta(abs(a) ** (-1.0 / g), 1.0 / g, abs(a) * g, 1.0)
        return HolderMeta(1.0 / (abs(a) * g), 1.0, abs(a), g)
    if family == "exponential":
        a = float(params["a"])
        b = float(params["b"])
        if not a > 0 or b == 0:
            raise InvalidFunctionError(f"exponential reward needs a > 0 and b != 0, got a={a}, b={b}")
        lo = abs(a * b) * min(1.0, math.exp(b))
        hi = abs(a * b) * max(1.0, math.exp(b))
        return HolderMeta(1.0 / lo, 1.0, hi, 1.0)
    if family == "piecewise-linear":
        xs, ys = _split_knots(params["knots"])
        slopes = np.abs(np.diff(ys) / np.diff(xs))
        if np.any(slopes == 0):
            raise InvalidFunctionError("piecewise-linear reward has a flat segment")
        return HolderMeta(float(1.0 / slopes.min()), 1.0, float(slopes.max()), 1.0)
    if family == "custom":
        raise InvalidFunctionError("custom reward functions must be supplied with explicit Hölder metadata")
    raise InvalidFunctionError(f"unknown reward family {family!r}")


def _split_knots(knots) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(knots, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise InvalidFunctionError("knots must be a list of at least two (theta, value) pairs")
    return arr[:, 0], arr[:, 1]


@dataclass(frozen=True)
class RewardFunction:
    """A strictly monotone reward function ``theta -> mu(theta)`` on ``[0, 1]``.

    Use the family constructors (:meth:`linear`, :meth:`power`,
    :meth:`exponential`, :meth:`piecewise`, :meth:`custom`) or
    :meth:`from_spec`.
    """

    family: str
    a: float = 0.0
    b: float = 0.0
    gamma: float = 1.0
    xs: tuple = ()
    ys: tuple = ()
    holder: HolderMeta = field(default=None, compare=False)
    v0: float = field(init=False, compare=False)
    v1: float = field(init=False, compare=False)
    increasing: bool = field(init=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidFunctionError(f"unknown reward family {self.family!r}")
        if self.family in ("piecewise-linear", "custom"):
            xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
            if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
                raise InvalidFunctionError("knot abscissae must increase strictly from 0 to 1")
            dy = np.diff(ys)
            if not (np.all(dy > 0) or np.all(dy < 0)):
                raise InvalidFunctionError("piecewise reward must be strictly monotone")
            if ys.min() < 0 or ys.max() > 1:
                raise InvalidFunctionError("reward values must lie in [0, 1]")
        v0, v1 = self._eval(0.0), self._eval(1.0)
        if v0 == v1 or math.isnan(v0) or math.isnan(v1):
            raise InvalidFunctionError(f"{self.family} reward is not invertible on [0, 1]")
        if min(v0, v1) < -HOLDER_SLACK or max(v0, v1) > 1 + HOLDER_SLACK:
            raise InvalidFunctionError(
                f"{self.family} reward leaves [0, 1]: mu(0)={v0:.6g}, mu(1)={v1:.6g}"
            )
        object.__setattr__(self, "v0", v0)
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "increasing", v1 > v0)
        if self.holder is None:
            object.__setattr__(self, "holder", holder_constants(self.family, self.params))

    # -- constructors -------------------------------------------------------
    @classmethod
    def linear(cls, a: float, b: float = 0.0) -> "RewardFunction":
        holder = holder_constants("linear", {"a": a})
        return cls("linear", a=float(a), b=float(b), holder=holder)

    @classmethod
    def power(cls, gamma: float, a: float = 1.0, b: float = 0.0) -> "RewardFunction":
        """``a * theta**gamma + b``; ``power(0.5, a=-1, b=1)`` is ``1 - sqrt(theta)``."""
        holder = holder_constants("power", {"a": a, "gamma": gamma})
        return cls("power", a=float(a), b=float(b), gamma=float(gamma), holder=holder)

    @classmethod
    def exponential(cls, a: float, b: float) -> "RewardFunction":
        holder = holder_constants("exponential", {"a": a, "b": b})
        return cls("exponential", a=float(a), b=float(b), holder=holder)

    @classmethod
    def piecewise(cls, knots: Sequence[Sequence[float]]) -> "RewardFunction":
        xs, ys = _split_knots(knots)
        holder = holder_constants("piecewise-linear", {"knots": knots})
        return cls("piecewise-linear", xs=tuple(map(float, xs)), ys=tuple(map(float, ys)), holder=holder)

    @classmethod
    def custom(cls, values: Sequence[float], holder: HolderMeta, grid: int = 401) -> "RewardFunction":
        """Tabulated values on a uniform grid of ``[0, 1]``, linearly interpolated.

        The supplied ``holder`` is checked on a grid of ``grid`` points and
        rejected if either inequality fails.
        """
        ys = tuple(float(v) for v in values)
        if len(ys) < 2:
            raise InvalidFunctionError("custom reward needs at least two tabulated values")
        xs = tuple(float(x) for x in np.linspace(0.0, 1.0, len(ys)))
        f = cls("custom", xs=xs, ys=ys, holder=holder)
        if not f.check_holder(grid):
            raise InvalidFunctionError("supplied Hölder metadata does not hold for the tabulated function")
        return f

    @classmethod
    def from_spec(cls, spec: Mapping) -> "RewardFunction":
        """Build from a config record ``{family, params, holder?}``."""
        family = spec.get("family")
        params = dict(spec.get("params", {}))
        holder = spec.get("holder")
        if holder is not None and not isinstance(holder, HolderMeta):
            holder = HolderMeta(**{k: float(v) for k, v in holder.items()})
        if family == "linear":
            f = cls.linear(params["a"], params.get("b", 0.0))
        elif family == "power":
            f = cls.power(params["gamma"], params.get("a", 1.0), params.get("b", 0.0))
        elif family == "exponential":
            f = cls.exponential(params["a"], params["b"])
        elif family == "piecewise-linear":
            f = cls.piecewise(params["knots"])
        elif family == "custom":
            if holder is None:
                raise InvalidFunctionError("custom reward functions require a 'holder' record")
            return cls.custom(params["values"], holder)
        else:
            raise InvalidFunctionError(f"unknown reward family {family!r}")
        if holder is not None:
            f = cls(f.family, a=f.a, b=f.b, gamma=f.gamma, xs=f.xs, ys=f.ys, holder=holder)
            if not f.check_holder():
                raise InvalidFunctionError("supplied Hölder metadata does not hold for this function")
        return f

    @property
    def params(self) -> dict:
        if self.family == "linear":
            return {"a": self.a, "b": self.b}
        if self.family == "power":
            return {"a": self.a, "gamma": self.gamma, "b": self.b}
        if self.family == "exponential":
            return {"a": self.a, "b": self.b}
        if self.family == "piecewise-linear":
            return {"knots": [list(p) for p in zip(self.xs, self.ys)]}
        return {"values": list(self.ys)}

    @property
    def range(self) -> tuple[float, float]:
        return (min(self.v0, self.v1), max(self.v0, self.v1))

    @property
    def monotonicity(self) -> str:
        return "increasing" if self.increasing else "decreasing"

    # -- evaluation ---------------------------------------------------------
    def _eval(self, theta: float) -> float:
        fam = self.family
        if fam == "linear":
            return self.a * theta + self.b
        if fam == "power":
            return self.a * math.pow(theta, self.gamma) + self.b
        if fam == "exponential":
            return self.a * math.exp(self.b * theta)
        xs, ys = self.xs, self.ys
        lo, hi = _bracket(xs, theta, True)
        return ys[lo] + (ys[hi] - ys[lo]) * (theta - xs[lo]) / (xs[hi] - xs[lo])

    def eval(self, theta: float) -> float:
        if not 0.0 <= theta <= 1.0:
            raise DomainError(f"theta={theta!r} is outside [0, 1]")
        return self._eval(theta)

    __call__ = eval

    def values(self, thetas) -> np.ndarray:
        """Vectorised evaluation on an array of parameters (no domain check)."""
        x = np.asarray(thetas, dtype=float)
        fam = self.family
        if fam == "linear":
            return self.a * x + self.b
        if fam == "power":
            return self.a * np.power(x, self.gamma) + self.b
        if fam == "exponential":
            return self.a * np.exp(self.b * x)
        return np.interp(x, self.xs, self.ys)

    def _inverse_interior(self, y: float) -> float:
        fam = self.family
        if fam == "linear":
            th = (y - self.b) / self.a
        elif fam == "power":
            s = (y - self.b) / self.a
            if s <= 0.0:
                th = 0.0
            elif s >= 1.0:
                th = 1.0
            else:
                th = math.pow(s, 1.0 / self.gamma)
        elif fam == "exponential":
            th = math.log(y / self.a) / self.b
        else:
            xs, ys = self.xs, self.ys
            lo, hi = _bracket(ys, y, self.increasing)
            th = xs[lo] + (xs[hi] - xs[lo]) * (y - ys[lo]) / (ys[hi] - ys[lo])
        if th < 0.0:
            return 0.0
        if th > 1.0:
            return 1.0
        return th

    def pseudo_inverse(self, y: float) -> float:
        """``argmin_theta |mu(theta) - y|``; a boundary point when ``y`` is out of range."""
        if self.increasing:
            if y <= self.v0:
                return 0.0
            if y >= self.v1:
                return 1.0
        else:
            if y >= self.v0:
                return 0.0
            if y <= self.v1:
                return 1.0
        return self._inverse_interior(y)

    def inverse(self, y: float) -> float:
        lo, hi = self.range
        if not (lo - INVERSE_TOL <= y <= hi + INVERSE_TOL):
            raise RangeError(f"y={y!r} is outside the range [{lo:.6g}, {hi:.6g}]")
        return self.pseudo_inverse(y)

    def check_holder(self, n: int = 401) -> bool:
        """Check both Hölder inequalities of ``self.holder`` on an ``n``-point grid."""
        h = self.holder
        t = np.linspace(0.0, 1.0, n)
        if not holder_holds(t, self.values(t), h.D2, h.gamma2):
            return False
        lo, hi = self.range
        y = np.linspace(lo, hi, n)
        inv = np.array([self.pseudo_inverse(v) for v in y])
        return holder_holds(y, inv, h.D1, h.gamma1)


def _bracket(knots: Sequence[float], v: float, increasing: bool) -> tuple[int, int]:
    """Indices ``(lo, lo + 1)`` of the segment of a monotone knot list holding ``v``."""
    lo, hi = 0, len(knots) - 1
    if increasing:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if knots[mid] <= v:
                lo = mid
            else:
                hi = mid
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if knots[mid] >= v:
                lo = mid
            else:
                hi = mid
    return lo, hi


def holder_holds(x, fx, D: float, gamma: float, slack: float = HOLDER_SLACK) -> bool:
    """True if ``|f(x_i) - f(x_j)| <= D |x_i - x_j|^gamma + slack`` for all grid pairs."""
    x = np.asarray(x, dtype=float)
    fx = np.asarray(fx, dtype=float)
    lhs = np.abs(fx[:, None] - fx[None, :])
    rhs = D * np.abs(x[:, None] - x[None, :]) ** gamma
    return bool(np.all(lhs <= rhs + slack))


@dataclass(frozen=True)
class EstimatorFunction:
    """Known map from arm ``source_arm``'s parameter to an estimate of ``target_arm``'s."""

    source_arm: int
    target_arm: int
    map: Callable[[float], float] = field(compare=False)
    D: float = 1.0
    gamma: float = 1.0

    def __call__(self, u: float) -> float:
        return self.map(u)


def derived_estimator(model: Sequence[RewardFunction], i: int, j: int) -> EstimatorFunction:
    """The GP-induced estimator ``f_ij = mu_i o mu_j^-1`` (target ``i``, source ``j``).

    The inner inverse is the pseudo-inverse, so the map is total on ``[0, 1]``.
    """
    if i == j:
        raise InvalidPairError(f"estimator needs two distinct arms, got i=j={i}")
    mu_i, mu_j = model[i], model[j]
    hi_, hj = mu_i.holder, mu_j.holder
    D = hi_.D2 * hj.D1 ** hi_.gamma2
    gamma = hj.gamma1 * hi_.gamma2

    def f(u: float, _mi=mu_i, _mj=mu_j) -> float:
        return _mi._eval(_mj.pseudo_inverse(u))

    return EstimatorFunction(source_arm=j, target_arm=i, map=f, D=D, gamma=gamma)


def derived_estimator_matrix(model: Sequence[RewardFunction]) -> list[list]:
    """``K x K`` matrix ``M[i][j] = f_ij``; the diagonal is ``None``."""
    K = len(model)
    return [[None if i == j else derived_estimator(model, i, j) for j in range(K)] for i in range(K)]


def aggregate_holder(model: Sequence[RewardFunction]) -> AggregateHolder:
    """Conservative aggregation: ``max`` of the constants, ``min`` of the exponents."""
    hs = [f.holder for f in model]
    return AggregateHolder(
        D1=max(h.D1 for h in hs),
        gamma1=min(h.gamma1 for h in hs),
        D2=max(h.D2 for h in hs),
        gamma2=min(h.gamma2 for h in hs),
    )


def encode_arms(model: Sequence[RewardFunction]) -> dict:
    """Flat arrays describing ``model`` for the compiled kernels."""
    K = len(model)
    fam = np.empty(K, dtype=np.int32)
    par = np.zeros((K, 3), dtype=np.float64)
    ends = np.empty((K, 2), dtype=np.float64)
    inc = np.empty(K, dtype=np.int32)
    off = np.zeros(K + 1, dtype=np.int64)
    kx: list[float] = []
    ky: list[float] = []
    for k, f in enumerate(model):
        fam[k] = FAMILY_CODES[f.family]
        par[k] = (f.a, f.b, f.gamma)
        ends[k] = (f.v0, f.v1)
        inc[k] = 1 if f.increasing else 0
        kx.extend(f.xs)
        ky.extend(f.ys)
        off[k + 1] = len(kx)
    return {
        "fam": fam,
        "par": par,
        "ends": ends,
        "inc": inc,
        "off": off,
        "kx": np.asarray(kx if kx else [0.0], dtype=np.float64),
        "ky": np.asarray(ky if ky else [0.0], dtype=np.float64),
    }


def three_arm_example() -> list[RewardFunction]:
    """The three-arm example ``(1 - sqrt(theta), 0.8 theta, theta^2)``."""
    return [
        RewardFunction.power(0.5, a=-1.0, b=1.0),
        RewardFunction.linear(0.8),
        RewardFunction.power(2.0),
    ]


def two_linear_arms() -> list[RewardFunction]:
    """``(theta, 1 - theta)``: the symmetric two-arm model."""
    return [RewardFunction.linear(1.0), RewardFunction.linear(-1.0, 1.0)]
