"""JSON experiment configuration: parsing, validation and environment construction.

A config is one JSON object::

    {
      "mode": "single" | "sweep" | "bayes" | "drift",
      "environment": {
        "type": "gp" | "gi" | "drift",
        "arms": [{"family": ..., "params": {...}, "holder": {...}?}, ...] | "three-arm" | ...,
        "theta_star": 0.6,                          # gp
        "u": [...], "sampler": {...},               # gi
        "drift": {"kind": ..., "L": ..., "tau": ..., "alpha": ..., "params": {...}},
        "noise": {"kind": "bernoulli"} | {"kind": "truncated-gaussian", "sigma": 0.1}
      },
      "policies": [{"policy": "wagp_gp"}, {"policy": "windowed_wagp", "params": {"auto_tau_h": true}}],
      "horizon": 10000, "replications": 100, "master_seed": 12345,
      "sweep": {"thetas": [...]},
      "bayes": {"prior": {"kind": "uniform"}, "B": 2.0},
      "analyze": {"thetas": [...]},
      "outputs": {"every": 1, "traces": false},
      "workers": 1
    }

Errors are raised as :class:`ConfigError` whose ``where`` is a dotted path
to the offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .analysis import lower_bound_instance
from .environment import (ComonotoneSampler, DriftEnvironment, DriftSpec, GIEnvironment, GPEnvironment, Noise,
                          ParameterPrior, gen_drift_path)
from .errors import ConfigError, GlobalBanditError
from .policies import tune_tau_h
from .reward_model import (RewardFunction, aggregate_holder, derived_estimator_matrix, three_arm_example,
                           two_linear_arms)
from .simulation import POLICIES, PolicySpec

MODES = ("single", "sweep", "bayes", "drift")
ENV_TYPES = ("gp", "gi", "drift")
PRESETS = ("three-arm", "two-linear", "lower-bound")


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description (see the module docstring for the JSON form)."""

    mode: str
    env_type: str
    arms: tuple
    noise: Noise
    policies: tuple
    horizon: int
    replications: int
    master_seed: int
    theta_star: float | None = None
    u: tuple | None = None
    sampler: object = None
    drift: DriftSpec | None = None
    sweep_thetas: tuple = ()
    prior: ParameterPrior | None = None
    B: float | None = None
    analyze_thetas: tuple = ()
    every: int = 1
    traces: bool = False
    workers: int = 1
    source: str | None = field(default=None, compare=False)

    def with_overrides(self, seed=None, reps=None, horizon=None, workers=None) -> "ExperimentConfig":
        kw = {}
        if seed is not None:
            kw["master_seed"] = _int(seed, "--seed", lo=0)
        if reps is not None:
            kw["replications"] = _int(reps, "--reps", lo=1)
        if horizon is not None:
            kw["horizon"] = _int(horizon, "--horizon", lo=1)
        if workers is not None:
            kw["workers"] = _int(workers, "--workers", lo=1)
        return replace(self, **kw) if kw else self

    # -- derived objects ---------------------------------------------------
    @property
    def constants(self):
        return aggregate_holder(self.arms) if self.arms else None

    def build_environment(self, theta_star=None, drift: DriftSpec | None = None):
        """The environment for this config; ``theta_star``/``drift`` override the configured ones."""
        try:
            if self.env_type == "gp":
                th = self.theta_star if theta_star is None else theta_star
                if th is None:
                    raise ConfigError("a GP environment needs theta_star", "environment.theta_star")
                return GPEnvironment(self.arms, float(th), self.noise)
            if self.env_type == "gi":
                est = derived_estimator_matrix(self.arms)
                u = self.u
                if u is None:
                    u = tuple(float(f.eval(0.5)) for f in self.arms)
                return GIEnvironment(u, est, self.noise, self.sampler)
            spec = drift or self.drift
            return DriftEnvironment(self.arms, gen_drift_path(spec, self.horizon), self.noise)
        except ConfigError:
            raise
        except GlobalBanditError as exc:
            raise ConfigError(str(exc), "environment") from exc

    def resolved_policies(self, drift: DriftSpec | None = None) -> tuple:
        """Policies with ``auto_tau_h`` replaced by a concrete half window."""
        out = []
        for i, p in enumerate(self.policies):
            if p.policy == "windowed_wagp" and "tau_h" not in p.params:
                spec = drift or self.drift
                if spec is None:
                    raise ConfigError("auto_tau_h needs a drift block (or give tau_h)", f"policies[{i}].params")
                tau_h = tune_tau_h(spec.tau, spec.alpha, self.constants.gamma2)
                params = {k: v for k, v in p.params.items() if k != "auto_tau_h"}
                params["tau_h"] = tau_h
                p = PolicySpec(p.policy, params, p.label)
            out.append(p)
        return tuple(out)


# ---------------------------------------------------------------------------
# field parsers
# ---------------------------------------------------------------------------
def _int(v, where, lo=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (isinstance(v, float) and not v.is_integer()):
        try:
            v2 = int(str(v))
        except ValueError:
            raise ConfigError(f"expected an integer, got {v!r}", where) from None
        v = v2
    v = int(v)
    if lo is not None and v < lo:
        raise ConfigError(f"must be >= {lo}, got {v}", where)
    return v


def _float(v, where, lo=None, hi=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {v!r}", where)
    v = float(v)
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(f"must lie in [{lo}, {hi}], got {v}", where)
    return v


def _dict(v, where):
    if not isinstance(v, dict):
        raise ConfigError(f"expected an object, got {type(v).__name__}", where)
    return v


def _check_keys(d, allowed, where):
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown field(s) {', '.join(extra)}", where)


def parse_arms(v, where="environment.arms") -> tuple:
    if isinstance(v, str):
        v = {"preset": v}
    if isinstance(v, dict):
        name = v.get("preset")
        if name == "three-arm":
            return tuple(three_arm_example())
        if name == "two-linear":
            return tuple(two_linear_arms())
        if name == "lower-bound":
            try:
                return tuple(lower_bound_instance(v.get("gamma", 3)))
            except GlobalBanditError as exc:
                raise ConfigError(str(exc), where + ".gamma") from exc
        raise ConfigError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}", where)
    if not isinstance(v, list) or not v:
        raise ConfigError("expected a non-empty list of reward functions or a preset name", where)
    arms = []
    for i, rec in enumerate(v):
        w = f"{where}[{i}]"
        _check_keys(_dict(rec, w), ("family", "params", "holder"), w)
        try:
            arms.append(RewardFunction.from_spec(rec))
        except KeyError as exc:
            raise ConfigError(f"missing parameter {exc.args[0]!r}", w + ".params") from None
        except (GlobalBanditError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc), w) from exc
    return tuple(arms)


def parse_noise(v, where="environment.noise") -> Noise:
    if v is None:
        return Noise()
    _check_keys(_dict(v, where), ("kind", "sigma"), where)
    try:
        return Noise(v.get("kind", "bernoulli"), float(v.get("sigma", 0.1)))
    except (GlobalBanditError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), where) from exc


def parse_prior(v, where) -> ParameterPrior:
    _check_keys(_dict(v, where), ("kind", "a", "b", "points", "weights"), where)
    try:
        return ParameterPrior(v.get("kind", "uniform"), float(v.get("a", 1.0)), float(v.get("b", 1.0)),
                              tuple(v.get("points", ())), tuple(v.get("weights", ())))
    except (GlobalBanditError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), where) from exc


def parse_drift(v, where="environment.drift") -> DriftSpec:
    _check_keys(_dict(v, where), ("kind", "L", "tau", "alpha", "params"), where)
    for key in ("kind", "L", "tau"):
        if key not in v:
            raise ConfigError(f"missing field {key!r}", where)
    try:
        return DriftSpec(v["kind"], _float(v["L"], where + ".L", lo=0), _float(v["tau"], where + ".tau"),
                         _float(v.get("alpha", 1.0), where + ".alpha"), dict(_dict(v.get("params", {}), where + ".params")))
    except ConfigError:
        raise
    except (GlobalBanditError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), where) from exc


def parse_policies(v, where="policies") -> tuple:
    if not isinstance(v, list) or not v:
        raise ConfigError("expected a non-empty list of policy blocks", where)
    out = []
    names = set()
    for i, rec in enumerate(v):
        w = f"{where}[{i}]"
        if isinstance(rec, str):
            rec = {"policy": rec}
        _check_keys(_dict(rec, w), ("policy", "params", "label"), w)
        name = rec.get("policy")
        if name not in POLICIES:
            raise ConfigError(f"unknown policy {name!r}; expected one of {', '.join(POLICIES)}", w + ".policy")
        params = dict(_dict(rec.get("params", {}), w + ".params"))
        _check_keys(params, ("tau_h", "auto_tau_h"), w + ".params")
        if "tau_h" in params:
            params["tau_h"] = _int(params["tau_h"], w + ".params.tau_h", lo=1)
        spec = PolicySpec(name, params, rec.get("label"))
        if spec.name in names:
            raise ConfigError(f"duplicate policy name {spec.name!r}; add a label", w)
        names.add(spec.name)
        out.append(spec)
    return tuple(out)


TOP_KEYS = ("mode", "environment", "policies", "horizon", "replications", "master_seed", "sweep", "bayes",
            "analyze", "outputs", "workers", "description")
ENV_KEYS = ("type", "arms", "theta_star", "u", "sampler", "drift", "noise")


def parse_config(doc: dict, source: str | None = None) -> ExperimentConfig:
    _check_keys(_dict(doc, "<root>"), TOP_KEYS, "<root>")
    mode = doc.get("mode", "single")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}", "mode")
    env = _dict(doc.get("environment"), "environment")
    _check_keys(env, ENV_KEYS, "environment")
    env_type = env.get("type", "gp")
    if env_type not in ENV_TYPES:
        raise ConfigError(f"unknown environment type {env_type!r}", "environment.type")
    arms = parse_arms(env.get("arms"))
    kw = {}
    if env_type == "gp":
        if "theta_star" in env:
            kw["theta_star"] = _float(env["theta_star"], "environment.theta_star", 0.0, 1.0)
        elif mode != "bayes":
            raise ConfigError("missing field 'theta_star'", "environment")
    elif env_type == "gi":
        if "u" in env:
            u = env["u"]
            if not isinstance(u, list) or len(u) != len(arms):
                raise ConfigError(f"expected {len(arms)} arm parameters", "environment.u")
            kw["u"] = tuple(_float(x, f"environment.u[{i}]", 0.0, 1.0) for i, x in enumerate(u))
        if "sampler" in env:
            s = _dict(env["sampler"], "environment.sampler")
            _check_keys(s, ("kind", "prior", "spread"), "environment.sampler")
            kind = s.get("kind", "comonotone")
            if kind not in ("comonotone", "independent-with-point-correlation"):
                raise ConfigError(f"unknown sampler {kind!r}", "environment.sampler.kind")
            spread = _float(s.get("spread", 0.0 if kind == "comonotone" else 0.1), "environment.sampler.spread", 0.0, 1.0)
            prior = parse_prior(s.get("prior", {}), "environment.sampler.prior")
            kw["sampler"] = ComonotoneSampler(arms, prior, spread)
        if "u" not in kw and "sampler" not in kw:
            raise ConfigError("a GI environment needs 'u' or 'sampler'", "environment")
    else:
        if "drift" not in env:
            raise ConfigError("missing field 'drift'", "environment")
        kw["drift"] = parse_drift(env["drift"])
    if mode == "drift" and env_type != "drift":
        raise ConfigError("drift mode needs a drift environment", "environment.type")
    if mode in ("sweep", "bayes") and env_type != "gp":
        raise ConfigError(f"{mode} mode needs a GP environment", "environment.type")
    policies = parse_policies(doc.get("policies", [{"policy": "wagp_gp"}]))
    for i, p in enumerate(policies):
        if p.policy in ("windowed_wagp",) and env_type == "gi":
            raise ConfigError("the windowed policy needs a parametrized environment", f"policies[{i}].policy")
        if p.policy == "windowed_wagp" and "tau_h" not in p.params and env_type != "drift":
            raise ConfigError("auto_tau_h needs a drift environment; give tau_h", f"policies[{i}].params")
    if "sweep" in doc:
        sw = _dict(doc["sweep"], "sweep")
        _check_keys(sw, ("thetas",), "sweep")
        th = sw.get("thetas")
        if not isinstance(th, list) or not th:
            raise ConfigError("expected a non-empty list", "sweep.thetas")
        kw["sweep_thetas"] = tuple(_float(x, f"sweep.thetas[{i}]", 0.0, 1.0) for i, x in enumerate(th))
    elif mode == "sweep":
        raise ConfigError("sweep mode needs a 'sweep' block", "<root>")
    if "bayes" in doc:
        b = _dict(doc["bayes"], "bayes")
        _check_keys(b, ("prior", "B"), "bayes")
        kw["prior"] = parse_prior(b.get("prior", {}), "bayes.prior")
        if "B" in b:
            kw["B"] = _float(b["B"], "bayes.B", lo=0.0)
            if kw["B"] <= 0:
                raise ConfigError("must be positive", "bayes.B")
    elif mode == "bayes":
        raise ConfigError("bayes mode needs a 'bayes' block", "<root>")
    if "analyze" in doc:
        a = _dict(doc["analyze"], "analyze")
        _check_keys(a, ("thetas",), "analyze")
        kw["analyze_thetas"] = tuple(_float(x, f"analyze.thetas[{i}]", 0.0, 1.0)
                                     for i, x in enumerate(a.get("thetas", [])))
    outputs = _dict(doc.get("outputs", {}), "outputs")
    _check_keys(outputs, ("every", "traces"), "outputs")
    return ExperimentConfig(
        mode=mode,
        env_type=env_type,
        arms=arms,
        noise=parse_noise(env.get("noise")),
        policies=policies,
        horizon=_int(doc.get("horizon", 1000), "horizon", lo=1),
        replications=_int(doc.get("replications", 1), "replications", lo=1),
        master_seed=_int(doc.get("master_seed", 0), "master_seed", lo=0),
        every=_int(outputs.get("every", 1), "outputs.every", lo=1),
        traces=bool(outputs.get("traces", False)),
        workers=_int(doc.get("workers", 1), "workers", lo=1),
        source=source,
        **kw,
    )


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config; JSON syntax errors report line and column."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("config file not found", str(p)) from None
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(p)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", f"{p}:{exc.lineno}:{exc.colno}") from None
    return parse_config(doc, str(p))
