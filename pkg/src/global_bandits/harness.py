"""Monte Carlo experiment runners and CSV emission.

Replications are independent tasks keyed by their index. Results are folded
in replication order whatever the number of worker processes, so serial and
parallel runs write identical bytes.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import analysis
from .config import ExperimentConfig
from .environment import DriftSpec
from .errors import ConfigError
from .simulation import PolicySpec, replicate

SUMMARY_COLUMNS = ("policy", "t", "mean_cum_regret", "stderr", "mean_step_regret", "step_stderr",
                   "one_step_bound", "worst_case_bound", "three_regime_bound")
TRACE_COLUMNS = ("t", "arm", "reward", "estimate", "regret", "cum_regret")
SWEEP_COLUMNS = ("kind", "policy", "theta_star", "T", "mean_cum_regret", "stderr", "worst_case_bound")
BAYES_COLUMNS = ("policy", "t", "mean_cum_regret", "stderr", "bayes_risk_bound")
DRIFT_COLUMNS = ("policy", "tau", "tau_h", "T", "avg_regret", "stderr", "avg_regret_bound")
STRUCTURE_COLUMNS = ("theta", "delta_min", "Delta_min", "C1", "C2")
BOUNDS_COLUMNS = ("t", "one_step_bound", "worst_case_bound", "three_regime_bound")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        return format(v, ".12g")
    return str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def write_csv(path: Path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(columns, rows))
    return path


# ---------------------------------------------------------------------------
# replication fan-out
# ---------------------------------------------------------------------------
@dataclass
class _Fold:
    """Running sums over replications, one set per policy."""

    T: int
    n: int = 0
    s_cum: np.ndarray = None
    q_cum: np.ndarray = None
    s_step: np.ndarray = None
    q_step: np.ndarray = None

    def __post_init__(self):
        z = lambda: np.zeros(self.T)
        self.s_cum, self.q_cum, self.s_step, self.q_step = z(), z(), z(), z()

    def add(self, regret: np.ndarray):
        cum = np.cumsum(regret)
        self.n += 1
        self.s_cum += cum
        self.q_cum += cum * cum
        self.s_step += regret
        self.q_step += regret * regret

    @staticmethod
    def _se(s, q, n):
        if n < 2:
            return np.zeros_like(s)
        var = np.maximum(q - s * s / n, 0.0) / (n - 1)
        return np.sqrt(var / n)

    def result(self) -> dict:
        n = self.n
        return {
            "mean_cum": self.s_cum / n,
            "se_cum": self._se(self.s_cum, self.q_cum, n),
            "mean_step": self.s_step / n,
            "se_step": self._se(self.s_step, self.q_step, n),
            "replications": n,
        }


@lru_cache(maxsize=8)
def _env_for(config: ExperimentConfig, theta_star, drift):
    return config.build_environment(theta_star=theta_star, drift=drift)


def _rep_job(job):
    config, theta_star, drift, use_prior, specs, rep, keep = job
    env = _env_for(config, theta_star, drift)
    prior = config.prior if use_prior else None
    used, traces = replicate(env, specs, config.horizon, config.master_seed, rep, theta_prior=prior)
    regrets = [tr.regret for tr in traces]
    kept = traces if keep else None
    return regrets, kept


def _fan_out(config: ExperimentConfig, specs, theta_star=None, drift=None, use_prior=False, keep_traces=False):
    """Yield ``(rep, regrets, traces)`` in replication order."""
    jobs = [(config, theta_star, drift, use_prior, specs, rep, keep_traces) for rep in range(config.replications)]
    if config.workers > 1 and config.replications > 1:
        chunk = max(1, config.replications // (4 * config.workers))
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            for rep, (regrets, traces) in enumerate(ex.map(_rep_job, jobs, chunksize=chunk)):
                yield rep, regrets, traces
    else:
        for rep, job in enumerate(jobs):
            regrets, traces = _rep_job(job)
            yield rep, regrets, traces


def _aggregate(config, specs, out_dir=None, **kw) -> dict:
    folds = {s.name: _Fold(config.horizon) for s in specs}
    keep = bool(config.traces and out_dir is not None)
    for rep, regrets, traces in _fan_out(config, specs, keep_traces=keep, **kw):
        for s, r in zip(specs, regrets):
            folds[s.name].add(r)
        if keep:
            for tr in traces:
                write_csv(Path(out_dir) / f"trace_{tr.policy}_{rep}.csv", TRACE_COLUMNS, tr.rows())
    return {name: f.result() for name, f in folds.items()}


def _report_steps(T: int, every: int) -> list[int]:
    if every <= 1:
        return list(range(1, T + 1))
    ts = list(range(every, T + 1, every))
    if not ts or ts[-1] != T:
        ts.append(T)
    return ts


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------
@dataclass
class RunResult:
    """What a runner produced: per-policy aggregates, CSV rows and the files written."""

    stats: dict
    rows: list
    columns: tuple
    files: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def gp_bound_columns(config: ExperimentConfig, theta_star: float, ts):
    """``(one_step, worst_case, three_regime)`` arrays at steps ``ts``."""
    h = config.constants
    K = len(config.arms)
    ts = np.asarray(ts, dtype=float)
    one = analysis.one_step_bound(ts, K, h.D1, h.D2, h.gamma1, h.gamma2)
    worst = analysis.worst_case_bound(ts, K, h.D1, h.D2, h.gamma1, h.gamma2)
    summ = analysis.structural_summary(config.arms, theta_star, h)
    three = np.asarray(analysis.three_regime_bound(ts, summ, K, h), dtype=float)
    return one, worst, three


def run_single(config: ExperimentConfig, out_dir=None) -> RunResult:
    """Every configured policy for ``R`` replications; summary per reported step."""
    specs = config.resolved_policies()
    stats = _aggregate(config, specs, out_dir)
    ts = _report_steps(config.horizon, config.every)
    idx = np.asarray(ts) - 1
    bounds = (None, None, None)
    if config.env_type == "gp":
        bounds = gp_bound_columns(config, config.theta_star, ts)
    rows = []
    for s in specs:
        st = stats[s.name]
        for j, t in enumerate(ts):
            i = idx[j]
            rows.append((s.name, t, st["mean_cum"][i], st["se_cum"][i], st["mean_step"][i], st["se_step"][i],
                         *(None if b is None else b[j] for b in bounds)))
    res = RunResult(stats, rows, SUMMARY_COLUMNS)
    if out_dir is not None:
        res.files.append(write_csv(Path(out_dir) / "summary.csv", SUMMARY_COLUMNS, rows))
    return res


def run_sweep(config: ExperimentConfig, out_dir=None) -> RunResult:
    """One Monte Carlo run per ``theta_star`` on the grid, plus a max-over-grid row per policy."""
    specs = config.resolved_policies()
    h = config.constants
    K = len(config.arms)
    T = config.horizon
    wc = float(analysis.worst_case_bound(T, K, h.D1, h.D2, h.gamma1, h.gamma2))
    rows, per = [], {}
    for th in config.sweep_thetas:
        stats = _aggregate(config, specs, None, theta_star=th)
        for s in specs:
            m, se = stats[s.name]["mean_cum"][-1], stats[s.name]["se_cum"][-1]
            rows.append(("point", s.name, th, T, m, se, wc))
            per.setdefault(s.name, []).append((th, m, se))
    for s in specs:
        th, m, se = max(per[s.name], key=lambda r: r[1])
        rows.append(("max", s.name, th, T, m, se, wc))
    res = RunResult(per, rows, SWEEP_COLUMNS)
    if out_dir is not None:
        res.files.append(write_csv(Path(out_dir) / "sweep.csv", SWEEP_COLUMNS, rows))
    return res


def run_bayes(config: ExperimentConfig, out_dir=None) -> RunResult:
    """Bayesian risk: ``theta_star`` redrawn from the prior in every replication."""
    if config.replications < 100:
        raise ConfigError(f"needs at least 100 outer replications, got {config.replications}", "replications")
    specs = config.resolved_policies()
    h = config.constants
    K = len(config.arms)
    B = config.B
    if B is None:
        B = analysis.estimate_distance_density_bound(config.arms, config.prior)
    stats = _aggregate(config, specs, out_dir, theta_star=0.5, use_prior=True)
    ts = _report_steps(config.horizon, config.every)
    bound = analysis.bayes_risk_bound(np.asarray(ts, dtype=float), K, h.D1, h.D2, h.gamma1, h.gamma2, B)
    rows = []
    for s in specs:
        st = stats[s.name]
        for j, t in enumerate(ts):
            rows.append((s.name, t, st["mean_cum"][t - 1], st["se_cum"][t - 1], bound[j]))
    res = RunResult(stats, rows, BAYES_COLUMNS, extra={"B": B})
    if out_dir is not None:
        res.files.append(write_csv(Path(out_dir) / "summary.csv", BAYES_COLUMNS, rows))
    return res


def run_drift(config: ExperimentConfig, out_dir=None, drift: DriftSpec | None = None) -> RunResult:
    """Windowed and static policies on one drift path; average regret per policy.

    A static ``wagp_gp`` run is added when the config does not list one.
    """
    spec = drift or config.drift
    specs = list(config.resolved_policies(spec))
    if not any(s.policy == "wagp_gp" for s in specs):
        specs.append(PolicySpec("wagp_gp"))
    specs = tuple(specs)
    stats = _aggregate(config, specs, out_dir, drift=spec)
    T = config.horizon
    bound = analysis.avg_regret_bound(spec.tau, len(config.arms), spec.L, spec.alpha, config.constants)
    rows = []
    for s in specs:
        st = stats[s.name]
        rows.append((s.name, spec.tau, s.params.get("tau_h"), T, st["mean_cum"][-1] / T, st["se_cum"][-1] / T, bound))
    ts = _report_steps(T, config.every)
    summary = []
    for s in specs:
        st = stats[s.name]
        for t in ts:
            summary.append((s.name, t, st["mean_cum"][t - 1], st["se_cum"][t - 1], st["mean_step"][t - 1],
                            st["se_step"][t - 1], None, None, None))
    res = RunResult(stats, rows, DRIFT_COLUMNS)
    if out_dir is not None:
        res.files.append(write_csv(Path(out_dir) / "summary.csv", SUMMARY_COLUMNS, summary))
        res.files.append(write_csv(Path(out_dir) / "drift.csv", DRIFT_COLUMNS, rows))
    return res


def structure_rows(config: ExperimentConfig):
    thetas = config.analyze_thetas
    if not thetas:
        thetas = tuple(config.sweep_thetas) or ((config.theta_star,) if config.theta_star is not None else ())
    if not thetas:
        thetas = tuple(round(0.05 * i, 2) for i in range(21))
    h = config.constants
    rows = []
    for th in thetas:
        s = analysis.structural_summary(config.arms, th, h)
        rows.append((th, s.delta_min, s.Delta_min, s.C1, s.C2))
    return rows


def run_analyze(config: ExperimentConfig, out_dir=None) -> RunResult:
    rows = structure_rows(config)
    res = RunResult({}, rows, STRUCTURE_COLUMNS)
    if out_dir is not None:
        res.files.append(write_csv(Path(out_dir) / "structure.csv", STRUCTURE_COLUMNS, rows))
    return res


def bound_steps(T: int) -> list[int]:
    if T <= 1000:
        return list(range(1, T + 1))
    return sorted({int(round(x)) for x in np.geomspace(1, T, 500)} | {T})


def run_bounds(config: ExperimentConfig, out_dir=None) -> RunResult:
    """Bound table for the configured model at ``theta_star`` (three-regime column needs one)."""
    ts = bound_steps(config.horizon)
    h = config.constants
    K = len(config.arms)
    tsa = np.asarray(ts, dtype=float)
    one = analysis.one_step_bound(tsa, K, h.D1, h.D2, h.gamma1, h.gamma2)
    worst = analysis.worst_case_bound(tsa, K, h.D1, h.D2, h.gamma1, h.gamma2)
    if config.theta_star is not None:
        summ = analysis.structural_summary(config.arms, config.theta_star, h)
        three = np.asarray(analysis.three_regime_bound(tsa, summ, K, h), dtype=float)
    else:
        three = [None] * len(ts)
    rows = [(t, one[j], worst[j], three[j]) for j, t in enumerate(ts)]
    res = RunResult({}, rows, BOUNDS_COLUMNS)
    if out_dir is not None:
        res.files.append(write_csv(Path(out_dir) / "bounds.csv", BOUNDS_COLUMNS, rows))
    return res


RUNNERS = {"single": run_single, "sweep": run_sweep, "bayes": run_bayes, "drift": run_drift}
