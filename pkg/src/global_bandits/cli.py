"""Command-line entry point: ``global-bandits <subcommand> --config PATH [...]``.

Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .config import load_config
from .errors import ConfigError

COMMANDS = {
    "simulate": "Monte Carlo run of every configured policy (summary.csv, optional traces)",
    "sweep": "one run per theta_star on the sweep grid (sweep.csv)",
    "bayes": "Bayesian risk with theta_star drawn from the prior (summary.csv)",
    "drift": "windowed vs static policy on a drifting parameter (drift.csv, summary.csv)",
    "analyze": "structural summary table (structure.csv)",
    "bounds": "closed-form bound table (bounds.csv)",
}

_MODE_FOR = {"simulate": None, "sweep": "sweep", "bayes": "bayes", "drift": "drift"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="global-bandits", description="Global bandit simulations and bounds.")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", required=True, metavar="PATH", help="JSON experiment config")
        p.add_argument("--seed", type=int, metavar="N", help="override master_seed")
        p.add_argument("--out", metavar="DIR", help="output directory (stdout only when omitted)")
        p.add_argument("--reps", type=int, metavar="N", help="override replications")
        p.add_argument("--horizon", type=int, metavar="N", help="override the horizon T")
        p.add_argument("--workers", type=int, metavar="N", help="worker processes (output is identical)")
    return ap


def _run(args) -> harness.RunResult:
    cfg = load_config(args.config).with_overrides(args.seed, args.reps, args.horizon, args.workers)
    out = Path(args.out) if args.out else None
    cmd = args.command
    if cmd == "analyze":
        return harness.run_analyze(cfg, out)
    if cmd == "bounds":
        return harness.run_bounds(cfg, out)
    mode = _MODE_FOR[cmd] or cfg.mode
    if cmd == "simulate" and mode != "single":
        mode = "single"
    if mode == "sweep" and not cfg.sweep_thetas:
        raise ConfigError("sweep needs a 'sweep' block", "<root>")
    if mode == "bayes" and cfg.prior is None:
        raise ConfigError("bayes needs a 'bayes' block", "<root>")
    if mode == "drift" and cfg.drift is None:
        raise ConfigError("drift needs a drift environment", "environment")
    # validate the environment before any simulation work
    if mode == "single":
        cfg.build_environment()
    return harness.RUNNERS[mode](cfg, out)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        res = _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.out:
        for f in res.files:
            print(f)
    elif args.command in ("analyze", "bounds") or len(res.rows) <= 200:
        sys.stdout.write(harness.csv_text(res.columns, res.rows))
    else:
        sys.stdout.write(harness.csv_text(res.columns, res.rows[:200]))
        print(f"... {len(res.rows) - 200} more rows; use --out to write them", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
