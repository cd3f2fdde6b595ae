import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from global_bandits import harness
from global_bandits.cli import main
from global_bandits.config import load_config, parse_config
from global_bandits.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def small(name, **over):
    return load_config(CONFIGS / name).with_overrides(**over)


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def gp_doc(**extra):
    doc = {
        "mode": "single",
        "environment": {"type": "gp", "arms": "three-arm", "theta_star": 0.6},
        "policies": [{"policy": "wagp_gp"}, {"policy": "oracle"}],
        "horizon": 200,
        "replications": 4,
        "master_seed": 7,
    }
    doc.update(extra)
    return doc


class TestFormatting:
    def test_fmt(self):
        assert harness.fmt(None) == "" and harness.fmt(float("nan")) == ""
        assert harness.fmt(3) == "3" and harness.fmt(0.1) == "0.1"
        assert harness.fmt(1 / 3) == "0.333333333333"

    def test_csv_text(self):
        assert harness.csv_text(["a", "b"], [(1, None)]) == "a,b\n1,\n"


class TestConfig:
    def test_shipped_configs_parse(self):
        for p in sorted(CONFIGS.glob("*.json")):
            load_config(p)

    @pytest.mark.parametrize("patch,where", [
        ({"horizon": 0}, "horizon"),
        ({"policies": [{"policy": "nope"}]}, "policies"),
        ({"environment": {"type": "gp", "arms": "three-arm", "theta_star": 1.5}}, "environment"),
        ({"mode": "party"}, "mode"),
    ])
    def test_errors_name_location(self, patch, where):
        with pytest.raises(ConfigError) as ei:
            parse_config(gp_doc(**patch))
        assert where in str(ei.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.json")

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"mode": }')
        with pytest.raises(ConfigError) as ei:
            load_config(p)
        assert "1:" in str(ei.value)

    def test_overrides(self):
        cfg = parse_config(gp_doc()).with_overrides(seed=3, reps=2, horizon=50, workers=2)
        assert (cfg.master_seed, cfg.replications, cfg.horizon, cfg.workers) == (3, 2, 50, 2)


class TestRunners:
    def test_single(self, tmp_path):
        cfg = parse_config(gp_doc(outputs={"every": 1}))
        res = harness.run_single(cfg, tmp_path)
        rows = read(tmp_path / "summary.csv")
        assert list(rows[0]) == list(harness.SUMMARY_COLUMNS)
        oracle = [r for r in rows if r["policy"] == "oracle"]
        assert all(float(r["mean_cum_regret"]) == 0 for r in oracle)
        greedy = np.array([float(r["mean_cum_regret"]) for r in rows if r["policy"] == "wagp_gp"])
        assert len(greedy) == 200 and np.all(np.diff(greedy) >= 0)
        assert all(float(r["worst_case_bound"]) > 0 for r in rows)
        assert res.files == [tmp_path / "summary.csv"]

    def test_workers_match_serial(self, tmp_path):
        cfg = parse_config(gp_doc())
        a = harness.run_single(cfg, tmp_path / "a")
        b = harness.run_single(cfg.with_overrides(workers=2), tmp_path / "b")
        assert (tmp_path / "a/summary.csv").read_bytes() == (tmp_path / "b/summary.csv").read_bytes()
        assert a.rows == b.rows

    def test_traces(self, tmp_path):
        cfg = parse_config(gp_doc(outputs={"every": 50, "traces": True}, replications=2))
        harness.run_single(cfg, tmp_path)
        rows = read(tmp_path / "trace_wagp_gp_0.csv")
        assert len(rows) == 200

    def test_gi_config(self, tmp_path):
        harness.run_single(small("gi_three_arm.json", reps=3, horizon=300), tmp_path)
        assert read(tmp_path / "summary.csv")

    def test_sweep(self, tmp_path):
        cfg = small("sweep_lower_bound.json", reps=3, horizon=200)
        harness.run_sweep(cfg, tmp_path)
        rows = read(tmp_path / "sweep.csv")
        kinds = {r["kind"] for r in rows}
        assert kinds == {"point", "max"}

    def test_bayes_needs_replications(self):
        with pytest.raises(ConfigError):
            harness.run_bayes(small("bayes_two_linear.json", reps=10, horizon=50))

    def test_drift(self, tmp_path):
        harness.run_drift(small("drift_sinusoid.json", reps=2, horizon=2000), tmp_path)
        rows = read(tmp_path / "drift.csv")
        assert {r["policy"] for r in rows} >= {"wagp_gp"}

    def test_analyze_and_bounds(self, tmp_path):
        cfg = small("single_three_arm.json")
        harness.run_analyze(cfg, tmp_path)
        rows = read(tmp_path / "structure.csv")
        assert float(rows[0]["Delta_min"]) == pytest.approx(0.169836, abs=1e-5)
        harness.run_bounds(cfg, tmp_path)
        b = read(tmp_path / "bounds.csv")
        assert len(b) == 500 or int(b[-1]["t"]) == cfg.horizon


class TestCli:
    def test_missing_config_exit_2(self, tmp_path, capsys):
        assert main(["simulate", "--config", str(tmp_path / "x.json")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_unknown_flag_exit_2(self):
        assert main(["simulate", "--config", "a.json", "--bogus"]) == 2

    def test_no_command(self):
        assert main([]) == 2

    def test_bounds_stdout(self, capsys):
        assert main(["bounds", "--config", str(CONFIGS / "single_three_arm.json"), "--horizon", "20"]) == 0
        out = capsys.readouterr().out
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 20 and rows[0]["t"] == "1"

    def test_simulate_same_seed_same_bytes(self, tmp_path):
        args = ["simulate", "--config", str(CONFIGS / "single_three_arm.json"), "--reps", "3", "--horizon", "300"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        assert main(args + ["--out", str(tmp_path / "c"), "--seed", "99"]) == 0
        a, b, c = ((tmp_path / d / "summary.csv").read_bytes() for d in "abc")
        assert a == b and a != c

    def test_sweep_needs_block(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(gp_doc()))
        assert main(["sweep", "--config", str(p)]) == 2

    def test_module_entry(self):
        out = subprocess.run([sys.executable, "-m", "global_bandits", "analyze", "--config",
                              str(CONFIGS / "single_three_arm.json")], capture_output=True, text=True)
        assert out.returncode == 0 and out.stdout.startswith("theta,delta_min,Delta_min,C1,C2")
