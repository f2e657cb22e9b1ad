import csv
import hashlib
import json

import pytest

from horizongen.cli import main

FAST = [
    "num_trajectories=300",
    "trajectory_length=20",
    "n_pairs=60",
    "invariance_pairs=20",
    "max_steps=400",
]


def args(command, out, *extra):
    argv = [command, "--output-dir", str(out)]
    for kv in FAST + list(extra):
        argv += ["--set", kv]
    return argv


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(args("pipeline", out)) == 0
    return out


def test_pipeline_writes_artifacts(pipeline_run):
    for name in ["dataset.csv", "dataset.json", "distances.csv", "quasimetric.csv", "quasimetric.json",
                 "pairs.csv", "curve.csv", "invariance.csv", "report.csv", "scatter.csv", "summary.json",
                 "config.resolved.ini"]:
        assert (pipeline_run / name).exists(), name
    summary = json.loads((pipeline_run / "summary.json").read_text())
    assert summary["certified"] is True
    assert summary["max_steps"] == 400


def test_summary_matches_pair_recount(pipeline_run):
    summary = json.loads((pipeline_run / "summary.json").read_text())
    with open(pipeline_run / "pairs.csv") as f:
        pairs = list(csv.DictReader(f))
    edges = [b["bin_upper"] for b in summary["curve"]]
    for b in summary["curve"]:
        lo = max([e for e in edges if e < b["bin_upper"]], default=-1.0)
        inside = [p for p in pairs if lo < float(p["distance"]) <= b["bin_upper"]]
        assert len(inside) == b["n_pairs"]
        assert sum(int(p["success"]) for p in inside) == b["successes"]


def test_pipeline_is_deterministic(pipeline_run, tmp_path):
    assert main(args("pipeline", tmp_path)) == 0
    for name in ["dataset.csv", "distances.csv", "quasimetric.csv", "pairs.csv", "curve.csv", "invariance.csv", "summary.json"]:
        assert digest(tmp_path / name) == digest(pipeline_run / name), name


def test_stages_reuse_outputs(tmp_path, capsys):
    assert main(args("generate", tmp_path)) == 0
    assert main(args("estimate", tmp_path)) == 0
    assert main(args("project", tmp_path)) == 0
    assert "certified=True" in capsys.readouterr().out
    assert main(args("evaluate", tmp_path)) == 0
    assert "eta=" in capsys.readouterr().out
    assert main(args("invariance", tmp_path)) == 0
    assert "ratio=" in capsys.readouterr().out


def test_invariance_without_planner_is_config_error(tmp_path):
    assert main(args("invariance", tmp_path, "planner=none", "policy=random")) == 1


def test_bad_config_exit_code(tmp_path, capsys):
    assert main(args("pipeline", tmp_path, "gamma=2")) == 1
    assert "config error" in capsys.readouterr().err
    assert main(["pipeline", "--set", "novalue"]) == 1


def test_runtime_error_exit_code(tmp_path, capsys):
    maze = tmp_path / "m.txt"
    maze.write_text("..\n..\n")
    # no pair that far apart in a 2x2 room
    assert main(args("invariance", tmp_path, f"maze={maze}", "distant_threshold=10")) == 2
    assert "error:" in capsys.readouterr().err


def test_bellman_command(tmp_path, capsys):
    argv = ["bellman", "--output-dir", str(tmp_path), "--set", "bellman_trajectories=200",
            "--set", "bellman_batch=128", "--set", "bellman_eval_pairs=10"]
    assert main(argv) == 0
    with open(tmp_path / "bellman.csv") as f:
        rows = list(csv.DictReader(f))
    errs = [float(r["error"]) for r in rows]
    assert errs[0] < 1e-6
    assert errs == sorted(errs)


def test_report_and_plot_data(pipeline_run, tmp_path, capsys):
    raw = tmp_path / "raw"
    assert main(args("pipeline", raw, "project=false")) == 0
    capsys.readouterr()
    assert main(["report", str(pipeline_run), str(raw), "--output-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "hitting_time+quasimetric/boltzmann" in out and "hitting_time/boltzmann" in out
    assert (tmp_path / "report.csv").exists() and (tmp_path / "scatter.csv").exists()
    assert main(["plot-data", str(pipeline_run), str(raw)]) == 0
    assert capsys.readouterr().out.strip()
