import csv
import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from swarmplan.cli import main
from swarmplan.environment import Obstacle, Scenario, WorldBounds, dump_scenario


def _write_scenario(path, sc):
    path.write_text(dump_scenario(sc))
    return str(path)


@pytest.fixture
def free_file(tmp_path):
    sc = Scenario(WorldBounds((0, 0, 0), (100, 100, 50)), ((10, 10, 10),), ((60, 40, 20),))
    return _write_scenario(tmp_path / "free.json", sc)


def _run(tmp_path, *argv, out="out"):
    out_dir = tmp_path / out
    return main([*argv, "--out-dir", str(out_dir), "--quiet"]), out_dir


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# --- plan ---------------------------------------------------------------------------

def test_plan_free_space_reaches_goal(tmp_path, free_file):
    code, out = _run(tmp_path, "plan", free_file, "--iterations", "50")
    assert code == 0
    rows = _rows(out / "trajectory.csv")
    assert len(rows) == 50
    np.testing.assert_allclose([float(rows[-1][k]) for k in "xyz"], (60, 40, 20), atol=1e-6)
    cost = json.loads((out / "cost.json").read_text())
    assert cost["cost"]["distance"] >= float(np.linalg.norm([50, 30, 10])) - 1e-9
    assert len(_rows(out / "convergence.csv")) == 50
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "plan" and manifest["seed"] == 0


def test_plan_samples_flag(tmp_path, free_file):
    code, out = _run(tmp_path, "plan", free_file, "--iterations", "5", "--samples", "20")
    assert code == 0 and len(_rows(out / "trajectory.csv")) == 20


def test_plan_goal_inside_obstacle_is_config_error(tmp_path):
    doc = {"bounds": {"min": [0, 0, 0], "max": [100, 100, 50]}, "uavs": [{"start": [5, 5, 5]}],
           "tasks": [[50, 50, 20]], "obstacles": [{"center": [50, 50, 20], "radius": 5}]}
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    code, _ = _run(tmp_path, "plan", str(tmp_path / "bad.json"))
    assert code == 1


def test_plan_zero_iterations_without_seeding_is_empty_pool(tmp_path):
    # the seeded straight line crosses the obstacle, so nothing legal exists before stepping
    sc = Scenario(WorldBounds((0, 0, 0), (100, 100, 30)), ((5, 50, 10),), ((95, 50, 10),),
                  obstacles=(Obstacle((50, 50, 10), 10),))
    path = _write_scenario(tmp_path / "wall.json", sc)
    code, out = _run(tmp_path, "plan", path, "--iterations", "0")
    assert code == 2
    assert not (out / "trajectory.csv").exists()


@pytest.mark.parametrize("argv", [["--uav", "3"], ["--task", "-1"], ["--samples", "1"], ["--iterations", "-2"]])
def test_plan_bad_arguments(tmp_path, free_file, argv):
    code, _ = _run(tmp_path, "plan", free_file, *argv)
    assert code == 1


def test_missing_scenario_file(tmp_path):
    code, _ = _run(tmp_path, "plan", str(tmp_path / "nope.json"))
    assert code == 1


def test_unknown_builtin(tmp_path):
    code, _ = _run(tmp_path, "plan", "builtin:moon-base")
    assert code == 1


# --- allocate -------------------------------------------------------------------------

def test_allocate_with_oracle_reports_nonnegative_gap(tmp_path):
    rng = np.random.default_rng(3)
    sc = Scenario(WorldBounds((0, 0, 0), (100, 100, 100)), tuple(map(tuple, rng.uniform(0, 100, (2, 3)))),
                  tuple(map(tuple, rng.uniform(0, 100, (5, 3)))))
    code, out = _run(tmp_path, "allocate", _write_scenario(tmp_path / "s.json", sc), "--oracle")
    assert code == 0
    doc = json.loads((out / "assignment.json").read_text())
    assert doc["oracle"]["gap"] >= -1e-9
    assert sorted(t for tour in doc["assignment"] for t in tour) == list(range(5))


def test_allocate_single_uav_single_task(tmp_path):
    sc = Scenario(WorldBounds((0, 0, 0), (10, 10, 10)), ((1, 1, 1),), ((9, 9, 9),))
    code, out = _run(tmp_path, "allocate", _write_scenario(tmp_path / "s.json", sc), "--oracle")
    doc = json.loads((out / "assignment.json").read_text())
    assert code == 0 and doc["assignment"] == [[0]] and doc["oracle"]["gap"] == pytest.approx(0.0, abs=1e-12)


def test_allocate_output_is_byte_identical(tmp_path):
    a_code, a = _run(tmp_path, "allocate", "builtin:three-uav-five-task", "--seed", "5", out="a")
    b_code, b = _run(tmp_path, "allocate", "builtin:three-uav-five-task", "--seed", "5", out="b")
    assert a_code == b_code == 0
    assert (a / "assignment.json").read_bytes() == (b / "assignment.json").read_bytes()


def test_allocate_oracle_refusal_exit_code(tmp_path):
    rng = np.random.default_rng(0)
    sc = Scenario(WorldBounds((0, 0, 0), (100, 100, 100)), ((0, 0, 0),), tuple(map(tuple, rng.uniform(0, 100, (9, 3)))))
    code, out = _run(tmp_path, "allocate", _write_scenario(tmp_path / "big.json", sc), "--oracle", "--generations", "5")
    assert code == 3
    assert "oracle" not in json.loads((out / "assignment.json").read_text())


# --- mission --------------------------------------------------------------------------

def test_mission_builtin_visits_all_tasks(tmp_path):
    code, out = _run(tmp_path, "mission", "builtin:three-uav-five-task", "--seed", "42")
    assert code == 0
    summary = json.loads((out / "mission.json").read_text())
    assert len(summary["visits"]) == 5
    assert len(list(out.glob("uav_*_trajectory_*.csv"))) >= 5


def test_mission_run_dirs_identical(tmp_path):
    args = ("mission", "builtin:three-uav-five-task", "--budget-mode", "iterations", "--seed", "9")
    _, a = _run(tmp_path, *args, out="a")
    _, b = _run(tmp_path, *args, out="b")
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        if name in ("manifest.json", "timing.csv"):
            continue
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_mission_event_file_adds_replan(tmp_path):
    base_code, base = _run(tmp_path, "mission", "builtin:three-uav-five-task", "--seed", "7", out="base")
    events = [{"type": "obstacle-add", "time": 2.0, "center": [46.0, 61.4, 15.5], "radius": 2.5}]
    (tmp_path / "events.json").write_text(json.dumps(events))
    code, out = _run(tmp_path, "mission", "builtin:three-uav-five-task", "--seed", "7",
                     "--events", str(tmp_path / "events.json"), out="ev")
    assert base_code == code == 0
    rows = _rows(out / "latency.csv")
    assert len(rows) == len(_rows(base / "latency.csv")) + 1
    assert [r["reason"] for r in rows].count("invalidated") == 1


def test_mission_config_file_with_relative_scenario(tmp_path, free_file):
    (tmp_path / "mission.json").write_text(json.dumps({"scenario": "free.json", "replan_iterations": 5}))
    code, out = _run(tmp_path, "mission", str(tmp_path / "mission.json"))
    assert code == 0
    assert len(_rows(out / "latency.csv")) == 1


def test_mission_wallclock_latency_columns(tmp_path, free_file):
    code, out = _run(tmp_path, "mission", free_file, "--budget-mode", "wallclock", "--t-max", "0.02")
    assert code == 0
    assert "wall_ms" in _rows(out / "latency.csv")[0]


def test_mission_stall_is_exit_4(tmp_path, free_file):
    events = [{"type": "obstacle-add", "time": 1.0, "center": [60, 40, 20], "radius": 4}]
    (tmp_path / "ev.json").write_text(json.dumps(events))
    code, _ = _run(tmp_path, "mission", free_file, "--events", str(tmp_path / "ev.json"), "--iterations", "2")
    assert code == 4


def test_mission_malformed_config(tmp_path):
    (tmp_path / "m.json").write_text("{nope")
    code, _ = _run(tmp_path, "mission", str(tmp_path / "m.json"))
    assert code == 1


# --- bench ---------------------------------------------------------------------------

def test_bench_two_seeds(tmp_path):
    code, out = _run(tmp_path, "bench", "--functions", "sphere", "--seeds", "2", "--iterations", "50")
    assert code == 0
    report = _rows(out / "bench_report.csv")
    assert [(r["function"], r["optimizer"]) for r in report] == [("sphere", "pe_pso"), ("sphere", "vanilla_pso")]
    assert all(r["seed_count"] == "2" for r in report)
    assert len(_rows(out / "bench_runs.csv")) == 4


def test_bench_single_seed_rejected(tmp_path):
    code, _ = _run(tmp_path, "bench", "--functions", "sphere", "--seeds", "1")
    assert code == 1


def test_bench_unknown_function(tmp_path):
    code, _ = _run(tmp_path, "bench", "--functions", "himmelblau", "--seeds", "2")
    assert code == 1


@pytest.mark.slow
def test_default_bench_under_five_minutes(tmp_path):
    t0 = time.perf_counter()
    code, out = _run(tmp_path, "bench")
    assert code == 0
    assert time.perf_counter() - t0 < 300
    assert len(_rows(out / "bench_report.csv")) == 12


# --- general -------------------------------------------------------------------------

def test_help_documents_scenario_schema(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["plan", "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for key in ("bounds", "uavs", "tasks", "obstacles", "r_safe", "builtin:", "exit codes"):
        assert key in text


def test_writes_nothing_outside_out_dir(tmp_path, monkeypatch, free_file):
    work = tmp_path / "cwd"
    work.mkdir()
    monkeypatch.chdir(work)
    assert main(["plan", free_file, "--iterations", "5", "--out-dir", "o", "--quiet"]) == 0
    assert main(["allocate", free_file, "--out-dir", "o", "--quiet", "--generations", "5"]) == 0
    assert [p.name for p in work.iterdir()] == ["o"]
    assert sorted(os.listdir(tmp_path)) == ["cwd", "free.json"]


def test_console_script_entry_point(tmp_path, free_file):
    out = tmp_path / "o"
    proc = subprocess.run(
        [sys.executable, "-m", "swarmplan.cli", "plan", free_file, "--iterations", "3", "--out-dir", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "legal trajectory" in proc.stdout
