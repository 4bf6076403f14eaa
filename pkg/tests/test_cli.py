import json

import numpy as np
import pytest

from navsim.cli import main, sample_starts
from navsim.shadow import classify
from navsim.svg import render_svg
from navsim.world import (Obstacle, Scenario, World, save_scenario,
                          save_world)


@pytest.fixture
def single_world_file(tmp_path):
    w = World(10.0, (Obstacle([0.0, 0.0], 1.0),))
    p = tmp_path / "world.json"
    save_world(w, p)
    return p


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def test_validate_ok(single_world_file, capsys):
    code, out = run_cli(capsys, "validate", single_world_file,
                        "--destination", "5,0")
    assert code == 0
    doc = json.loads(out)
    assert doc["ok"] and doc["checked_a3"]


def test_validate_overlap_exit_1(tmp_path, capsys):
    w = World(10.0, (Obstacle([0, 0], 1.0), Obstacle([1.5, 0], 1.0)))
    p = tmp_path / "bad.json"
    save_world(w, p)
    code, out = run_cli(capsys, "validate", p)
    assert code == 1
    doc = json.loads(out)
    assert doc["violations"][0]["assumption"] == "A2"


def test_validate_malformed_exit_2(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{nope")
    code, _ = run_cli(capsys, "validate", p)
    assert code == 2


def test_classify_json_and_svg(single_world_file, tmp_path, capsys):
    svg = tmp_path / "map.svg"
    code, out = run_cli(capsys, "classify", single_world_file,
                        "--destination", "5,0", "--svg", svg)
    assert code == 0
    doc = json.loads(out)
    assert doc == {"generations": {"1": 1}, "s": 1}
    text = svg.read_text()
    assert text.startswith("<svg") and "</svg>" in text


def test_classify_svg_rejected_for_3d(tmp_path, capsys):
    w = World(10.0, (Obstacle([0.0, 0.0, 0.0], 1.0),))
    p = tmp_path / "w3.json"
    save_world(w, p)
    code, _ = run_cli(capsys, "classify", p, "--destination", "5,0,0",
                      "--svg", tmp_path / "no.svg")
    assert code == 1
    code, out = run_cli(capsys, "classify", p, "--destination", "5,0,0")
    assert code == 0 and json.loads(out)["generations"] == {"1": 1}


def test_simulate_writes_runs_and_svg(single_world_file, tmp_path, capsys):
    sc = Scenario(destination=[5.0, 0.0],
                  starts=([-5.0, 0.1], [0.0, 3.0]),
                  gamma=1.0, dt=1e-3, t_max=50.0, tol=1e-2)
    scen = tmp_path / "scenario.json"
    save_scenario(sc, scen)
    out_dir = tmp_path / "runs"
    code, out = run_cli(capsys, "--out-dir", out_dir, "simulate",
                        single_world_file, scen, "--svg", "combined.svg")
    assert code == 0
    doc = json.loads(out)
    assert doc["runs"] == 2 and doc["outcomes"] == {"Converged": 2}
    for i in range(2):
        assert (out_dir / f"run_{i:03d}.csv").exists()
        summary = json.loads((out_dir / f"run_{i:03d}.json").read_text())
        assert summary["outcome"] == "Converged"
    assert (out_dir / "combined.svg").exists()


def test_simulate_stalled_start_exits_zero(single_world_file, tmp_path, capsys):
    sc = Scenario(destination=[5.0, 0.0], starts=([-2.0, 0.0],),
                  gamma=1.0, dt=1e-3, t_max=50.0, tol=1e-2)
    scen = tmp_path / "scenario.json"
    save_scenario(sc, scen)
    code, out = run_cli(capsys, "--out-dir", tmp_path / "r", "simulate",
                        single_world_file, scen)
    assert code == 0
    assert json.loads(out)["outcomes"] == {"Stalled": 1}


def test_simulate_rejects_start_outside_free_space(single_world_file,
                                                   tmp_path, capsys):
    sc = Scenario(destination=[5.0, 0.0], starts=([0.2, 0.0],),
                  gamma=1.0, dt=1e-3, t_max=10.0, tol=1e-2)
    scen = tmp_path / "scenario.json"
    save_scenario(sc, scen)
    code, _ = run_cli(capsys, "--out-dir", tmp_path / "r", "simulate",
                      single_world_file, scen)
    assert code == 1


def test_compare_single_obstacle_all_match(single_world_file, tmp_path, capsys):
    report = tmp_path / "report.json"
    code, out = run_cli(capsys, "--seed", 9, "compare",
                        "--world", single_world_file,
                        "--destination", "5,0", "--starts", 20,
                        "--out", report)
    assert code == 0
    doc = json.loads(report.read_text())
    assert doc["outcome_counts"] == {"Converged": 20}
    assert doc["match_rate"] == 1.0
    assert len(doc["runs"]) == 20
    for entry in doc["runs"]:
        assert entry["matched"]
        assert entry["tp_length"] >= entry["oracle_length"] * 0.995


def test_compare_obstacle_free_world(tmp_path, capsys):
    w = World(10.0, dimension=2)
    p = tmp_path / "empty.json"
    save_world(w, p)
    code, out = run_cli(capsys, "--seed", 4, "compare", "--world", p,
                        "--destination", "0,0", "--starts", 10)
    assert code == 0
    assert json.loads(out)["match_rate"] == 1.0


def test_compare_generated_world_with_path_dump_and_overlay(tmp_path, capsys):
    paths_dir = tmp_path / "paths"
    code, out = run_cli(capsys, "--seed", 5, "compare", "--obstacles", 8,
                        "--starts", 4, "--destination", "0,0",
                        "--dump-paths", paths_dir,
                        "--out", tmp_path / "report.json")
    assert code == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["world"]["dimension"] == 2  # generated world echoed in full
    dumps = sorted(paths_dir.glob("oracle_*.json"))
    assert len(dumps) == doc["outcome_counts"]["Converged"]
    polyline = json.loads(dumps[0].read_text())
    assert polyline["length"] > 0 and len(polyline["polyline"][0]) == 2
    # the dumped polyline overlays onto a plot of the same world
    world_file = tmp_path / "w.json"
    save_world(
        World(doc["world"]["workspace_radius"],
              tuple(Obstacle(o["center"], o["radius"])
                    for o in doc["world"]["obstacles"])), world_file)
    code, _ = run_cli(capsys, "plot", world_file, "--destination", "0,0",
                      "--oracle", dumps[0], "--out", tmp_path / "o.svg")
    assert code == 0
    assert (tmp_path / "o.svg").read_text().count("<polyline") == 1


def test_compare_report_deterministic(single_world_file, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out_file in (a, b):
        code, _ = run_cli(capsys, "--seed", 12, "compare",
                          "--world", single_world_file,
                          "--destination", "5,0", "--starts", 8,
                          "--out", out_file)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_compare_respects_jobs_env(single_world_file, tmp_path, capsys,
                                   monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    code, _ = run_cli(capsys, "--seed", 3, "compare", "--world",
                      single_world_file, "--destination", "5,0",
                      "--starts", 6, "--out", a)
    assert code == 0
    monkeypatch.setenv("NAVSIM_JOBS", "2")
    code, _ = run_cli(capsys, "--seed", 3, "--jobs", "1", "compare",
                      "--world", single_world_file, "--destination", "5,0",
                      "--starts", 6, "--out", b)
    assert code == 0
    assert a.read_bytes() == b.read_bytes()  # scheduling never changes results


def test_gen_world_and_validate_roundtrip(tmp_path, capsys):
    p = tmp_path / "gen.json"
    code, _ = run_cli(capsys, "--seed", 2, "gen-world", "--obstacles", 10,
                      "--out", p)
    assert code == 0
    code, out = run_cli(capsys, "validate", p, "--destination", "0,0")
    assert code == 0
    assert json.loads(out)["ok"]


def test_plot_deterministic_and_structured(single_world_file, tmp_path, capsys):
    sc = Scenario(destination=[5.0, 0.0], starts=([-5.0, 0.1],),
                  gamma=1.0, dt=1e-3, t_max=50.0, tol=1e-2)
    scen = tmp_path / "scenario.json"
    save_scenario(sc, scen)
    out_dir = tmp_path / "runs"
    run_cli(capsys, "--out-dir", out_dir, "simulate", single_world_file, scen)
    svg1 = tmp_path / "p1.svg"
    svg2 = tmp_path / "p2.svg"
    for target in (svg1, svg2):
        code, _ = run_cli(capsys, "plot", single_world_file,
                          "--destination", "5,0", "--shadows",
                          "--trajectory", out_dir / "run_000.csv",
                          "--out", target)
        assert code == 0
    assert svg1.read_bytes() == svg2.read_bytes()
    text = svg1.read_text()
    assert text.count("<circle") >= 3  # workspace, obstacle, destination
    assert "<polyline" in text and "<polygon" in text


def test_render_svg_empty_world_one_trajectory():
    w = World(10.0, dimension=2)
    traj = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
    text = render_svg(w, trajectories=[traj])
    assert text.count("<circle") == 1
    assert text.count("<polyline") == 1
    assert render_svg(w, trajectories=[traj]) == text


def test_sample_starts_avoid_halflines_and_obstacles():
    w = World(10.0, (Obstacle([0.0, 0.0], 1.0),))
    xd = np.array([5.0, 0.0])
    starts = sample_starts(w, xd, 50, seed=1)
    assert len(starts) == 50
    for s in starts:
        assert np.linalg.norm(s) <= 10.0
        assert np.linalg.norm(s - [0, 0]) >= 1.0
        # distance to the destination-anchored half-line x <= 0, y = 0
        if s[0] < 0:
            assert abs(s[1]) >= 1e-3 * 10.0
