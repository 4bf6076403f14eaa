import csv
import math

import numpy as np
import pytest

from navsim.controller import ControlParams
from navsim.shadow import classify
from navsim.simulator import (Outcome, SimParams, local_maneuver_lengths,
                              simulate, step, summary_dict,
                              write_trajectory_csv)
from navsim.world import Obstacle, World


def empty_world():
    return World(10.0, dimension=2)


def single_world(r0=10.0):
    return World(r0, (Obstacle([0, 0], 1.0),))


XD = np.array([5.0, 0.0])


def test_step_fixed_point_at_destination():
    w = empty_world()
    gmap = classify(w, XD)
    params = SimParams.defaults(10.0)
    out = step(w, gmap, XD, params, 1e-3)
    np.testing.assert_array_equal(out, XD)


def test_step_matches_linear_ode():
    # obstacle-free world: xdot = -(x - xd) integrates to an exponential;
    # RK4 at dt = 1e-3 tracks it far below the 1e-8 budget
    w = empty_world()
    xd = np.zeros(2)
    gmap = classify(w, xd)
    params = SimParams.defaults(10.0)
    x = np.array([1.0, 0.0])
    for _ in range(1000):
        x = step(w, gmap, x, params, 1e-3)
    assert np.linalg.norm(x - np.array([math.exp(-1.0), 0.0])) <= 1e-8


def test_step_respects_clearance_cap():
    # tiny clearance with a fast control forces dt_eff < dt: the step
    # displacement is pinned to the cap fraction of max(clearance, conv_tol)
    w = single_world()
    gmap = classify(w, XD)
    params = SimParams.defaults(10.0)
    x = np.array([9.99, 0.0])  # clearance 0.01 at the workspace boundary
    from navsim.controller import control
    u, _ = control(w, gmap, x, ControlParams())
    cap_len = params.clearance_step_cap * max(0.01, params.conv_tol)
    assert np.linalg.norm(u) * params.dt > cap_len  # the cap binds here
    out = step(w, gmap, x, params, params.dt)
    moved = np.linalg.norm(out - x)
    assert moved == pytest.approx(cap_len, rel=1e-2)
    assert moved < np.linalg.norm(u) * params.dt


def test_simulate_trivial_convergence():
    w = empty_world()
    gmap = classify(w, XD)
    rec = simulate(w, gmap, XD, SimParams.defaults(10.0))
    assert rec.outcome is Outcome.CONVERGED
    assert rec.path_length == 0.0
    assert rec.steps == 0


def test_simulate_straight_line_phase_parallel_to_sight():
    w = single_world()
    gmap = classify(w, XD)
    rec = simulate(w, gmap, np.array([2.0, 4.0]), SimParams.defaults(10.0))
    assert rec.outcome is Outcome.CONVERGED
    for j in range(0, len(rec.times), 50):
        x, u = rec.states[j], rec.controls[j]
        if rec.chain_lens[j] == 0 and np.linalg.norm(u) > 1e-12:
            that = (XD - x) / np.linalg.norm(XD - x)
            perp = u - that * float(u @ that)
            # sine of the misalignment: robust for near-parallel vectors
            assert np.linalg.norm(perp) <= 1e-9 * np.linalg.norm(u)


def test_simulate_descent_in_visible_set():
    # V = ||x - xd||^2 / 2 strictly decreases along visible samples
    w = single_world()
    gmap = classify(w, XD)
    rec = simulate(w, gmap, np.array([-5.0, 2.5]), SimParams.defaults(10.0))
    assert rec.outcome is Outcome.CONVERGED
    d = np.linalg.norm(rec.states - XD, axis=1)
    visible = rec.chain_lens == 0
    dd = d[1:] - d[:-1]
    both_visible = visible[:-1] & visible[1:]
    assert np.all(dd[both_visible] < 0.0)


def test_simulate_stall_on_central_half_line():
    w = single_world()
    gmap = classify(w, XD)
    x0 = np.zeros(2) + 2.0 * (np.zeros(2) - XD) / np.linalg.norm(XD)
    rec = simulate(w, gmap, x0, SimParams.defaults(10.0))
    assert rec.outcome is Outcome.STALLED
    assert np.linalg.norm(rec.states[-1] - x0) < 1e-3


def test_simulate_perturbed_start_escapes_the_repeller():
    w = single_world()
    gmap = classify(w, XD)
    x0 = np.zeros(2) + 2.0 * (np.zeros(2) - XD) / np.linalg.norm(XD)
    rec = simulate(w, gmap, x0 + np.array([0.0, 1e-5]), SimParams.defaults(10.0))
    assert rec.outcome is Outcome.CONVERGED


def test_simulate_timeout_with_tiny_horizon():
    w = empty_world()
    gmap = classify(w, XD)
    params = SimParams.defaults(10.0, t_max=1e-2)
    rec = simulate(w, gmap, np.array([-8.0, 0.5]), params)
    assert rec.outcome is Outcome.TIMEOUT


def test_simulate_forward_invariance_band():
    w = single_world()
    gmap = classify(w, XD)
    rec = simulate(w, gmap, np.array([-5.0, 0.05]), SimParams.defaults(10.0))
    assert rec.outcome is Outcome.CONVERGED
    assert rec.min_clearance >= -1e-6 * 10.0


def test_simulate_path_length_dt_convergence():
    # halving dt changes the wrap path length by well under 1e-6 relative
    w = single_world()
    gmap = classify(w, XD)
    x0 = np.array([-5.0, 0.1])
    lengths = []
    for dt in (1e-3, 5e-4):
        params = SimParams.defaults(10.0, dt=dt)
        rec = simulate(w, gmap, x0, params)
        assert rec.outcome is Outcome.CONVERGED
        lengths.append(rec.path_length + np.linalg.norm(rec.states[-1] - XD))
    assert abs(lengths[0] - lengths[1]) / lengths[1] <= 1e-6


def test_simulate_visited_obstacles_wrap():
    w = single_world()
    gmap = classify(w, XD)
    rec = simulate(w, gmap, np.array([-5.0, 0.1]), SimParams.defaults(10.0))
    assert rec.outcome is Outcome.CONVERGED
    assert rec.visited_obstacles == (1,)


def test_local_maneuver_lengths_free_path():
    w = single_world()
    gmap = classify(w, XD)
    rec = simulate(w, gmap, np.array([2.0, 4.0]), SimParams.defaults(10.0))
    segs = local_maneuver_lengths(rec, w)
    assert len(segs) == 1
    oid, a, b, length = segs[0]
    assert oid is None
    np.testing.assert_array_equal(a, rec.states[0])
    assert length == pytest.approx(rec.path_length)


def test_local_maneuver_lengths_single_wrap():
    # inflate the detection ball slightly: one visit, the exit point on the
    # destination-side of the wrap, segment lengths summing to the path
    w = single_world()
    gmap = classify(w, XD)
    rec = simulate(w, gmap, np.array([-5.0, 0.1]), SimParams.defaults(10.0))
    eps = 0.02
    segs = local_maneuver_lengths(rec, w, eps=eps)
    assert [s[0] for s in segs] == [1]
    oid, a, b, length = segs[0]
    np.testing.assert_array_equal(a, rec.states[0])
    np.testing.assert_array_equal(b, rec.states[-1])
    assert length == pytest.approx(rec.path_length)
    # the trajectory's exit from the inflated ball sits on the far side,
    # past the ball as seen from the start
    d = np.linalg.norm(rec.states - np.zeros(2), axis=1)
    inside = np.where(d <= 1.0 + eps)[0]
    assert inside.size > 0
    exit_state = rec.states[inside[-1]]
    assert exit_state[0] > 0.0


def test_local_maneuver_lengths_two_visits():
    w = World(14.0, (Obstacle([0, 0], 1.0), Obstacle([-4, 0.9], 1.0)))
    xd = np.array([6.0, 0.0])
    gmap = classify(w, xd)
    rec = simulate(w, gmap, np.array([-8.0, 1.2]), SimParams.defaults(14.0))
    assert rec.outcome is Outcome.CONVERGED
    segs = local_maneuver_lengths(rec, w, eps=0.05)
    ids = [s[0] for s in segs]
    assert ids == [2, 1]
    assert sum(s[3] for s in segs) == pytest.approx(rec.path_length)
    # interior boundaries chain correctly
    np.testing.assert_array_equal(segs[0][2], segs[1][1])


def test_trajectory_csv_round_trip(tmp_path):
    w = single_world()
    gmap = classify(w, XD)
    rec = simulate(w, gmap, np.array([-5.0, 0.1]),
                   SimParams.defaults(10.0, t_max=0.2))
    path = tmp_path / "run.csv"
    write_trajectory_csv(rec, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x1", "x2", "u1", "u2", "chain"]
    assert len(rows) == len(rec.times) + 1
    j = len(rec.times) // 2
    assert float(rows[j + 1][0]) == rec.times[j]
    assert float(rows[j + 1][1]) == rec.states[j][0]
    assert rows[j + 1][5] == ";".join(str(v) for v in rec.chain_at(j))


def test_summary_dict_fields():
    w = single_world()
    gmap = classify(w, XD)
    rec = simulate(w, gmap, np.array([3.0, 3.0]), SimParams.defaults(10.0))
    doc = summary_dict(rec)
    assert doc["outcome"] == "Converged"
    assert set(doc) == {"outcome", "path_length", "min_clearance", "steps",
                        "wall_time"}


def test_sim_params_validation():
    with pytest.raises(ValueError):
        SimParams(dt=0.0, t_max=1, conv_tol=1e-3, stall_speed_tol=1e-6,
                  stall_window=1.0, safety_tol=1e-6)
    with pytest.raises(ValueError):
        SimParams(dt=1e-3, t_max=1, conv_tol=1e-3, stall_speed_tol=1e-6,
                  stall_window=1.0, safety_tol=1e-6, clearance_step_cap=1.5)
