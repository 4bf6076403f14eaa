"""Closed-loop integration of xdot = u(x) with monitors and metrics.

A run integrates the feedback law with classical RK4 until the vehicle
converges, the horizon expires, the speed stalls near an undesired
equilibrium, or (never, by Theorem-style forward invariance) the state
leaves the free space.  Steps shrink near the free-space boundary so a
single step cannot jump across it.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .controller import ControlParams, control
from .geometry import as_vector
from .shadow import GenerationMap
from .world import Scenario, World


class Outcome(str, Enum):
    CONVERGED = "Converged"
    STALLED = "Stalled"
    UNSAFE = "Unsafe"
    TIMEOUT = "Timeout"
    DIAGNOSTIC = "Diagnostic"


_OUTCOME_BY_CODE = {
    _kernels.OUT_CONVERGED: Outcome.CONVERGED,
    _kernels.OUT_STALLED: Outcome.STALLED,
    _kernels.OUT_UNSAFE: Outcome.UNSAFE,
    _kernels.OUT_TIMEOUT: Outcome.TIMEOUT,
    _kernels.OUT_DIAGNOSTIC: Outcome.DIAGNOSTIC,
}

# Hard cap on recorded steps per run, to bound memory when the step-size
# governor shrinks dt near obstacles.
MAX_RECORDED_STEPS = 1_000_000


@dataclass(frozen=True)
class SimParams:
    """Integration step, horizon, and monitor thresholds."""

    dt: float
    t_max: float
    conv_tol: float
    stall_speed_tol: float
    stall_window: float
    safety_tol: float
    clearance_step_cap: float = 0.25

    def __post_init__(self):
        for name in ("dt", "t_max", "conv_tol", "stall_speed_tol",
                     "stall_window", "safety_tol"):
            if not float(getattr(self, name)) > 0.0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.clearance_step_cap < 1.0:
            raise ValueError("clearance_step_cap must be in (0, 1)")

    @classmethod
    def defaults(cls, r0: float, gamma: float = 1.0,
                 t_max: float | None = None, dt: float = 1e-3) -> "SimParams":
        return cls(
            dt=dt,
            t_max=50.0 / gamma if t_max is None else t_max,
            conv_tol=1e-3 * r0,
            stall_speed_tol=1e-6 * gamma * r0,
            stall_window=1.0 / gamma,
            safety_tol=1e-6 * r0,
        )

    @classmethod
    def from_scenario(cls, sc: Scenario, r0: float) -> "SimParams":
        return cls(
            dt=sc.dt,
            t_max=sc.t_max,
            conv_tol=sc.tol,
            stall_speed_tol=1e-6 * sc.gamma * r0,
            stall_window=1.0 / sc.gamma,
            safety_tol=1e-6 * r0,
        )


@dataclass
class TrajectoryRecord:
    """A completed run: samples, metrics, and the termination outcome."""

    times: np.ndarray            # (N,)
    states: np.ndarray           # (N, n)
    controls: np.ndarray         # (N, n)
    chain_lens: np.ndarray       # (N,) number of projections per sample
    chain_ids: np.ndarray        # (N, cap) 0-based kernel ids, row j valid to chain_lens[j]
    outcome: Outcome
    path_length: float
    min_clearance: float
    visited_obstacles: tuple[int, ...]
    wall_time: float

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def chain_at(self, j: int) -> tuple[int, ...]:
        """Projection chain of sample j as 1-based obstacle ids."""
        h = int(self.chain_lens[j])
        return tuple(int(v) + 1 for v in self.chain_ids[j, :h])

    @property
    def samples(self):
        """Iterate (t, x, u, chain) tuples; chain uses 1-based ids."""
        for j in range(len(self.times)):
            yield (float(self.times[j]), self.states[j], self.controls[j],
                   self.chain_at(j))


def step(world: World, gmap: GenerationMap, x, params: SimParams,
         dt: float, ctrl: ControlParams | None = None) -> np.ndarray:
    """One monitored RK4 step from x; returns the new state."""
    xa = as_vector(x)
    ctrl = ctrl or ControlParams()
    out = np.empty_like(xa)
    _, st = _kernels._single_step(
        xa, gmap.destination, world.centers, world.radii,
        world.workspace_radius, ctrl.gamma, ctrl.angle_tol,
        ctrl.chain_cap(world), dt, params.conv_tol,
        params.clearance_step_cap, out)
    if st != _kernels.STATUS_OK:
        control(world, gmap, xa, ctrl)  # raises the detailed diagnostic
        raise RuntimeError("stage-point diagnostic during RK4 step")
    return out


def _ball_visits(states: np.ndarray, center: np.ndarray, radius: float,
                 eps: float) -> list[tuple[int, int]]:
    """Maximal index runs where the path is inside B(center, radius + eps).

    Runs are [enter_idx, exit_idx) over sample indices; a run still open at
    the end of the path closes at the last sample.
    """
    d = np.linalg.norm(states - center, axis=1) - (radius + eps)
    inside = d <= 0.0
    visits = []
    start = None
    for j, flag in enumerate(inside):
        if flag and start is None:
            start = j
        elif not flag and start is not None:
            visits.append((start, j))
            start = None
    if start is not None:
        visits.append((start, len(inside)))
    return visits


def _visited_obstacles(states: np.ndarray, world: World,
                       eps: float = 0.0) -> tuple[int, ...]:
    """Ordered ids of obstacles whose inflated ball the path entered."""
    events = []
    for i in range(1, world.m + 1):
        o = world.obstacle(i)
        for enter, _ in _ball_visits(states, o.center, o.radius, eps):
            events.append((enter, i))
    events.sort()
    return tuple(i for _, i in events)


def simulate(world: World, gmap: GenerationMap, x0, params: SimParams,
             ctrl: ControlParams | None = None) -> TrajectoryRecord:
    """Integrate from x0 until convergence, stall, timeout, or (flagged as
    Unsafe) a free-space violation beyond the safety tolerance."""
    x0a = as_vector(x0)
    ctrl = ctrl or ControlParams()
    cap = ctrl.chain_cap(world)
    budget = min(int(math.ceil(params.t_max / params.dt)) * 8 + 16,
                 MAX_RECORDED_STEPS)
    t0 = time.perf_counter()
    out, nrec, path, minclr, ts, xs, us, ch_len, ch_mat = _kernels._integrate(
        x0a, gmap.destination, world.centers, world.radii,
        world.workspace_radius, ctrl.gamma, ctrl.angle_tol, cap,
        params.dt, params.t_max, params.conv_tol, params.stall_speed_tol,
        params.stall_window, params.safety_tol, params.clearance_step_cap,
        budget)
    wall = time.perf_counter() - t0
    states = xs[:nrec].copy()
    return TrajectoryRecord(
        times=ts[:nrec].copy(),
        states=states,
        controls=us[:nrec].copy(),
        chain_lens=ch_len[:nrec].copy(),
        chain_ids=ch_mat[:nrec].copy(),
        outcome=_OUTCOME_BY_CODE[int(out)],
        path_length=float(path),
        min_clearance=float(minclr),
        visited_obstacles=_visited_obstacles(states, world),
        wall_time=wall,
    )


def local_maneuver_lengths(rec: TrajectoryRecord, world: World,
                           eps: float = 0.0):
    """Split the path into per-obstacle avoidance maneuvers.

    Boundaries sit where the path leaves each inflated ball
    B(c_i, r_i + eps), found by sign change between samples with linear
    refinement; the final maneuver ends at the last sample.  Returns a
    list of (obstacle id, segment start point, segment end point, length);
    a path that never enters an inflated ball yields a single segment with
    id None.
    """
    states = rec.states
    seglens = np.linalg.norm(np.diff(states, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seglens)])
    total = float(cum[-1])

    def refine(j: int, center: np.ndarray, radius: float) -> tuple[float, np.ndarray]:
        """Arc position and point where d(x) - radius crosses zero in
        (x_{j-1}, x_j]."""
        d0 = float(np.linalg.norm(states[j - 1] - center)) - radius
        d1 = float(np.linalg.norm(states[j] - center)) - radius
        if d0 == d1:
            alpha = 1.0
        else:
            alpha = min(max(d0 / (d0 - d1), 0.0), 1.0)
        point = states[j - 1] + alpha * (states[j] - states[j - 1])
        return float(cum[j - 1] + alpha * seglens[j - 1]), point

    visits = []
    for i in range(1, world.m + 1):
        o = world.obstacle(i)
        for enter, exit_ in _ball_visits(states, o.center, o.radius, eps):
            if enter == 0:
                enter_arc, _ = 0.0, states[0]
            else:
                enter_arc, _ = refine(enter, o.center, o.radius + eps)
            if exit_ >= len(states):
                exit_arc, exit_pt = total, states[-1]
            else:
                exit_arc, exit_pt = refine(exit_, o.center, o.radius + eps)
            visits.append((enter_arc, exit_arc, exit_pt, i))
    visits.sort(key=lambda v: v[0])
    if not visits:
        return [(None, states[0].copy(), states[-1].copy(), total)]
    out = []
    prev_arc = 0.0
    prev_pt = states[0].copy()
    for k, (enter_arc, exit_arc, exit_pt, i) in enumerate(visits):
        last = k == len(visits) - 1
        end_arc = total if last else exit_arc
        end_pt = states[-1].copy() if last else exit_pt
        out.append((i, prev_pt, end_pt, float(end_arc - prev_arc)))
        prev_arc, prev_pt = end_arc, end_pt
    return out


def write_trajectory_csv(rec: TrajectoryRecord, path) -> None:
    """CSV with header t, x1..xn, u1..un, chain (';'-joined 1-based ids)."""
    n = rec.states.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{k + 1}" for k in range(n)]
                        + [f"u{k + 1}" for k in range(n)] + ["chain"])
        for j in range(len(rec.times)):
            row = [repr(float(rec.times[j]))]
            row += [repr(float(v)) for v in rec.states[j]]
            row += [repr(float(v)) for v in rec.controls[j]]
            row.append(";".join(str(v) for v in rec.chain_at(j)))
            writer.writerow(row)


def summary_dict(rec: TrajectoryRecord) -> dict:
    return {
        "outcome": rec.outcome.value,
        "path_length": rec.path_length,
        "min_clearance": rec.min_clearance,
        "steps": rec.steps,
        "wall_time": rec.wall_time,
    }
