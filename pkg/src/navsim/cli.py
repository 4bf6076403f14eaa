"""Command-line front end: validate, classify, simulate, compare, plot, gen-world.

Exit codes: 0 success (expected Stalled outcomes included), 1 validation
failure, 2 I/O or parse failure, 3 internal diagnostic (projection-chain
violation or an oracle lower-bound breach).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .controller import ChainDiagnosticError, ControlParams
from .oracle import (OracleBoundError, build_tangent_graph, match,
                     path_to_dict, shortest_path)
from .shadow import classify
from .simulator import (Outcome, SimParams, simulate, summary_dict,
                        write_trajectory_csv)
from .svg import render_svg
from .world import (World, WorldFormatError, WorldGenerationError,
                    clearance, free_space_contains, load_scenario, load_world,
                    random_world, save_world, validate, world_to_dict)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_DIAGNOSTIC = 3


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise WorldFormatError(f"cannot parse point '{text}'") from exc


def _jobs(args) -> int:
    env = os.environ.get("NAVSIM_JOBS")
    if env:
        return max(1, int(env))
    return max(1, args.jobs)


def _halfline_distance(p: np.ndarray, origin: np.ndarray,
                       direction: np.ndarray) -> float:
    """Distance from p to the half-line {origin + t*direction, t >= 0}."""
    dn = float(np.linalg.norm(direction))
    if dn == 0.0:
        return float(np.linalg.norm(p - origin))
    d = direction / dn
    t = max(float((p - origin) @ d), 0.0)
    return float(np.linalg.norm(origin + t * d - p))


def sample_starts(world: World, x_d: np.ndarray, n_starts: int, seed: int,
                  tube: float | None = None,
                  min_destination_distance: float | None = None) -> list[np.ndarray]:
    """Uniform starts in the free space, away from the destination-anchored
    central half-lines where the control law has its undesired equilibria."""
    rng = np.random.default_rng(seed)
    r0 = world.workspace_radius
    n = world.dimension
    tube = 1e-3 * r0 if tube is None else tube
    min_dd = 10.0 * 1e-3 * r0 if min_destination_distance is None else min_destination_distance
    out: list[np.ndarray] = []
    attempts = 0
    while len(out) < n_starts:
        attempts += 1
        if attempts > 100_000 * max(n_starts, 1):
            raise WorldGenerationError("could not sample enough start positions")
        direction = rng.normal(size=n)
        nn = float(np.linalg.norm(direction))
        if nn == 0.0:
            continue
        p = direction / nn * r0 * float(rng.uniform(0.0, 1.0)) ** (1.0 / n)
        if clearance(world, p) < 0.0:
            continue
        if float(np.linalg.norm(p - x_d)) < min_dd:
            continue
        ok = True
        for o in world.obstacles:
            if _halfline_distance(p, o.center, o.center - x_d) < tube:
                ok = False
                break
        if ok:
            out.append(p)
    return out


def run_batch(world: World, x_d: np.ndarray, starts, params: SimParams,
              ctrl: ControlParams, jobs: int = 1):
    """Simulate every start; results keyed by start index, so the merge is
    deterministic regardless of scheduling."""
    gmap = classify(world, x_d)
    if jobs <= 1:
        return [simulate(world, gmap, s, params, ctrl) for s in starts]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(simulate, world, gmap, s, params, ctrl)
                   for s in starts]
        return [f.result() for f in futures]


def tp_length(rec, x_d: np.ndarray) -> float:
    """Trajectory length completed by the straight remainder to the
    destination (integration stops at the convergence tolerance)."""
    return rec.path_length + float(np.linalg.norm(rec.states[-1] - x_d))


def cmd_validate(args) -> int:
    world = load_world(args.world)
    x_d = _parse_point(args.destination) if args.destination else None
    report = validate(world, x_d)
    _emit(report.to_dict())
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_classify(args) -> int:
    world = load_world(args.world)
    x_d = _parse_point(args.destination)
    if not free_space_contains(world, x_d):
        print("error: destination is outside the free space", file=sys.stderr)
        return EXIT_INVALID
    if args.svg and world.dimension != 2:
        print("error: --svg requires a 2D world", file=sys.stderr)
        return EXIT_INVALID
    gmap = classify(world, x_d)
    _emit(gmap.to_dict())
    if args.svg:
        Path(args.svg).write_text(
            render_svg(world, gmap=gmap, destination=x_d))
    return EXIT_OK


def cmd_simulate(args) -> int:
    world = load_world(args.world)
    sc = load_scenario(args.scenario)
    report = validate(world, sc.destination)
    if not report.ok:
        _emit(report.to_dict())
        return EXIT_INVALID
    if not free_space_contains(world, sc.destination):
        print("error: destination is outside the free space", file=sys.stderr)
        return EXIT_INVALID
    for idx, s in enumerate(sc.starts):
        if not free_space_contains(world, s):
            print(f"error: start {idx} is outside the free space", file=sys.stderr)
            return EXIT_INVALID
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = SimParams.from_scenario(sc, world.workspace_radius)
    ctrl = ControlParams(gamma=sc.gamma)
    records = run_batch(world, sc.destination, sc.starts, params, ctrl,
                        jobs=_jobs(args))
    counts: dict[str, int] = {}
    for idx, rec in enumerate(records):
        counts[rec.outcome.value] = counts.get(rec.outcome.value, 0) + 1
        write_trajectory_csv(rec, out_dir / f"run_{idx:03d}.csv")
        (out_dir / f"run_{idx:03d}.json").write_text(
            json.dumps(summary_dict(rec), indent=2) + "\n")
    if args.svg:
        if world.dimension != 2:
            print("error: --svg requires a 2D world", file=sys.stderr)
            return EXIT_INVALID
        gmap = classify(world, sc.destination)
        (out_dir / args.svg).write_text(render_svg(
            world, gmap=gmap, trajectories=[r.states for r in records],
            starts=list(sc.starts), destination=sc.destination))
    _emit({"runs": len(records), "outcomes": counts, "out_dir": str(out_dir)})
    if any(r.outcome is Outcome.DIAGNOSTIC for r in records):
        return EXIT_DIAGNOSTIC
    return EXIT_OK


def cmd_compare(args) -> int:
    if args.world:
        world = load_world(args.world)
        world_echo: dict | str = str(args.world)
    else:
        world = random_world(seed=args.seed, n=2, m=args.obstacles,
                             r0=args.workspace_radius,
                             radius_range=(args.radius_min, args.radius_max),
                             min_gap=args.min_gap * args.workspace_radius,
                             x_d=_parse_point(args.destination))
        world_echo = world_to_dict(world)
    if world.dimension != 2:
        print("error: compare requires a 2D world", file=sys.stderr)
        return EXIT_INVALID
    x_d = _parse_point(args.destination)
    report = validate(world, x_d)
    if not report.ok:
        _emit(report.to_dict())
        return EXIT_INVALID
    params = SimParams.defaults(world.workspace_radius, gamma=args.gamma)
    ctrl = ControlParams(gamma=args.gamma)
    starts = sample_starts(world, x_d, args.starts, args.seed)
    records = run_batch(world, x_d, starts, params, ctrl, jobs=_jobs(args))
    paths_dir = Path(args.dump_paths) if args.dump_paths else None
    if paths_dir:
        paths_dir.mkdir(parents=True, exist_ok=True)
    runs = []
    matched = 0
    converged = 0
    counts: dict[str, int] = {}
    for idx, (start, rec) in enumerate(zip(starts, records)):
        counts[rec.outcome.value] = counts.get(rec.outcome.value, 0) + 1
        entry = {
            "start": [float(v) for v in start],
            "outcome": rec.outcome.value,
            "tp_length": None,
            "oracle_length": None,
            "matched": False,
        }
        if rec.outcome is Outcome.CONVERGED:
            converged += 1
            length = tp_length(rec, x_d)
            path = shortest_path(build_tangent_graph(world, start, x_d))
            ok = match(length, path.length, rel_tol=args.rel_tol)
            matched += int(ok)
            entry.update(tp_length=length, oracle_length=path.length,
                         matched=ok)
            if paths_dir:
                (paths_dir / f"oracle_{idx:03d}.json").write_text(
                    json.dumps(path_to_dict(path, world), indent=2) + "\n")
        runs.append(entry)
    doc = {
        "seed": args.seed,
        "world": world_echo,
        "destination": [float(v) for v in x_d],
        "n_starts": args.starts,
        "rel_tol": args.rel_tol,
        "gamma": args.gamma,
        "outcome_counts": counts,
        "match_rate": (matched / converged) if converged else None,
        "runs": runs,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    _emit({k: v for k, v in doc.items() if k != "runs"})
    return EXIT_OK


def cmd_plot(args) -> int:
    world = load_world(args.world)
    if world.dimension != 2:
        print("error: plot requires a 2D world", file=sys.stderr)
        return EXIT_INVALID
    x_d = _parse_point(args.destination) if args.destination else None
    gmap = None
    if args.shadows:
        if x_d is None:
            print("error: --shadows needs --destination", file=sys.stderr)
            return EXIT_INVALID
        gmap = classify(world, x_d)
    trajectories = []
    for path in args.trajectory:
        states = _read_trajectory_csv(path, world.dimension)
        trajectories.append(states)
    oracle_polylines = []
    for path in args.oracle:
        try:
            doc = json.loads(Path(path).read_text())
            pts = np.array(doc["polyline"], dtype=float)
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise WorldFormatError(f"cannot read oracle polyline {path}: {exc}")
        trajectories.append(pts)
        oracle_polylines.append(pts)
    svg = render_svg(world, gmap=gmap, trajectories=trajectories,
                     destination=x_d)
    Path(args.out).write_text(svg)
    _emit({"out": str(args.out), "trajectories": len(trajectories)})
    return EXIT_OK


def _read_trajectory_csv(path, n: int) -> np.ndarray:
    import csv as _csv
    try:
        with open(path, newline="") as fh:
            reader = _csv.reader(fh)
            header = next(reader)
            cols = [header.index(f"x{k + 1}") for k in range(n)]
            rows = [[float(row[c]) for c in cols] for row in reader]
    except (OSError, ValueError, StopIteration) as exc:
        raise WorldFormatError(f"cannot read trajectory csv {path}: {exc}")
    return np.array(rows)


def cmd_gen_world(args) -> int:
    world = random_world(seed=args.seed, n=args.dim, m=args.obstacles,
                         r0=args.workspace_radius,
                         radius_range=(args.radius_min, args.radius_max),
                         min_gap=args.min_gap * args.workspace_radius,
                         x_d=_parse_point(args.destination))
    if args.out:
        save_world(world, args.out)
        _emit({"out": str(args.out), "obstacles": world.m})
    else:
        _emit(world_to_dict(world))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="navsim",
        description="Quasi-optimal sphere-world navigation: feedback law, "
                    "simulator, and shortest-path oracle")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker threads for batch runs "
                             "(NAVSIM_JOBS overrides)")
    parser.add_argument("--out-dir", default="out",
                        help="output directory for simulate")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check world assumptions")
    p.add_argument("world")
    p.add_argument("--destination", help="enables the static A3 check, e.g. '0,0'")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("classify", help="obstacle generations as JSON (+SVG)")
    p.add_argument("world")
    p.add_argument("--destination", required=True)
    p.add_argument("--svg", help="write a shaded 2D map to this file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="run a scenario, one CSV+JSON per start")
    p.add_argument("world")
    p.add_argument("scenario")
    p.add_argument("--svg", help="also write a combined SVG with this name")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="TP-vs-Dijkstra match rate over random starts")
    p.add_argument("--world", help="world file (omit to generate one)")
    p.add_argument("--destination", default="0,0")
    p.add_argument("--starts", type=int, default=100)
    p.add_argument("--rel-tol", type=float, default=0.01)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--obstacles", type=int, default=13)
    p.add_argument("--workspace-radius", type=float, default=10.0)
    p.add_argument("--radius-min", type=float, default=0.6)
    p.add_argument("--radius-max", type=float, default=1.2)
    p.add_argument("--min-gap", type=float, default=0.05,
                   help="minimum gap as a fraction of the workspace radius")
    p.add_argument("--out", help="write the full batch report JSON here")
    p.add_argument("--dump-paths",
                   help="directory for per-start oracle polyline JSON files")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot", help="deterministic SVG overlay")
    p.add_argument("world")
    p.add_argument("--destination")
    p.add_argument("--shadows", action="store_true")
    p.add_argument("--trajectory", action="append", default=[],
                   help="trajectory CSV (repeatable)")
    p.add_argument("--oracle", action="append", default=[],
                   help="oracle polyline JSON (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("gen-world", help="seeded random valid world")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--obstacles", type=int, default=13)
    p.add_argument("--workspace-radius", type=float, default=10.0)
    p.add_argument("--radius-min", type=float, default=0.6)
    p.add_argument("--radius-max", type=float, default=1.2)
    p.add_argument("--min-gap", type=float, default=0.05)
    p.add_argument("--destination", default="0,0")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_world)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WorldFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except WorldGenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ChainDiagnosticError, OracleBoundError) as exc:
        print(f"diagnostic: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC


if __name__ == "__main__":
    sys.exit(main())
