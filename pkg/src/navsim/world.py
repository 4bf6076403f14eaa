"""World model: spherical workspace, ball obstacles, validity checks, I/O.

Obstacles carry stable 1-based ids given by their position in the world's
obstacle list.  A world is a valid sphere world when the obstacles are
strictly inside the workspace (assumption A1), pairwise disjoint (A2) and,
for a given destination, no obstacle sits on another obstacle's
destination-anchored central half-line (A3, checked statically for the
half-lines {c_k + delta (c_k - x_d), delta > 0}).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _kernels
from .geometry import as_vector


class WorldFormatError(ValueError):
    """Malformed world or scenario file."""


class WorldGenerationError(RuntimeError):
    """random_world exhausted its attempt budget."""


@dataclass(frozen=True)
class Obstacle:
    """A closed ball obstacle."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0.0:
            raise ValueError("obstacle radius must be positive")


@dataclass(frozen=True)
class World:
    """Spherical workspace of radius workspace_radius punctured by obstacles."""

    workspace_radius: float
    obstacles: tuple[Obstacle, ...] = ()
    dimension: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "workspace_radius", float(self.workspace_radius))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if not self.workspace_radius > 0.0:
            raise ValueError("workspace radius must be positive")
        dims = {o.center.shape[0] for o in self.obstacles}
        if len(dims) > 1:
            raise ValueError(f"inconsistent obstacle dimensions: {sorted(dims)}")
        if self.dimension is None:
            if not dims:
                raise ValueError("dimension is required for an empty world")
            object.__setattr__(self, "dimension", dims.pop())
        elif dims and dims.pop() != self.dimension:
            raise ValueError("obstacle dimension does not match world dimension")

    @property
    def m(self) -> int:
        return len(self.obstacles)

    @cached_property
    def centers(self) -> np.ndarray:
        """(m, n) array of obstacle centers; empty worlds get shape (0, n)."""
        if not self.obstacles:
            return np.zeros((0, self.dimension))
        return np.array([o.center for o in self.obstacles])

    @cached_property
    def radii(self) -> np.ndarray:
        return np.array([o.radius for o in self.obstacles])

    def obstacle(self, i: int) -> Obstacle:
        """Obstacle by 1-based id."""
        if not 1 <= i <= self.m:
            raise IndexError(f"obstacle id {i} out of range 1..{self.m}")
        return self.obstacles[i - 1]


@dataclass(frozen=True)
class Scenario:
    """A destination plus a batch of start positions and run parameters."""

    destination: np.ndarray
    starts: tuple[np.ndarray, ...]
    gamma: float = 1.0
    dt: float = 1e-3
    t_max: float = 50.0
    tol: float = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "destination", as_vector(self.destination))
        object.__setattr__(self, "starts", tuple(as_vector(s) for s in self.starts))
        for name in ("gamma", "dt", "t_max", "tol"):
            if not float(getattr(self, name)) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class Violation:
    assumption: str                # "A1" | "A2" | "A3"
    obstacles: tuple[int, ...]     # offending 1-based ids
    detail: str

    def to_dict(self) -> dict:
        return {"assumption": self.assumption,
                "obstacles": list(self.obstacles),
                "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    checked_a3: bool

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"ok": self.ok,
                "checked_a3": self.checked_a3,
                "violations": [v.to_dict() for v in self.violations]}


def _ray_hits_ball(origin: np.ndarray, direction: np.ndarray,
                   center: np.ndarray, radius: float, margin: float = 0.0) -> bool:
    """Does the open ray {origin + t*direction, t > 0} meet B(center, radius)?"""
    dn = float(np.linalg.norm(direction))
    if dn == 0.0:
        return False
    d = direction / dn
    b = center - origin
    t = float(b @ d)
    if t <= 0.0:
        return False
    perp2 = float(b @ b) - t * t
    r = radius + margin
    return perp2 <= r * r


def validate(world: World, x_d=None) -> ValidationReport:
    """Check assumptions A1, A2 and (when x_d is given) the static A3.

    A3 is checked for the destination-anchored half-lines
    {c_k + delta (c_k - x_d), delta > 0} against every other obstacle;
    deeper position-dependent half-lines are monitored at runtime by the
    simulator's stall detector.
    """
    violations: list[Violation] = []
    r0 = world.workspace_radius
    for i, o in enumerate(world.obstacles, start=1):
        margin = float(np.linalg.norm(o.center)) + o.radius
        if margin >= r0:
            violations.append(Violation(
                "A1", (i,),
                f"obstacle {i} not strictly inside the workspace "
                f"(||c|| + r = {margin:.6g} >= r0 = {r0:.6g})"))
    for i in range(1, world.m + 1):
        oi = world.obstacles[i - 1]
        for k in range(i + 1, world.m + 1):
            ok = world.obstacles[k - 1]
            dist = float(np.linalg.norm(oi.center - ok.center))
            if dist <= oi.radius + ok.radius:
                violations.append(Violation(
                    "A2", (i, k),
                    f"obstacles {i} and {k} are not disjoint "
                    f"(||ci - ck|| = {dist:.6g} <= ri + rk = {oi.radius + ok.radius:.6g})"))
    checked_a3 = x_d is not None
    if checked_a3:
        xd = as_vector(x_d)
        for k in range(1, world.m + 1):
            ck = world.obstacles[k - 1].center
            direction = ck - xd
            for i in range(1, world.m + 1):
                if i == k:
                    continue
                oi = world.obstacles[i - 1]
                if _ray_hits_ball(ck, direction, oi.center, oi.radius):
                    violations.append(Violation(
                        "A3", (k, i),
                        f"central half-line of obstacle {k} meets obstacle {i}"))
    return ValidationReport(tuple(violations), checked_a3)


def clearance(world: World, q) -> float:
    """min(r0 - ||q||, min_i ||q - c_i|| - r_i); negative iff q is not in F."""
    qa = as_vector(q)
    return float(_kernels._clearance(qa, world.centers, world.radii,
                                     world.workspace_radius))


def free_space_contains(world: World, q) -> bool:
    """Closed free space: inside the workspace, outside every open ball."""
    return clearance(world, q) >= 0.0


def random_world(seed: int, n: int, m: int, r0: float,
                 radius_range: tuple[float, float], min_gap: float,
                 x_d, max_attempts: int = 100_000) -> World:
    """Rejection-sample a valid world around the destination x_d.

    Obstacles keep at least min_gap clearance from each other, from the
    workspace boundary and from x_d, and the static A3 check holds with a
    small safety margin so the exact validator always passes.  The result
    is deterministic in (seed, parameters).
    """
    xd = as_vector(x_d)
    if xd.shape[0] != n:
        raise ValueError("destination dimension does not match n")
    rlo, rhi = radius_range
    if not (0.0 < rlo <= rhi):
        raise ValueError("radius_range must satisfy 0 < rlo <= rhi")
    rng = np.random.default_rng(seed)
    a3_margin = 0.1 * min_gap
    placed: list[Obstacle] = []
    attempts = 0
    while len(placed) < m:
        if attempts >= max_attempts:
            raise WorldGenerationError(
                f"placed only {len(placed)}/{m} obstacles after {attempts} attempts")
        attempts += 1
        r = float(rng.uniform(rlo, rhi))
        reach = r0 - r - min_gap
        if reach <= 0.0:
            raise WorldGenerationError("radius_range too large for the workspace")
        direction = rng.normal(size=n)
        nn = float(np.linalg.norm(direction))
        if nn == 0.0:
            continue
        c = direction / nn * reach * float(rng.uniform(0.0, 1.0)) ** (1.0 / n)
        if float(np.linalg.norm(c - xd)) - r < min_gap:
            continue
        ok = True
        for o in placed:
            if float(np.linalg.norm(c - o.center)) - r - o.radius < min_gap:
                ok = False
                break
        if ok:
            for o in placed:
                if (_ray_hits_ball(c, c - xd, o.center, o.radius, a3_margin)
                        or _ray_hits_ball(o.center, o.center - xd, c, r, a3_margin)):
                    ok = False
                    break
        if ok:
            placed.append(Obstacle(c, r))
    return World(workspace_radius=r0, obstacles=tuple(placed), dimension=n)


# ---------------------------------------------------------------------------
# File I/O.  Floats go through Python's shortest-round-trip repr, so save
# followed by load reproduces every number bit-exactly.

def world_to_dict(world: World) -> dict:
    return {
        "dimension": world.dimension,
        "workspace_radius": world.workspace_radius,
        "obstacles": [
            {"center": [float(v) for v in o.center], "radius": o.radius}
            for o in world.obstacles
        ],
    }


def world_from_dict(doc: dict) -> World:
    try:
        n = int(doc["dimension"])
        r0 = float(doc["workspace_radius"])
        entries = doc["obstacles"]
        obstacles = []
        for e in entries:
            center = [float(v) for v in e["center"]]
            if len(center) != n:
                raise WorldFormatError(
                    f"obstacle center dimension {len(center)} != world dimension {n}")
            obstacles.append(Obstacle(np.array(center), float(e["radius"])))
    except WorldFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise WorldFormatError(f"invalid world document: {exc}") from exc
    try:
        return World(workspace_radius=r0, obstacles=tuple(obstacles), dimension=n)
    except ValueError as exc:
        raise WorldFormatError(str(exc)) from exc


def save_world(world: World, path) -> None:
    Path(path).write_text(json.dumps(world_to_dict(world), indent=2) + "\n")


def load_world(path) -> World:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise WorldFormatError(f"cannot read world file {path}: {exc}") from exc
    return world_from_dict(doc)


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "destination": [float(v) for v in sc.destination],
        "starts": [[float(v) for v in s] for s in sc.starts],
        "gamma": sc.gamma,
        "dt": sc.dt,
        "t_max": sc.t_max,
        "tol": sc.tol,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        return Scenario(
            destination=np.array([float(v) for v in doc["destination"]]),
            starts=tuple(np.array([float(v) for v in s]) for s in doc["starts"]),
            gamma=float(doc["gamma"]),
            dt=float(doc["dt"]),
            t_max=float(doc["t_max"]),
            tol=float(doc["tol"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise WorldFormatError(f"invalid scenario document: {exc}") from exc


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")


def load_scenario(path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise WorldFormatError(f"cannot read scenario file {path}: {exc}") from exc
    return scenario_from_dict(doc)
