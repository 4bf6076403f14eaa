"""The feedback law: nominal control plus successive cone projections.

In the visible set the control is the straight pull -gamma (x - x_d).  In
the blind set the nominal control is projected onto the enclosing cone of
the obstacle owning the region, then re-projected through the chain of
obstacles it newly points into, until the direction is unblocked.  Each
projection is the unique minimal-rotation vector on the cone that blends
continuously into the nominal control at the shadow's exit surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import DEFAULT_ANGLE_TOL, angle, as_vector, clamped_asin
from .shadow import GenerationMap
from .world import World


class ChainDiagnosticError(RuntimeError):
    """The projection chain violated an invariant (cycle or cap).

    Indicates an obstacle configuration outside the controller's
    assumptions; carries the partial chain for diagnosis.
    """

    def __init__(self, message: str, chain: tuple[int, ...]):
        super().__init__(f"{message} (chain so far: {list(chain)})")
        self.chain = chain


@dataclass(frozen=True)
class ControlParams:
    """Gain and chain cap for the feedback law."""

    gamma: float = 1.0
    max_chain: int | None = None     # defaults to the obstacle count
    angle_tol: float = DEFAULT_ANGLE_TOL

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError("gamma must be positive")
        if self.max_chain is not None and self.max_chain < 1:
            raise ValueError("max_chain must be positive")

    def chain_cap(self, world: World) -> int:
        return self.max_chain if self.max_chain is not None else max(world.m, 1)


@dataclass(frozen=True)
class ProjectionChain:
    """Ordered obstacles of the successive projections and the controls
    u_0 .. u_h they produced (u_0 is the nominal control)."""

    obstacles: tuple[int, ...]           # 1-based ids, destination side first
    controls: tuple[np.ndarray, ...]

    @property
    def h(self) -> int:
        return len(self.obstacles)


def nominal(x, x_d, gamma: float) -> np.ndarray:
    """Straight-to-destination control -gamma (x - x_d)."""
    return -gamma * (as_vector(x) - as_vector(x_d))


def beta(world: World, i: int, u, x) -> float:
    """Angle between the control u and the direction to obstacle i's center."""
    o = world.obstacle(i)
    return angle(u, o.center - as_vector(x))


def theta(world: World, i: int, x) -> float:
    """Half-aperture of the cone from x enclosing obstacle i."""
    o = world.obstacle(i)
    xa = as_vector(x)
    d = float(np.linalg.norm(o.center - xa))
    return clamped_asin(o.radius / d if d > 0.0 else 1.0)


def xi(world: World, i: int, u, x,
       tol: float = DEFAULT_ANGLE_TOL) -> np.ndarray:
    """Project u onto the enclosing cone of obstacle i, minimally rotated.

    Requires x strictly outside ball i and u pointing into the enclosing
    cone (beta <= theta + tol); the output lies on the cone with norm
    ||u|| sin(beta)/sin(theta), and equals u exactly when beta = theta.
    """
    ua, xa = as_vector(u), as_vector(x)
    o = world.obstacle(i)
    d = float(np.linalg.norm(o.center - xa))
    if d <= o.radius * (1.0 - 1e-12):
        raise ValueError(f"x lies inside obstacle {i}")
    out = np.empty_like(ua)
    st = _kernels._xi(ua, xa, o.center, o.radius, tol, out)
    if st == _kernels.STATUS_INFEASIBLE:
        raise ValueError(
            f"control does not point into the enclosing cone of obstacle {i} "
            f"(beta={beta(world, i, ua, xa):.6g} > theta={theta(world, i, xa):.6g})")
    return out


def shadowed_obstacles(world: World, i: int, x) -> set[int]:
    """Obstacles whose boundary reaches into the hat of obstacle i seen
    from x: the chain candidates the avoidance maneuver around i could
    otherwise sweep into."""
    xa = as_vector(x)
    o = world.obstacle(i)
    out = set()
    for k in range(1, world.m + 1):
        if k == i:
            continue
        ok = world.obstacle(k)
        dist = float(_kernels._near_set_distance(xa, o.center, o.radius, ok.center))
        if dist <= ok.radius + 1e-12:
            out.add(k)
    return out


def next_obstacle(world: World, i: int, u_p, x,
                  tol: float = DEFAULT_ANGLE_TOL) -> int | None:
    """Next obstacle of the projection chain after i, or None if the
    path is free.

    Candidates are the obstacles shadowed by i that strictly contain u_p
    in their enclosing cones; the winner minimizes the gap distance
    ||c_k - c_i|| - r_k - r_i to obstacle i.
    """
    ua, xa = as_vector(u_p), as_vector(x)
    if float(np.linalg.norm(ua)) == 0.0:
        raise ValueError("next_obstacle needs a non-zero control direction")
    nxt = int(_kernels._next_obstacle(ua, xa, i - 1, world.centers,
                                      world.radii, tol))
    return None if nxt < 0 else nxt + 1


def control(world: World, gmap: GenerationMap, x,
            params: ControlParams) -> tuple[np.ndarray, ProjectionChain]:
    """Evaluate the feedback law at x.

    Returns the control vector and the projection chain that produced it
    (empty chain in the visible set).  The control vanishes exactly at the
    destination and on central half-lines where a projection step hits
    beta = 0.
    """
    xa = as_vector(x)
    n = xa.shape[0]
    cap = params.chain_cap(world)
    chain_buf = np.zeros(max(cap, 1), dtype=np.int64)
    controls_buf = np.empty((max(cap, 1) + 1, n))
    h, st = _kernels._control(xa, gmap.destination, world.centers, world.radii,
                              params.gamma, params.angle_tol,
                              cap, chain_buf, controls_buf)
    ids = tuple(int(chain_buf[j]) + 1 for j in range(h))
    if st == _kernels.STATUS_CYCLE:
        raise ChainDiagnosticError("projection chain revisited an obstacle", ids)
    if st == _kernels.STATUS_CAP:
        raise ChainDiagnosticError("projection chain cap reached", ids)
    if st == _kernels.STATUS_INFEASIBLE:
        raise ChainDiagnosticError(
            "region owner does not contain the control in its cone", ids)
    chain = ProjectionChain(
        obstacles=ids,
        controls=tuple(controls_buf[p].copy() for p in range(h + 1)))
    return controls_buf[h].copy(), chain
