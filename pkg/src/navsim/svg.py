"""Deterministic SVG rendering of worlds, shadows, paths, trajectories.

Output is a pure function of the inputs: fixed viewBox (workspace disk
mapped to a 1000-unit scale), fixed element order, fixed two-decimal
coordinate formatting.  No timestamps, no randomness, so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import as_vector, clamped_asin
from .oracle import flatten_path
from .shadow import GenerationMap
from .world import World

_TRAJECTORY_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                      "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f")
_MAX_POLYLINE_POINTS = 1500


def _gen_fill(gen: int | None) -> str:
    if gen is None:
        return "#777777"
    if gen == 0:
        return "#c4c4c4"
    if gen == 1:
        return "#4d4d4d"
    if gen == 2:
        return "#8a8a8a"
    return "#a8a8a8"


class _Canvas:
    def __init__(self, r0: float):
        self.scale = 1000.0 / r0
        self.parts: list[str] = []

    def pt(self, p) -> tuple[float, float]:
        return (float(p[0]) * self.scale, -float(p[1]) * self.scale)

    def fmt(self, v: float) -> str:
        s = f"{v:.2f}"
        return "0.00" if s == "-0.00" else s

    def circle(self, center, radius: float, style: str) -> None:
        cx, cy = self.pt(center)
        self.parts.append(
            f'<circle cx="{self.fmt(cx)}" cy="{self.fmt(cy)}" '
            f'r="{self.fmt(radius * self.scale)}" {style}/>')

    def polyline(self, points, style: str, closed: bool = False) -> None:
        coords = " ".join(f"{self.fmt(x)},{self.fmt(y)}"
                          for x, y in (self.pt(p) for p in points))
        tag = "polygon" if closed else "polyline"
        self.parts.append(f'<{tag} points="{coords}" {style}/>')


def _downsample(points: np.ndarray) -> np.ndarray:
    if len(points) <= _MAX_POLYLINE_POINTS:
        return points
    stride = int(math.ceil(len(points) / _MAX_POLYLINE_POINTS))
    idx = list(range(0, len(points), stride))
    if idx[-1] != len(points) - 1:
        idx.append(len(points) - 1)
    return points[idx]


def _arc_points(center, radius: float, a0: float, a1: float, ccw: bool,
                samples: int = 48) -> list[np.ndarray]:
    span = (a1 - a0) % (2.0 * math.pi) if ccw else -((a0 - a1) % (2.0 * math.pi))
    return [np.array([center[0] + radius * math.cos(a0 + span * t / samples),
                      center[1] + radius * math.sin(a0 + span * t / samples)])
            for t in range(samples + 1)]


def _circle_exit(origin: np.ndarray, direction: np.ndarray, r0: float) -> np.ndarray:
    """Farthest intersection of the ray origin + t*direction with ||p|| = r0."""
    b = float(origin @ direction)
    c = float(origin @ origin) - r0 * r0
    disc = max(b * b - c, 0.0)
    t = -b + math.sqrt(disc)
    return origin + max(t, 0.0) * direction


def _shadow_polygon(world: World, xd: np.ndarray, i: int) -> list[np.ndarray]:
    """Boundary polyline of the shadow region of obstacle i, clipped to the
    workspace: tangent rays out to the boundary, the workspace arc between
    them, and the dark cap of the ball."""
    o = world.obstacle(i)
    r0 = world.workspace_radius
    axis = o.center - xd
    d = float(np.linalg.norm(axis))
    alpha = math.atan2(axis[1], axis[0])
    phi = clamped_asin(o.radius / d)
    tau = math.sqrt(max(d * d - o.radius * o.radius, 0.0))
    pts: list[np.ndarray] = []
    dir_hi = np.array([math.cos(alpha + phi), math.sin(alpha + phi)])
    dir_lo = np.array([math.cos(alpha - phi), math.sin(alpha - phi)])
    t_hi = xd + tau * dir_hi
    t_lo = xd + tau * dir_lo
    exit_hi = _circle_exit(xd, dir_hi, r0)
    exit_lo = _circle_exit(xd, dir_lo, r0)
    pts.append(t_hi)
    pts.append(exit_hi)
    # workspace arc from exit_hi to exit_lo on the side of the cone axis
    a_hi = math.atan2(exit_hi[1], exit_hi[0])
    a_lo = math.atan2(exit_lo[1], exit_lo[0])
    axis_exit = _circle_exit(xd, np.array([math.cos(alpha), math.sin(alpha)]), r0)
    a_axis = math.atan2(axis_exit[1], axis_exit[0])
    ccw_contains = ((a_axis - a_hi) % (2.0 * math.pi)) <= ((a_lo - a_hi) % (2.0 * math.pi))
    pts.extend(_arc_points(np.zeros(2), r0, a_hi, a_lo, ccw=ccw_contains))
    pts.append(exit_lo)
    pts.append(t_lo)
    # dark cap of the ball between the two tangent points, through the far pole
    b_hi = math.atan2(t_hi[1] - o.center[1], t_hi[0] - o.center[0])
    b_lo = math.atan2(t_lo[1] - o.center[1], t_lo[0] - o.center[0])
    pole = math.atan2(axis[1], axis[0])
    ccw_cap = ((pole - b_lo) % (2.0 * math.pi)) <= ((b_hi - b_lo) % (2.0 * math.pi))
    pts.extend(_arc_points(o.center, o.radius, b_lo, b_hi, ccw=ccw_cap))
    return pts


def render_svg(world: World, gmap: GenerationMap | None = None,
               trajectories=(), oracle_paths=(), starts=(),
               destination=None, shade_shadows: bool | None = None) -> str:
    """Render a 2D world with optional shadows, paths, and markers."""
    if world.dimension != 2:
        raise ValueError("SVG rendering is 2D only")
    cv = _Canvas(world.workspace_radius)
    cv.parts.append(
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="-1100 -1100 2200 2200" '
        'width="880" height="880">')
    cv.circle(np.zeros(2), world.workspace_radius,
              'fill="#fcfcfc" stroke="#222222" stroke-width="3"')
    if shade_shadows is None:
        shade_shadows = gmap is not None
    if shade_shadows and gmap is not None:
        order = sorted(range(1, world.m + 1),
                       key=lambda i: -gmap.generation[i])
        for i in order:
            if gmap.generation[i] < 1:
                continue
            opacity = max(0.15, 0.40 - 0.08 * (gmap.generation[i] - 1))
            pts = _shadow_polygon(world, gmap.destination, i)
            cv.polyline(pts, f'fill="#7798c9" fill-opacity="{opacity:.2f}" '
                             'stroke="none"', closed=True)
    for i in range(1, world.m + 1):
        o = world.obstacle(i)
        gen = gmap.generation[i] if gmap is not None else None
        cv.circle(o.center, o.radius,
                  f'fill="{_gen_fill(gen)}" stroke="#111111" stroke-width="2"')
    for k, path in enumerate(oracle_paths):
        pts = flatten_path(path, world)
        color = _TRAJECTORY_COLORS[(k + 5) % len(_TRAJECTORY_COLORS)]
        cv.polyline(pts, f'fill="none" stroke="{color}" stroke-width="5" '
                         'stroke-dasharray="14,10"')
    for k, traj in enumerate(trajectories):
        pts = _downsample(np.asarray(traj, dtype=float))
        color = _TRAJECTORY_COLORS[k % len(_TRAJECTORY_COLORS)]
        cv.polyline(pts, f'fill="none" stroke="{color}" stroke-width="3"')
    for p in starts:
        cv.circle(as_vector(p), world.workspace_radius / 120.0,
                  'fill="#2ca02c" stroke="#0b5d0b" stroke-width="2"')
    if destination is not None:
        cv.circle(as_vector(destination), world.workspace_radius / 90.0,
                  'fill="#d62728" stroke="#7a0f10" stroke-width="2"')
    cv.parts.append("</svg>")
    return "\n".join(cv.parts) + "\n"
