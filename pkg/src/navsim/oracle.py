"""Ground-truth shortest paths among disk obstacles.

Two independent routes to the optimum: a closed-form tangent-arc-tangent
length for a single blocking disk, and a visibility tangent graph (point
tangents, pair bitangents, boundary arcs) searched with Dijkstra for the
general 2D case.  Both treat obstacle boundaries as traversable and never
let a path cut inside a disk.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .geometry import angle, as_vector, clamped_acos
from .world import World, free_space_contains


class OracleBoundError(RuntimeError):
    """A trajectory claimed to be shorter than the true optimum."""


# Paths may touch disk boundaries; anything deeper than this is a cut.
EDGE_CLEARANCE_SLACK = 1e-9


@dataclass(frozen=True)
class GraphNode:
    point: np.ndarray
    kind: str                  # "start" | "goal" | "tangent"
    circle: int | None = None  # 1-based obstacle id for tangent nodes
    angle: float | None = None # polar angle on that circle

    def __post_init__(self):
        object.__setattr__(self, "point", as_vector(self.point))


@dataclass(frozen=True)
class GraphEdge:
    a: int
    b: int
    kind: str                  # "segment" | "arc"
    circle: int | None
    length: float


@dataclass
class TangentGraph:
    nodes: list[GraphNode]
    edges: list[GraphEdge]
    start: int = 0
    goal: int = 1


@dataclass
class OraclePath:
    length: float
    polyline: list[GraphNode]
    edges: list[GraphEdge]


def segment_distance(a, b, p) -> float:
    """Distance from point p to the segment [a, b]."""
    aa, bb, pp = as_vector(a), as_vector(b), as_vector(p)
    ab = bb - aa
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(pp - aa))
    t = min(max(float((pp - aa) @ ab) / denom, 0.0), 1.0)
    return float(np.linalg.norm(aa + t * ab - pp))


def segment_blocked(world: World, a, b) -> bool:
    """Does the segment [a, b] cross any open obstacle ball?"""
    aa, bb = as_vector(a), as_vector(b)
    for o in world.obstacles:
        if segment_distance(aa, bb, o.center) < o.radius:
            return True
    return False


def single_obstacle_optimal_length(x0, x_d, center, radius: float) -> float:
    """Length of the shortest path from x0 to x_d around one ball.

    Straight distance when the segment misses the open ball; otherwise
    tangent from x0, wrap arc, tangent to x_d (the wrap stays in the plane
    through x0, center, x_d, so the formula holds in any dimension).
    Starts on the central half-line behind the ball admit two equal
    shortest paths and are rejected.
    """
    p0, pd, c = as_vector(x0), as_vector(x_d), as_vector(center)
    d0 = float(np.linalg.norm(p0 - c))
    dd = float(np.linalg.norm(pd - c))
    if d0 < radius or dd < radius:
        raise ValueError("endpoints must lie outside the ball")
    if segment_distance(p0, pd, c) >= radius:
        return float(np.linalg.norm(p0 - pd))
    away = c - pd
    if float((p0 - c) @ away) > 0.0 and angle(p0 - c, away) <= 1e-9:
        raise ValueError(
            "start lies on the central half-line behind the ball; "
            "the two wrap directions tie")
    a0 = clamped_acos(radius / d0)
    ad = clamped_acos(radius / dd)
    spread = angle(p0 - c, pd - c)
    wrap = max(spread - a0 - ad, 0.0)
    return (math.sqrt(max(d0 * d0 - radius * radius, 0.0))
            + radius * wrap
            + math.sqrt(max(dd * dd - radius * radius, 0.0)))


def _point_tangents(p: np.ndarray, c: np.ndarray, r: float) -> list[float]:
    """Polar angles on circle (c, r) of the tangent points seen from p."""
    d = float(np.linalg.norm(p - c))
    a = clamped_acos(min(r / d, 1.0)) if d > 0.0 else 0.0
    base = math.atan2(p[1] - c[1], p[0] - c[0])
    return [base - a, base + a]


def _pair_bitangents(ci: np.ndarray, ri: float, cj: np.ndarray, rj: float):
    """Tangent-point pairs ((angle on i, angle on j)) of the four bitangent
    lines of two disjoint circles: two external, two internal."""
    u = cj - ci
    d = float(np.linalg.norm(u))
    u = u / d
    v = np.array([-u[1], u[0]])
    out = []
    for sign_r, coss in ((1.0, (ri - rj) / d), (-1.0, (ri + rj) / d)):
        if abs(coss) > 1.0:
            continue
        sins = math.sqrt(1.0 - coss * coss)
        for s in (1.0, -1.0):
            nhat = coss * u + s * sins * v
            ang_i = math.atan2(nhat[1], nhat[0])
            nj = sign_r * nhat
            ang_j = math.atan2(nj[1], nj[0])
            out.append((ang_i, ang_j))
    return out


def _circle_point(c: np.ndarray, r: float, ang: float) -> np.ndarray:
    return np.array([c[0] + r * math.cos(ang), c[1] + r * math.sin(ang)])


def build_tangent_graph(world: World, start, goal) -> TangentGraph:
    """Visibility tangent graph over start, goal, and all tangent points.

    Segment edges survive only if they stay outside every other open disk
    and inside the workspace; arcs connect angular neighbors on each
    circle.  In a valid world (obstacles strictly inside the workspace and
    pairwise disjoint) arcs are automatically free.
    """
    if world.dimension != 2:
        raise ValueError("the tangent-graph oracle is 2D only")
    s, g = as_vector(start), as_vector(goal)
    for name, p in (("start", s), ("goal", g)):
        if not free_space_contains(world, p):
            raise ValueError(f"{name} is outside the free space")
    r0 = world.workspace_radius
    nodes: list[GraphNode] = [GraphNode(s, "start"), GraphNode(g, "goal")]
    per_circle: dict[int, list[tuple[float, int]]] = {i: [] for i in range(1, world.m + 1)}

    def add_tangent_node(i: int, ang: float) -> int:
        o = world.obstacle(i)
        idx = len(nodes)
        nodes.append(GraphNode(_circle_point(o.center, o.radius, ang),
                               "tangent", circle=i, angle=ang))
        per_circle[i].append((ang, idx))
        return idx

    def segment_ok(p: np.ndarray, q: np.ndarray) -> bool:
        if float(np.linalg.norm(p)) > r0 + EDGE_CLEARANCE_SLACK:
            return False
        if float(np.linalg.norm(q)) > r0 + EDGE_CLEARANCE_SLACK:
            return False
        for o in world.obstacles:
            if segment_distance(p, q, o.center) < o.radius - EDGE_CLEARANCE_SLACK:
                return False
        return True

    edges: list[GraphEdge] = []

    def add_segment(a: int, b: int) -> None:
        p, q = nodes[a].point, nodes[b].point
        if segment_ok(p, q):
            edges.append(GraphEdge(a, b, "segment", None,
                                   float(np.linalg.norm(p - q))))

    add_segment(0, 1)
    for endpoint in (0, 1):
        p = nodes[endpoint].point
        for i in range(1, world.m + 1):
            o = world.obstacle(i)
            if float(np.linalg.norm(p - o.center)) < o.radius:
                continue
            for ang in _point_tangents(p, o.center, o.radius):
                add_segment(endpoint, add_tangent_node(i, ang))
    for i in range(1, world.m + 1):
        oi = world.obstacle(i)
        for j in range(i + 1, world.m + 1):
            oj = world.obstacle(j)
            for ang_i, ang_j in _pair_bitangents(oi.center, oi.radius,
                                                 oj.center, oj.radius):
                add_segment(add_tangent_node(i, ang_i),
                            add_tangent_node(j, ang_j))
    # boundary arcs between angular neighbors
    for i in range(1, world.m + 1):
        oi = world.obstacle(i)
        # a circle overlapping another disk or poking out of the workspace
        # cannot host arcs (impossible in validated worlds)
        circle_free = float(np.linalg.norm(oi.center)) + oi.radius <= r0 + EDGE_CLEARANCE_SLACK
        for j in range(1, world.m + 1):
            if j != i:
                oj = world.obstacle(j)
                if float(np.linalg.norm(oi.center - oj.center)) <= oi.radius + oj.radius:
                    circle_free = False
        if not circle_free:
            continue
        ring = sorted((ang % (2.0 * math.pi), idx) for ang, idx in per_circle[i])
        k = len(ring)
        if k < 2:
            continue
        for t in range(k):
            ang_a, ia = ring[t]
            ang_b, ib = ring[(t + 1) % k]
            span = (ang_b - ang_a) % (2.0 * math.pi)
            if t == k - 1 and k == 2 and span == 0.0:
                continue  # duplicate of the forward arc between two nodes
            edges.append(GraphEdge(ia, ib, "arc", i, oi.radius * span))
    return TangentGraph(nodes=nodes, edges=edges)


def shortest_path(graph: TangentGraph) -> OraclePath:
    """Dijkstra over the tangent graph from start to goal."""
    adj: dict[int, list[tuple[int, int]]] = {}
    for e_idx, e in enumerate(graph.edges):
        adj.setdefault(e.a, []).append((e.b, e_idx))
        adj.setdefault(e.b, []).append((e.a, e_idx))
    dist = {graph.start: 0.0}
    prev: dict[int, tuple[int, int]] = {}
    heap = [(0.0, graph.start)]
    done = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == graph.goal:
            break
        for w, e_idx in adj.get(v, ()):
            nd = d + graph.edges[e_idx].length
            if nd < dist.get(w, math.inf):
                dist[w] = nd
                prev[w] = (v, e_idx)
                heapq.heappush(heap, (nd, w))
    if graph.goal not in done:
        raise RuntimeError("goal unreachable in the tangent graph "
                           "(graph construction bug or invalid world)")
    path_nodes = [graph.goal]
    path_edges: list[GraphEdge] = []
    v = graph.goal
    while v != graph.start:
        v, e_idx = prev[v]
        path_nodes.append(v)
        path_edges.append(graph.edges[e_idx])
    path_nodes.reverse()
    path_edges.reverse()
    return OraclePath(length=float(dist[graph.goal]),
                      polyline=[graph.nodes[v] for v in path_nodes],
                      edges=path_edges)


def oracle_length(world: World, start, goal) -> float:
    """Shortest collision-free length from start to goal in a 2D world."""
    return shortest_path(build_tangent_graph(world, start, goal)).length


def flatten_path(path: OraclePath, world: World,
                 arc_samples: int = 48) -> np.ndarray:
    """Path as a dense polyline, with arc edges sampled along their circle."""
    if not path.edges:
        return np.array([n.point for n in path.polyline])
    pts = [path.polyline[0].point]
    for edge, node_a, node_b in zip(path.edges, path.polyline[:-1],
                                    path.polyline[1:]):
        if edge.kind != "arc" or edge.circle is None:
            pts.append(node_b.point)
            continue
        o = world.obstacle(edge.circle)
        a0, a1 = float(node_a.angle), float(node_b.angle)
        span_ccw = (a1 - a0) % (2.0 * math.pi)
        # the stored length identifies which way the arc goes
        if abs(o.radius * span_ccw - edge.length) <= 1e-9 * max(edge.length, 1.0):
            span = span_ccw
        else:
            span = -((a0 - a1) % (2.0 * math.pi))
        for t in range(1, arc_samples + 1):
            ang = a0 + span * t / arc_samples
            pts.append(o.center + o.radius * np.array([math.cos(ang),
                                                       math.sin(ang)]))
    return np.array(pts)


def path_to_dict(path: OraclePath, world: World) -> dict:
    """Polyline JSON document for SVG overlays."""
    return {"length": path.length,
            "polyline": [[float(v) for v in p]
                         for p in flatten_path(path, world)]}


def match(trajectory_length: float, oracle_length: float,
          rel_tol: float = 0.01, integration_slack: float = 0.005) -> bool:
    """Did the trajectory reproduce the optimal path length?

    True iff the trajectory is within rel_tol above the oracle.  A
    trajectory below the oracle by more than integration_slack beats a
    true optimum, which can only be an oracle or safety bug.
    """
    if trajectory_length <= 0.0 or oracle_length <= 0.0:
        raise ValueError("lengths must be positive")
    if trajectory_length < oracle_length * (1.0 - integration_slack):
        raise OracleBoundError(
            f"trajectory length {trajectory_length:.9g} undercuts the oracle "
            f"{oracle_length:.9g} beyond the integration slack")
    return trajectory_length <= oracle_length * (1.0 + rel_tol)
