"""Shadow regions, obstacle generations, and blind/visible set queries.

The shadow region of obstacle i is the part of free space with no clear
line of sight to the destination because ball i blocks it: the inside of
the cone anchored at the destination enclosing the ball, at or behind the
closest approach of the sight line.  Obstacles are classified by
visibility from the destination: fully seen (generation 1), partially
occluded by a generation j-1 obstacle (generation j >= 2), or completely
hidden (generation 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import DEFAULT_ANGLE_TOL, angle, as_vector, clamped_asin
from .world import World


@dataclass(frozen=True)
class RegionQueryResult:
    """Blind-set membership plus the owning obstacle, when any."""

    in_blind: bool
    owner: int | None = None              # 1-based obstacle id
    owner_generation: int | None = None


@dataclass(frozen=True)
class GenerationMap:
    """Per-obstacle generation labels for a fixed destination."""

    destination: np.ndarray
    generation: dict[int, int]                 # 1-based id -> generation, 0 = hidden
    shadow_links: dict[int, frozenset[int]]    # id -> ids whose shadow its ball meets
    s: int                                     # total number of generations
    gens_array: np.ndarray = field(repr=False)  # 0-based int64 view for the kernels

    def to_dict(self) -> dict:
        return {"generations": {str(i): g for i, g in sorted(self.generation.items())},
                "s": self.s}


def _check_destination(world: World, i: int, x_d: np.ndarray) -> None:
    o = world.obstacle(i)
    if float(np.linalg.norm(o.center - x_d)) < o.radius:
        raise ValueError(f"destination lies inside obstacle {i}")


def in_shadow(world: World, x, i: int, x_d,
              tol: float = DEFAULT_ANGLE_TOL) -> bool:
    """Is x in the shadow region of obstacle i as seen from x_d?"""
    xa, xda = as_vector(x), as_vector(x_d)
    _check_destination(world, i, xda)
    o = world.obstacle(i)
    return bool(_kernels._in_shadow(xa, xda, o.center, o.radius, tol))


def on_exit_set(world: World, x, i: int, x_d,
                tol: float = DEFAULT_ANGLE_TOL) -> bool:
    """Is x on the cone surface that bounds the shadow region of obstacle i?"""
    xa, xda = as_vector(x), as_vector(x_d)
    _check_destination(world, i, xda)
    o = world.obstacle(i)
    axis = o.center - xda
    phi = clamped_asin(o.radius / float(np.linalg.norm(axis)))
    g = xa - xda
    if float(np.linalg.norm(g)) == 0.0:
        return True  # cone vertex belongs to the surface relation
    if float((o.center - xa) @ (xda - xa)) < 0.0:
        return False
    return abs(angle(g, axis) - phi) <= tol


def in_hat(world: World, q, x, i: int,
           tol: float = DEFAULT_ANGLE_TOL) -> bool:
    """Is q in the hat of the cone enclosing obstacle i seen from x?

    The hat is the cone portion on the near side of the ball, between the
    viewpoint and the tangent circle: the corridor the vehicle sweeps
    while steering around obstacle i.  Obstacles reaching into it must
    join the projection chain before anything behind them.
    """
    qa, xa = as_vector(q), as_vector(x)
    o = world.obstacle(i)
    d = float(np.linalg.norm(o.center - xa))
    if d < o.radius * (1.0 - 1e-12):
        raise ValueError(f"viewpoint lies strictly inside obstacle {i}")
    theta = clamped_asin(o.radius / d if d > 0.0 else 1.0)
    g = qa - xa
    if float((o.center - qa) @ (xa - qa)) > 0.0:
        return False  # beyond the ball's tangent circle
    if float(np.linalg.norm(g)) == 0.0:
        return True  # the cone vertex
    return angle(g, o.center - xa) <= theta + tol


def _ball_intersects_shadow(world: World, x_d: np.ndarray,
                            ball_id: int, shadow_id: int) -> bool:
    """Does the ball of `ball_id` meet the shadow region of `shadow_id`?

    Exact up to rotational symmetry: both sets are symmetric about their
    respective axes, so the minimum distance is attained in the 2-plane
    through x_d, both centers.
    """
    bo = world.obstacle(ball_id)
    so = world.obstacle(shadow_id)
    dist = float(_kernels._set_distance(x_d, so.center, so.radius, bo.center))
    return dist <= bo.radius + 1e-12


def _blocked_before(world: World, x_d: np.ndarray, direction: np.ndarray,
                    i0: int) -> bool:
    """Is the sight ray from x_d along `direction` blocked by another ball
    strictly before it first reaches ball i0?  direction must hit ball i0."""
    centers = world.centers
    radii = world.radii
    b = centers[i0] - x_d
    tstar = float(b @ direction)
    disc = tstar * tstar - (float(b @ b) - radii[i0] ** 2)
    t_hit = tstar - math.sqrt(max(disc, 0.0))
    for k in range(world.m):
        if k == i0:
            continue
        bk = centers[k] - x_d
        tk = float(bk @ direction)
        if tk <= 0.0:
            continue
        dk = tk * tk - (float(bk @ bk) - radii[k] ** 2)
        if dk <= 0.0:
            continue  # the ray must cross the open ball to block the view
        if tk - math.sqrt(dk) < t_hit:
            return True
    return False


def _cap_directions_2d(world: World, x_d: np.ndarray, i0: int) -> list[np.ndarray]:
    """Probe directions that decide full occlusion of ball i0 exactly in 2D.

    Within the viewing wedge of ball i0, each other ball blocks an angular
    interval whose endpoints are its own wedge edges; between consecutive
    critical angles the blocking pattern is constant, so testing interval
    midpoints decides coverage of the whole wedge.
    """
    axis = world.centers[i0] - x_d
    d = float(np.linalg.norm(axis))
    phi = clamped_asin(world.radii[i0] / d)
    alpha0 = math.atan2(axis[1], axis[0])
    crit = [-phi, phi]
    for k in range(world.m):
        if k == i0:
            continue
        ak = world.centers[k] - x_d
        dk = float(np.linalg.norm(ak))
        if dk == 0.0:
            continue
        phik = clamped_asin(world.radii[k] / dk)
        delta = math.atan2(ak[1], ak[0]) - alpha0
        delta = (delta + math.pi) % (2.0 * math.pi) - math.pi
        for edge in (delta - phik, delta + phik,
                     delta - phik + 2.0 * math.pi, delta + phik - 2.0 * math.pi):
            if -phi < edge < phi:
                crit.append(edge)
    crit.sort()
    probes = []
    samples = set()
    for a, b in zip(crit[:-1], crit[1:]):
        if b - a > 1e-15:
            samples.add(0.5 * (a + b))
    # uniform fill keeps the probe set dense even for degenerate layouts
    for j in range(256):
        samples.add(-phi + (j + 0.5) / 256.0 * 2.0 * phi)
    for psi in sorted(samples):
        a = alpha0 + psi
        probes.append(np.array([math.cos(a), math.sin(a)]))
    return probes


def _cap_directions_nd(world: World, x_d: np.ndarray, i0: int,
                       n_samples: int = 512) -> list[np.ndarray]:
    """Sampled probe directions over the viewing cap of ball i0 for n >= 3.

    Includes, for every other ball, the in-plane critical directions of the
    pairwise configuration; full occlusion in n >= 3 is decided only up to
    this sampling resolution.
    """
    n = world.dimension
    axis = world.centers[i0] - x_d
    d = float(np.linalg.norm(axis))
    phi = clamped_asin(world.radii[i0] / d)
    ahat = axis / d
    probes: list[np.ndarray] = [ahat]
    for k in range(world.m):
        if k == i0:
            continue
        ak = world.centers[k] - x_d
        w = ak - ahat * float(ak @ ahat)
        wn = float(np.linalg.norm(w))
        if wn < 1e-12:
            continue
        w = w / wn
        dk = float(np.linalg.norm(ak))
        phik = clamped_asin(world.radii[k] / dk)
        deltak = angle(ak, axis)
        for psi in (deltak - phik, deltak, deltak + phik,
                    0.5 * (deltak - phik), 0.5 * (deltak + phik + phi)):
            psi = min(max(psi, -phi), phi)
            probes.append(math.cos(psi) * ahat + math.sin(psi) * w)
    rng = np.random.default_rng(0x5eed)
    for _ in range(n_samples):
        w = rng.normal(size=n)
        w -= ahat * float(w @ ahat)
        wn = float(np.linalg.norm(w))
        if wn == 0.0:
            continue
        w /= wn
        psi = phi * float(rng.uniform(0.0, 1.0)) ** (1.0 / max(n - 1, 1))
        probes.append(math.cos(psi) * ahat + math.sin(psi) * w)
    return probes


def _fully_hidden(world: World, x_d: np.ndarray, i0: int) -> bool:
    """Is every sight ray toward ball i0 blocked by some other ball first?"""
    if world.m < 2:
        return False
    if world.dimension == 2:
        probes = _cap_directions_2d(world, x_d, i0)
    else:
        probes = _cap_directions_nd(world, x_d, i0)
    return all(_blocked_before(world, x_d, p, i0) for p in probes)


def classify(world: World, x_d) -> GenerationMap:
    """Label every obstacle with its visibility generation from x_d.

    Iterative labeling: obstacles whose ball meets no other shadow are
    generation 1; an unlabeled, not fully hidden ball meeting the shadow
    of a generation j-1 obstacle becomes generation j.  Fully hidden
    balls are generation 0.  Mutually occluding leftovers (a configuration
    outside the usual taxonomy) land in one final generation.
    """
    xd = as_vector(x_d)
    for i in range(1, world.m + 1):
        _check_destination(world, i, xd)
    m = world.m
    links: dict[int, frozenset[int]] = {}
    for i in range(1, m + 1):
        links[i] = frozenset(
            k for k in range(1, m + 1)
            if k != i and _ball_intersects_shadow(world, xd, i, k))
    hidden = {i: bool(links[i]) and _fully_hidden(world, xd, i - 1)
              for i in range(1, m + 1)}
    generation: dict[int, int] = {i: 0 for i in range(1, m + 1) if hidden[i]}
    current = [i for i in range(1, m + 1) if not hidden[i] and not links[i]]
    for i in current:
        generation[i] = 1
    j = 1
    while current:
        nxt = [i for i in range(1, m + 1)
               if i not in generation and links[i].intersection(current)]
        j += 1
        for i in nxt:
            generation[i] = j
        current = nxt
    leftovers = [i for i in range(1, m + 1) if i not in generation]
    if leftovers:
        bucket = max((g for g in generation.values()), default=0) + 1
        for i in leftovers:
            generation[i] = bucket
    s = max(generation.values(), default=0)
    gens = np.array([generation[i] for i in range(1, m + 1)], dtype=np.int64)
    if m == 0:
        gens = np.zeros(0, dtype=np.int64)
    return GenerationMap(destination=xd, generation=generation,
                         shadow_links=links, s=s, gens_array=gens)


def region_query(world: World, gmap: GenerationMap, x) -> RegionQueryResult:
    """Blind-set membership of x and its owning obstacle.

    The owner is the obstacle whose ball the sight segment [x, x_d]
    enters first from x: the one actually blocking the line of sight.
    The projection chain must clear it before anything behind it, which
    is what makes the law safe; obstacles deeper in a nested shadow stack
    therefore take precedence over the destination-side ones.
    """
    xa = as_vector(x)
    owner0 = int(_kernels._region_query(xa, gmap.destination, world.centers,
                                        world.radii, DEFAULT_ANGLE_TOL))
    if owner0 < 0:
        return RegionQueryResult(in_blind=False)
    owner = owner0 + 1
    return RegionQueryResult(in_blind=True, owner=owner,
                             owner_generation=gmap.generation[owner])
