"""Dimension-generic Euclidean primitives: angles, projections, conic sets.

All functions operate on plain 1-D numpy arrays (or anything convertible),
in any dimension n >= 2.  Angles are in radians.  Inverse-trig arguments
are clamped to [-1, 1] so that floating-point drift near tangency never
produces NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Boundary membership tolerance for cone relations, in radians.  Sets
# written with non-strict inequalities are closed; their boundaries are
# inclusive at this tolerance.
DEFAULT_ANGLE_TOL = 1e-9

# How far a direction may deviate from unit norm before it is rejected.
UNIT_NORM_TOL = 1e-12

_RELATIONS = ("<=", "<", "=", ">", ">=")


def as_vector(v) -> np.ndarray:
    """Coerce to a float 1-D array without copying when possible."""
    a = np.asarray(v, dtype=float)
    if a.ndim != 1 or a.shape[0] < 2:
        raise ValueError(f"expected a vector of dimension >= 2, got shape {a.shape}")
    return a


def norm(v) -> float:
    return float(np.linalg.norm(as_vector(v)))


def unit(v) -> np.ndarray:
    """Normalize v; zero vectors are a domain error."""
    a = as_vector(v)
    n = float(np.linalg.norm(a))
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return a / n


def clamped_acos(c: float) -> float:
    return math.acos(min(1.0, max(-1.0, c)))


def clamped_asin(s: float) -> float:
    return math.asin(min(1.0, max(-1.0, s)))


def angle(u, v) -> float:
    """Angle between two non-zero vectors, in [0, pi]."""
    ua, va = as_vector(u), as_vector(v)
    nu = float(np.linalg.norm(ua))
    nv = float(np.linalg.norm(va))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("angle of a zero vector is undefined")
    return clamped_acos(float(ua @ va) / (nu * nv))


def _require_unit(v: np.ndarray) -> None:
    if abs(float(np.linalg.norm(v)) - 1.0) > UNIT_NORM_TOL:
        raise ValueError("direction must be unit-norm")


def project_parallel(v, x) -> np.ndarray:
    """Projection of x onto the line spanned by the unit direction v."""
    va, xa = as_vector(v), as_vector(x)
    _require_unit(va)
    return va * float(va @ xa)


def project_orthogonal(v, x) -> np.ndarray:
    """Projection of x onto the hyperplane orthogonal to the unit direction v."""
    va, xa = as_vector(v), as_vector(x)
    _require_unit(va)
    return xa - va * float(va @ xa)


@dataclass(frozen=True)
class Cone:
    """A cone with vertex, non-zero axis, and half-aperture in (0, pi/2]."""

    vertex: np.ndarray
    axis: np.ndarray
    half_aperture: float

    def __post_init__(self):
        object.__setattr__(self, "vertex", as_vector(self.vertex))
        object.__setattr__(self, "axis", as_vector(self.axis))
        if float(np.linalg.norm(self.axis)) == 0.0:
            raise ValueError("cone axis must be non-zero")
        if not (0.0 < self.half_aperture <= math.pi / 2 + UNIT_NORM_TOL):
            raise ValueError("half-aperture must lie in (0, pi/2]")


def cone_contains(cone: Cone, q, relation: str = "<=",
                  tol: float = DEFAULT_ANGLE_TOL) -> bool:
    """Membership of point q in the conic set selected by `relation`.

    "=" is the cone surface, "<=" / "<" the inside (with / without the
    surface), ">=" / ">" the outside.  The vertex belongs to the closed
    relations "<=", "=", ">=".
    """
    if relation not in _RELATIONS:
        raise ValueError(f"relation must be one of {_RELATIONS}")
    qa = as_vector(q)
    d = qa - cone.vertex
    if float(np.linalg.norm(d)) == 0.0:
        return relation in ("<=", "=", ">=")
    ang = angle(d, cone.axis)
    psi = cone.half_aperture
    if relation == "<=":
        return ang <= psi + tol
    if relation == "<":
        return ang < psi - tol
    if relation == "=":
        return abs(ang - psi) <= tol
    if relation == ">":
        return ang > psi + tol
    return ang >= psi - tol


def enclosing_half_aperture(x, center, radius: float) -> float:
    """Half-aperture of the cone from x tangent to the ball (center, radius).

    Equals arcsin(radius / ||center - x||), which is pi/2 when x sits on
    the ball surface.  x strictly inside the ball is a domain error.
    """
    xa, ca = as_vector(x), as_vector(center)
    d = float(np.linalg.norm(ca - xa))
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if d < radius * (1.0 - 1e-12):
        raise ValueError("point lies strictly inside the ball")
    return clamped_asin(radius / d if d > 0.0 else 1.0)


def on_vector_cone(v, axis, psi: float, tol: float = DEFAULT_ANGLE_TOL) -> bool:
    """True iff v is parallel to the cone surface of half-aperture psi about axis."""
    va, aa = as_vector(v), as_vector(axis)
    nv = float(np.linalg.norm(va))
    na = float(np.linalg.norm(aa))
    if nv == 0.0 or na == 0.0:
        raise ValueError("vector-cone membership is undefined for zero vectors")
    return abs(float(va @ aa) - nv * na * math.cos(psi)) <= tol * nv * na
