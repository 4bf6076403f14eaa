import math

import numpy as np
import pytest

from navsim.geometry import (Cone, angle, cone_contains,
                             enclosing_half_aperture, on_vector_cone,
                             project_orthogonal, project_parallel)


def test_angle_orthogonal():
    assert angle([1, 0], [0, 1]) == pytest.approx(math.pi / 2, abs=1e-15)


def test_angle_parallel_and_antiparallel():
    assert angle([2, 0], [5, 0]) == pytest.approx(0.0, abs=1e-15)
    assert angle([1, 0], [-3, 0]) == pytest.approx(math.pi, abs=1e-15)


def test_angle_zero_vector_rejected():
    with pytest.raises(ValueError):
        angle([0, 0], [1, 0])


def test_angle_clamps_rounding_noise():
    v = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
    assert angle(v, v) == 0.0


def test_project_parallel_axis():
    np.testing.assert_allclose(project_parallel([1, 0], [3, 4]), [3, 0])


def test_project_parallel_eigenvector():
    v = np.array([0.6, 0.8])
    np.testing.assert_allclose(project_parallel(v, v), v, atol=1e-15)


def test_project_parallel_orthogonal_input():
    np.testing.assert_allclose(project_parallel([0, 1], [5, 0]), [0, 0])


def test_project_orthogonal_basic():
    np.testing.assert_allclose(project_orthogonal([1, 0], [3, 4]), [0, 4])
    np.testing.assert_allclose(project_orthogonal([0.6, 0.8], [0.6, 0.8]),
                               [0, 0], atol=1e-15)


def test_projection_requires_unit_direction():
    with pytest.raises(ValueError):
        project_parallel([1, 1], [1, 0])
    with pytest.raises(ValueError):
        project_orthogonal([2, 0], [1, 0])


def test_projection_decomposition_and_idempotence():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = rng.integers(2, 6)
        v = rng.normal(size=n)
        v /= np.linalg.norm(v)
        x = rng.normal(size=n) * 10
        par = project_parallel(v, x)
        orth = project_orthogonal(v, x)
        np.testing.assert_allclose(par + orth, x, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(project_parallel(v, par), par, atol=1e-12)
        np.testing.assert_allclose(project_orthogonal(v, orth), orth, atol=1e-12)
        assert abs(float(orth @ v)) < 1e-12 * max(np.linalg.norm(x), 1.0)


def test_cone_validation():
    with pytest.raises(ValueError):
        Cone([0, 0], [0, 0], math.pi / 4)
    with pytest.raises(ValueError):
        Cone([0, 0], [1, 0], 0.0)
    with pytest.raises(ValueError):
        Cone([0, 0], [1, 0], math.pi)


def test_cone_contains_45deg_surface():
    c = Cone([0, 0], [1, 0], math.pi / 4)
    assert cone_contains(c, [1, 1], "=")
    assert cone_contains(c, [1, 0], "<")
    assert cone_contains(c, [0, 1], ">")


def test_cone_vertex_membership():
    c = Cone([0, 0], [1, 0], math.pi / 4)
    for rel, expect in (("<=", True), ("=", True), (">=", True),
                        ("<", False), (">", False)):
        assert cone_contains(c, [0, 0], rel) is expect


def test_cone_contains_surface_implies_vector_cone():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = rng.integers(2, 5)
        axis = rng.normal(size=n)
        axis /= np.linalg.norm(axis)
        psi = rng.uniform(0.05, math.pi / 2)
        w = rng.normal(size=n)
        w -= axis * (w @ axis)
        if np.linalg.norm(w) < 1e-12:
            continue
        w /= np.linalg.norm(w)
        vertex = rng.normal(size=n)
        q = vertex + rng.uniform(0.1, 5.0) * (math.cos(psi) * axis + math.sin(psi) * w)
        cone = Cone(vertex, axis, psi)
        assert cone_contains(cone, q, "=")
        assert on_vector_cone(q - vertex, axis, psi)


def test_enclosing_half_aperture_values():
    assert enclosing_half_aperture([0, 0], [4, 0], 2.0) == pytest.approx(
        math.pi / 6, abs=1e-12)
    # boundary: on the sphere the aperture opens to a half-space
    assert enclosing_half_aperture([2, 0], [4, 0], 2.0) == pytest.approx(
        math.pi / 2, abs=1e-12)
    # independently verified via the tangent construction
    assert enclosing_half_aperture([0, 0], [5, 0], 1.0) == pytest.approx(
        0.2013579207903308, abs=1e-15)


def test_enclosing_half_aperture_tangent_cross_check():
    # the tangent segment from x must touch the circle: the radius to the
    # tangent point is orthogonal to it
    x = np.array([0.0, 0.0])
    c = np.array([5.0, 0.0])
    r = 1.0
    phi = enclosing_half_aperture(x, c, r)
    tau = math.sqrt(25.0 - 1.0)
    t_point = x + tau * np.array([math.cos(phi), math.sin(phi)])
    assert np.linalg.norm(t_point - c) == pytest.approx(r, abs=1e-12)
    assert float((t_point - c) @ (t_point - x)) == pytest.approx(0.0, abs=1e-12)


def test_enclosing_half_aperture_inside_rejected():
    with pytest.raises(ValueError):
        enclosing_half_aperture([3.5, 0], [4, 0], 2.0)


def test_enclosing_half_aperture_monotone_in_distance():
    dists = np.linspace(2.0, 9.0, 40)
    vals = [enclosing_half_aperture([0, 0], [d, 0], 2.0) for d in dists]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_on_vector_cone_examples():
    assert on_vector_cone([1, 1], [1, 0], math.pi / 4)
    assert not on_vector_cone([1, 0], [1, 0], math.pi / 4)
    assert on_vector_cone([0, 1], [1, 0], math.pi / 2)
    with pytest.raises(ValueError):
        on_vector_cone([0, 0], [1, 0], math.pi / 4)
