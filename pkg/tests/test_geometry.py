import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from msqg_vortex.geometry import (
    DomainSpec,
    Plane,
    Torus,
    VortexState,
    displacement,
    min_pairwise_distance,
    perp,
    wrap,
)

coord = st.floats(-50, 50, allow_nan=False)
point = st.tuples(coord, coord).map(np.array)


@pytest.mark.parametrize("v,out", [((1, 0), (0, -1)), ((0, 1), (1, 0)), ((3, 4), (4, -3))])
def test_perp_examples(v, out):
    assert np.array_equal(perp(v), out)
    assert np.dot(perp(v), v) == 0


@given(point)
def test_perp_twice_negates(v):
    assert np.array_equal(perp(perp(v)), -v)


@pytest.mark.parametrize("p,out", [((0.7, 0), (-0.3, 0)), ((0, 0), (0, 0)), ((-0.5, 1.25), (-0.5, 0.25)), ((0.5, -0.5), (-0.5, -0.5))])
def test_wrap_examples(p, out):
    assert np.allclose(wrap(p, Torus), out, atol=1e-15)
    assert np.all(wrap(p, Torus) < 0.5) and np.all(wrap(p, Torus) >= -0.5)


def test_wrap_plane_identity():
    assert np.array_equal(wrap((0.7, -3.2), Plane), (0.7, -3.2))


@given(point)
def test_wrap_idempotent(p):
    w = wrap(p, Torus)
    assert np.array_equal(wrap(w, Torus), w)
    assert np.all((w >= -0.5) & (w < 0.5))


def test_displacement_examples():
    a, b = np.array([0.4, 0.0]), np.array([-0.4, 0.0])
    assert np.allclose(displacement(a, b, Torus), (-0.2, 0.0), atol=1e-15)
    assert np.array_equal(displacement(a, b, Plane), (0.8, 0.0))
    assert np.array_equal(displacement(a, a, Torus), (0.0, 0.0))


@given(point, point)
def test_displacement_antisymmetric_and_bounded(a, b):
    assert np.array_equal(displacement(a, b, Plane), -displacement(b, a, Plane))
    d1, d2 = displacement(a, b, Torus), displacement(b, a, Torus)
    assert math.isclose(np.linalg.norm(d1), np.linalg.norm(d2), rel_tol=1e-12, abs_tol=1e-12)
    assert np.linalg.norm(d1) <= math.sqrt(2) / 2 + 1e-15


@given(point, point)
def test_displacement_is_minimal_image(a, b):
    d = displacement(a, b, Torus)
    imgs = (a - b)[None, :] + np.array([(i, j) for i in range(-60, 61) for j in range(-60, 61)])
    assert np.linalg.norm(d) <= np.linalg.norm(imgs, axis=1).min() + 1e-9


def test_min_pairwise_distance_examples():
    s = VortexState([(-1, 0), (1, 0), (1, math.sqrt(2))], [1, 1, 1], Plane)
    assert math.isclose(min_pairwise_distance(s), math.sqrt(2))
    assert min_pairwise_distance(VortexState([(0.1, 0.2), (0.1, 0.2)], [1, -1], Plane)) == 0.0
    t = VortexState([(0.45, 0), (-0.45, 0)], [1, 1], Torus)
    assert math.isclose(min_pairwise_distance(t), 0.1, rel_tol=1e-12)


def test_min_pairwise_distance_needs_two():
    with pytest.raises(ValueError, match="need at least two vortices"):
        min_pairwise_distance(VortexState([(0, 0)], [1]))


def test_state_validation():
    with pytest.raises(ValueError):
        VortexState([(0, 0), (1, 1)], [1, 0])
    with pytest.raises(ValueError):
        VortexState([(0, np.nan)], [1])
    with pytest.raises(ValueError):
        DomainSpec("torus", period=2.0)
    s = VortexState([(0.7, 1.2)], [2.0], Torus)
    assert np.allclose(s.positions, [(-0.3, 0.2)])
    assert not s.positions.flags.writeable
