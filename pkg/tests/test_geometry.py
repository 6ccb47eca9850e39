import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallmax.geometry import (Ball, Box, DimensionMismatchError, Interval,
                               WholeSpace, project, soft_threshold)


def test_project_box_clamps():
    assert np.allclose(project(Box([0, 0], [1, 1]), [2, -1]), [1, 0])


def test_project_ball_radial():
    assert np.allclose(project(Ball([0, 0], 1.0), [3, 4]), [0.6, 0.8])


def test_project_interval_interior_fixed():
    assert np.allclose(project(Interval(-2, 2), [0.5]), [0.5])


def test_project_ball_center_stays_at_center():
    b = Ball([1.0, -1.0], 2.0)
    assert np.allclose(b.project([1.0, -1.0]), [1.0, -1.0])


def test_project_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        project(Interval(0, 1), [0.5, 0.5])


def test_diameters():
    assert Interval(-2, 2).diameter() == 4.0
    assert Ball([0, 0, 0], 1.5).diameter() == 3.0
    assert np.isclose(Box([0, 0], [1, 1]).diameter(), np.sqrt(2.0))
    assert WholeSpace(3).diameter() == np.inf


def test_box_diameter_matches_vertex_pair_max():
    rng = np.random.default_rng(0)
    for _ in range(10):
        lo = rng.uniform(-2, 0, 2)
        hi = lo + rng.uniform(0.1, 3, 2)
        box = Box(lo, hi)
        verts = box.grid(2)
        dmax = max(np.linalg.norm(u - v) for u in verts for v in verts)
        assert np.isclose(box.diameter(), dmax)


def test_projection_idempotent_and_nonexpansive():
    rng = np.random.default_rng(1)
    domains = [Interval(-1.5, 0.5), Box([-1, 0], [2, 1]), Ball([0.3, -0.2], 0.8),
               WholeSpace(2)]
    for dom in domains:
        for _ in range(50):
            u = rng.normal(size=dom.dim) * 3
            v = rng.normal(size=dom.dim) * 3
            pu, pv = dom.project(u), dom.project(v)
            assert np.allclose(dom.project(pu), pu, atol=1e-12)
            assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-12


def test_invalid_domains_rejected():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
    with pytest.raises(ValueError):
        Box([0, 0], [1, -1])
    with pytest.raises(ValueError):
        Ball([0], -0.1)


def test_soft_threshold_examples():
    assert soft_threshold(3, 1) == 2.0
    assert soft_threshold(-0.5, 1) == 0.0
    assert soft_threshold(1, 1) == 0.0


def test_soft_threshold_rejects_negative_radius():
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(0, 1e6))
def test_soft_threshold_odd_and_identity_at_zero(z, r):
    assert soft_threshold(-z, r) == -soft_threshold(z, r)
    assert soft_threshold(z, 0.0) == z


@settings(max_examples=200, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(0, 100))
def test_soft_threshold_1lipschitz(z1, z2, r):
    assert abs(soft_threshold(z1, r) - soft_threshold(z2, r)) <= abs(z1 - z2) + 1e-12


def test_sampling_stays_inside():
    rng = np.random.default_rng(2)
    for dom in (Interval(-1, 3), Box([0, -1], [1, 1]), Ball([0.5, 0.5], 1.2)):
        pts = dom.sample(rng, 200)
        assert all(dom.contains(p, tol=1e-9) for p in pts)


def test_chebyshev_centers():
    assert np.allclose(Interval(-1, 3).chebyshev_center(), [1.0])
    assert np.allclose(Ball([2, 2], 1).chebyshev_center(), [2, 2])
    assert np.allclose(WholeSpace(2).chebyshev_center(), [0, 0])
