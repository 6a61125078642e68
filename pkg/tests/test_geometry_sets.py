import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlab import (
    AffineSubspace,
    Ball,
    ConvexPolyhedron,
    DimensionMismatch,
    EmptySample,
    FiniteUnion,
    HalfSpace,
    NonFiniteInput,
    PointSet,
    Sphere,
    contains,
    distance,
    project,
    sample_set_near,
)
from tlab.geometry import RadiusSchedule, stream, uniform_ball, uniform_shell
from tlab.scenario import load_scenario, save_scenario, shipped_battery
from tlab.sets import set_from_dict

LOWER = HalfSpace.make([0, 1], 0)  # q <= 0
AXIS = AffineSubspace.span([0, 0], [[1, 0]])
A_STAR = FiniteUnion((AffineSubspace.span([0, 1], [[1, 0]]), PointSet([[0, 0]])))


# -- projection examples -------------------------------------------------------

@pytest.mark.parametrize("S,x,p,d", [
    (LOWER, (1, 2), (1, 0), 2.0),
    (AXIS, (3, 4), (3, 0), 4.0),
    (A_STAR, (5, 0), (5, 1), 1.0),
])
def test_project_examples(S, x, p, d):
    q, dist = project(S, x)
    np.testing.assert_allclose(q, p, atol=1e-15)
    assert dist == pytest.approx(d, abs=1e-15)


def test_union_tie_goes_to_first_member():
    U = FiniteUnion((PointSet([[1, 0]]), PointSet([[-1, 0]])))
    np.testing.assert_array_equal(project(U, (0, 0))[0], [1, 0])


def test_polyhedron_corner():
    quad = ConvexPolyhedron((HalfSpace.make([1, 0], 0), HalfSpace.make([0, 1], 0)))
    p, d = project(quad, (1, 1))
    np.testing.assert_allclose(p, [0, 0], atol=1e-9)
    assert d == pytest.approx(math.sqrt(2), abs=1e-9)


def test_sphere_projection_of_center_is_on_sphere():
    S = Sphere([0, 1], 1)
    p, d = project(S, (0, 1))
    assert np.linalg.norm(p - [0, 1]) == pytest.approx(1.0)
    assert d == pytest.approx(1.0)


# -- membership ------------------------------------------------------------------

def test_contains_examples():
    assert contains(Ball([0, 1], 1), (0, 0), 1e-9)
    assert not contains(LOWER, (0, 1e-3), 1e-9)
    assert contains(PointSet([[0, 0]]), (1e-10, 0), 1e-9)


def test_contains_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        contains(LOWER, (0, 0), 0.0)


# -- input errors -----------------------------------------------------------------

def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        project(LOWER, (1, 2, 3))


@pytest.mark.parametrize("bad", [(np.nan, 0), (0, np.inf)])
def test_non_finite_input(bad):
    with pytest.raises(NonFiniteInput):
        distance(LOWER, bad)


def test_constructor_errors():
    with pytest.raises(ValueError):
        HalfSpace([0, 2], 0)
    with pytest.raises(ValueError):
        Ball([0, 0], -1)
    with pytest.raises(ValueError):
        AffineSubspace([0, 0], [[1, 1]])
    with pytest.raises(DimensionMismatch):
        FiniteUnion((LOWER, Ball([0, 0, 0], 1)))


# -- sampling ---------------------------------------------------------------------

def test_sample_line():
    pts = sample_set_near(AXIS, (0, 0), 0.1, 8, seed=3)
    assert pts.shape == (8, 2)
    assert np.all(pts[:, 1] == 0.0)
    assert np.all(np.abs(pts[:, 0]) <= 0.1)


def test_sample_point_set():
    pts = sample_set_near(PointSet([[0, 0]]), (0, 0), 0.1, 20, seed=3)
    np.testing.assert_array_equal(pts, [[0.0, 0.0]])


def test_sample_sphere_membership():
    S = Sphere([0, 1], 1)
    pts = sample_set_near(S, (0, 0), 0.05, 200, seed=4)
    assert len(pts) > 0
    for p in pts:
        assert contains(S, p, 1e-12)
        assert np.linalg.norm(p) <= 0.05 + 1e-12


def test_sample_empty_raises():
    with pytest.raises(EmptySample):
        sample_set_near(PointSet([[5, 5]]), (0, 0), 0.1, 10, seed=0)


def test_sample_prefix_stable():
    small = sample_set_near(Ball([0, 1], 1), (0, 0), 0.1, 50, seed=9)
    big = sample_set_near(Ball([0, 1], 1), (0, 0), 0.1, 100, seed=9)
    np.testing.assert_array_equal(big[:len(small)], small)


def test_sample_deterministic():
    a = sample_set_near(LOWER, (0, 0), 0.3, 40, seed=1)
    b = sample_set_near(LOWER, (0, 0), 0.3, 40, seed=1)
    np.testing.assert_array_equal(a, b)


# -- generators -------------------------------------------------------------------

def test_uniform_ball_prefix_and_radius():
    c = np.zeros(3)
    a = uniform_ball(stream(5, "x"), c, 0.2, 30)
    b = uniform_ball(stream(5, "x"), c, 0.2, 60)
    np.testing.assert_array_equal(a, b[:30])
    assert np.all(np.linalg.norm(b, axis=1) <= 0.2)


def test_uniform_shell_bounds_and_prefix():
    c = np.array([1.0, -1.0])
    a = uniform_shell(stream(2, "s"), c, 0.05, 0.1, 500)
    b = uniform_shell(stream(2, "s"), c, 0.05, 0.1, 1000)
    np.testing.assert_array_equal(a, b[:500])
    r = np.linalg.norm(b - c, axis=1)
    assert r.min() >= 0.05 - 1e-15 and r.max() <= 0.1 + 1e-15
    # area-uniform: the fraction inside the mid radius matches the area ratio
    mid = math.sqrt((0.05 ** 2 + 0.1 ** 2) / 2)
    assert np.mean(r <= mid) == pytest.approx(0.5, abs=0.05)


def test_named_streams_differ():
    assert stream(1, "a").random() != stream(1, "b").random()
    assert stream(1, "a", 0).random() != stream(1, "a", 1).random()


def test_radius_schedule():
    s = RadiusSchedule(0.1, 0.5, 6)
    assert s.radii[0] == 0.1 and s.smallest == pytest.approx(0.1 / 32)
    assert s.eta(s.smallest, 0.05) == pytest.approx(0.05 / 32)
    with pytest.raises(ValueError):
        RadiusSchedule(0.1, 1.5, 3)
    with pytest.raises(ValueError):
        RadiusSchedule(0.1, 0.5, 1)


# -- serialization ---------------------------------------------------------------

@pytest.mark.parametrize("S", [
    LOWER, AXIS, A_STAR, Ball([0, 1], 1), Sphere([1, 2, 3], 0.5), PointSet([[0, 0], [1, 1]]),
    ConvexPolyhedron((HalfSpace.make([1, 0], 1), HalfSpace.make([0, 1], 2))),
])
def test_set_round_trip(S):
    T = set_from_dict(S.to_dict())
    x = np.linspace(-1.3, 2.1, S.dim)
    np.testing.assert_allclose(project(T, x)[0], project(S, x)[0], atol=1e-12)
    assert T.to_dict() == S.to_dict()


def test_scenario_round_trip(tmp_path):
    for sc in shipped_battery():
        path = tmp_path / f"{sc.label}.json"
        save_scenario(sc, path)
        back = load_scenario(path)
        assert back.to_dict() == sc.to_dict()


# -- properties ------------------------------------------------------------------

coord = st.floats(-10, 10, allow_nan=False)
point2 = st.tuples(coord, coord)
SETS = [LOWER, AXIS, A_STAR, Ball([0, 1], 1), Sphere([0, 1], 1),
        ConvexPolyhedron((HalfSpace.make([1, 1], 0), HalfSpace.make([-1, 2], 1))),
        PointSet([[0, 0], [2, 1]])]
CONVEX = [S for S in SETS if S.is_convex]


@settings(max_examples=60, deadline=None)
@given(x=point2, i=st.integers(0, len(SETS) - 1))
def test_projection_idempotent(x, i):
    S = SETS[i]
    p, _ = project(S, x)
    q, d = project(S, p)
    np.testing.assert_allclose(q, p, atol=1e-8)
    assert d <= 1e-8


@settings(max_examples=60, deadline=None)
@given(x=point2, y=point2, i=st.integers(0, len(SETS) - 1))
def test_distance_is_1_lipschitz(x, y, i):
    S = SETS[i]
    assert abs(distance(S, x) - distance(S, y)) <= math.dist(x, y) + 1e-8


@settings(max_examples=60, deadline=None)
@given(x=point2, y=point2, i=st.integers(0, len(CONVEX) - 1))
def test_convex_projection_nonexpansive(x, y, i):
    S = CONVEX[i]
    px, py = project(S, x)[0], project(S, y)[0]
    assert np.linalg.norm(px - py) <= math.dist(x, y) + 1e-8


@settings(max_examples=60, deadline=None)
@given(x=point2, i=st.integers(0, len(SETS) - 1))
def test_contains_iff_small_distance(x, i):
    S = SETS[i]
    assert contains(S, x, 1e-9) == (distance(S, x) <= 1e-9)
    assert contains(S, project(S, x)[0], 1e-8)
