import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ksmms.errors import BadRadiusGrid, EmptySpace, IndexOutOfRange, NegativeMass, NonMetric
from ksmms.space import (
    BallScheme,
    ball_integral,
    build_space,
    default_radius_grid,
    diameter,
    doubling_constant,
    enumerate_balls,
)

from conftest import random_space, seeds, space_and_family


def test_single_point_space():
    sp = build_space(["x"], [1.0], coords=[[0.0]])
    assert diameter(sp) == 0.0
    assert doubling_constant(sp) == 1.0
    fam = enumerate_balls(sp, BallScheme(radius_grid=(1.0,)))
    assert len(fam) == 1
    assert fam.member_set(0) == frozenset({0})
    assert fam.weights[0] == 1.0


def test_two_point_line(two_point):
    assert two_point.dist[0, 1] == 1.0
    assert two_point.total_mass == 1.0
    assert diameter(two_point) == 1.0


def test_triangle_violation_reports_triple():
    d = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    with pytest.raises(NonMetric) as exc:
        build_space(["a", "b", "c"], [1, 1, 1], dist=d)
    assert set(exc.value.triple) == {"a", "b", "c"}


@pytest.mark.parametrize(
    "dist",
    [
        [[0, 1], [2, 0]],  # asymmetric
        [[0, 0], [0, 0]],  # distinct points at distance 0
        [[1, 1], [1, 0]],  # nonzero diagonal
    ],
)
def test_bad_distance_tables(dist):
    with pytest.raises(NonMetric):
        build_space(["a", "b"], [1, 1], dist=dist)


def test_mass_and_emptiness_guards():
    with pytest.raises(NegativeMass):
        build_space(["a"], [-1.0], coords=[[0.0]])
    with pytest.raises(EmptySpace):
        build_space([], [], coords=np.zeros((0, 1)))


def test_diameter_three_point_line():
    sp = build_space(["0", "1", "2"], [1, 1, 1], coords=[[0.0], [0.4], [1.0]])
    assert diameter(sp) == 1.0


def test_two_point_enumeration(two_point):
    fam = enumerate_balls(two_point, BallScheme(radius_grid=(0.5, 1.0), ratio=0.5))
    assert [fam.member_set(r) for r in range(len(fam))] == [frozenset({0}), frozenset({1}), frozenset({0, 1})]
    assert fam.n_collapsed == 1
    np.testing.assert_allclose(fam.weights, np.array([4, 2, 1]) / 7, rtol=1e-15)
    assert fam.has_full_ball and fam.covers_singletons


@pytest.mark.parametrize("grid", [(2.0,), (0.5,), (0.5, 0.4, 1.0), ()])
def test_bad_radius_grid(two_point, grid):
    with pytest.raises(BadRadiusGrid):
        enumerate_balls(two_point, BallScheme(radius_grid=grid))


def test_ball_integral_examples(two_point, two_point_family):
    f = np.array([1.0, -1.0])
    assert ball_integral(two_point, two_point_family, 2, f) == 0.0
    assert ball_integral(two_point, two_point_family, 0, f) == 0.5
    assert ball_integral(two_point, two_point_family, 1, np.zeros(2)) == 0.0
    with pytest.raises(IndexOutOfRange):
        ball_integral(two_point, two_point_family, 3, f)


def test_doubling_two_point(two_point):
    assert doubling_constant(two_point) == 2.0


def _doubling_brute(sp):
    # the ratio only jumps where r or 2r crosses a pairwise distance
    best = 1.0
    dists = {float(r) for r in sp.dist.ravel() if r > 0}
    radii = sorted(dists | {d / 2 for d in dists})
    for x in range(sp.n):
        for r in radii:
            small = sum(sp.mass[y] for y in range(sp.n) if sp.dist[x, y] <= r)
            big = sum(sp.mass[y] for y in range(sp.n) if sp.dist[x, y] <= 2 * r)
            if small > 0:
                best = max(best, big / small)
    return best


@pytest.mark.parametrize("n", [2, 5, 16])
def test_doubling_uniform_grid(n):
    sp = build_space([str(i) for i in range(n)], np.ones(n), coords=np.linspace(0, 1, n)[:, None])
    D = doubling_constant(sp)
    assert math.isfinite(D) and D >= 1.0
    assert D == pytest.approx(_doubling_brute(sp), rel=1e-12)


@given(seeds, st.integers(1, 9))
def test_doubling_matches_brute_force(seed, n):
    sp = random_space(np.random.default_rng(seed), n, zero_mass=True)
    assert doubling_constant(sp) == pytest.approx(_doubling_brute(sp), rel=1e-12)


@given(space_and_family())
def test_family_invariants(data):
    sp, fam, rng = data
    assert abs(math.fsum(fam.weights) - 1.0) <= 1e-12
    assert np.all(fam.weights > 0)
    assert fam.has_full_ball and fam.covers_singletons
    for r in range(len(fam)):
        members = frozenset(np.flatnonzero(sp.dist[fam.centers[r]] <= fam.radii[r]).tolist())
        assert fam.member_set(r) == members
    sets = [fam.member_set(r) for r in range(len(fam))]
    assert len(set(sets)) == len(sets)


@given(space_and_family())
def test_enumeration_deterministic(data):
    sp, fam, _ = data
    again = enumerate_balls(sp)
    assert np.array_equal(fam.weights, again.weights)
    assert np.array_equal(fam.centers, again.centers)


@given(space_and_family(), st.floats(-5, 5), st.floats(-5, 5))
def test_ball_integral_linear(data, a, b):
    sp, fam, rng = data
    f, g = rng.normal(size=sp.n), rng.normal(size=sp.n)
    for r in range(len(fam)):
        lhs = ball_integral(sp, fam, r, a * f + b * g)
        rhs = a * ball_integral(sp, fam, r, f) + b * ball_integral(sp, fam, r, g)
        scale = abs(a) * np.abs(f).sum() + abs(b) * np.abs(g).sum() + 1.0
        assert abs(lhs - rhs) <= 1e-12 * scale


@given(seeds, st.integers(1, 12))
def test_diameter_matches_pair_scan(seed, n):
    sp = random_space(np.random.default_rng(seed), n)
    scan = max((sp.dist[i, j] for i, j in itertools.product(range(n), repeat=2)), default=0.0)
    assert diameter(sp) == scan


def test_default_grid_reaches_diameter(two_point):
    grid = default_radius_grid(two_point)
    assert grid[0] < 1.0 <= grid[-1]
