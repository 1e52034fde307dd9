import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksmms.errors import SolverFailure, TooLarge
from ksmms.ksnorm import INF, ks_norm
from ksmms.lipschitz import (
    SolverOptions,
    feasible_envelope,
    feasibility_residual,
    ks1p_oracle,
    ks1p_seminorm,
    lip_constant,
    lip_membership_bound,
    minimizer_uniqueness_probe,
    slope,
    solve_from_start,
)
from ksmms.space import build_space, enumerate_balls

from conftest import random_space, seeds, space_and_family

EXPONENTS = [1.0, 1.5, 2.0, 4.0, INF]
ROOT_5_32 = math.sqrt(5 / 32)


@pytest.fixture
def line3():
    return build_space(["0", "h", "1"], [1, 1, 1], coords=[[0.0], [0.5], [1.0]]).normalized()


def test_lip_constant_examples(line3):
    x = line3.coords[:, 0]
    assert lip_constant(line3, np.full(3, 2.0)) == 0.0
    assert lip_constant(line3, x) == 1.0
    assert lip_constant(line3, x**2) == 1.5
    assert lip_constant(build_space(["a"], [1], coords=[[0.0]]), [3.0]) == 0.0


def test_slope_examples(line3):
    x = line3.coords[:, 0]
    assert slope(line3, np.ones(3), "h", 0.5) == 0.0
    assert slope(line3, x, "h", 0.5) == 1.0
    assert slope(line3, x**2, "1", 0.5) == 1.5
    assert slope(line3, x, "h", 0.1) == 0.0


def test_envelope_examples(two_point, line3):
    assert np.all(feasible_envelope(two_point, [4.0, 4.0]).values == 0.0)
    env = feasible_envelope(two_point, [0.0, 1.0])
    assert env.values.tolist() == [1.0, 1.0]
    assert env.feasibility_residual == 0.0
    f = line3.coords[:, 0] ** 2
    assert np.all(feasible_envelope(line3, f).values <= lip_constant(line3, f))


def test_seminorm_of_constant(two_point, two_point_family):
    res = ks1p_seminorm(two_point, two_point_family, [3.0, 3.0], 2.0)
    assert res.value == 0.0
    assert np.all(res.witness.values == 0.0)


def test_worked_example(two_point, two_point_family):
    res = ks1p_seminorm(two_point, two_point_family, [0.0, 1.0], 2.0)
    assert res.value == pytest.approx(ROOT_5_32, abs=1e-6)
    assert res.witness.feasibility_residual <= 1e-12
    np.testing.assert_allclose(res.witness.values, [0.5, 0.5], atol=1e-3)


def test_oracle_examples(two_point, two_point_family):
    assert ks1p_oracle(two_point, two_point_family, [1.0, 1.0], 2.0) == 0.0
    assert ks1p_oracle(two_point, two_point_family, [0.0, 1.0], 2.0) == pytest.approx(ROOT_5_32, abs=1e-3)
    sp4 = build_space(list("abcd"), np.ones(4), coords=np.arange(4.0)[:, None])
    with pytest.raises(TooLarge):
        ks1p_oracle(sp4, enumerate_balls(sp4), np.arange(4.0), 2.0)


def test_lip_membership_example(two_point, two_point_family):
    rep = lip_membership_bound(two_point, two_point_family, [0.0, 1.0], 2.0)
    assert rep["bound"] == pytest.approx(0.5 * math.sqrt(0.625), rel=1e-12)
    assert rep["seminorm"] == pytest.approx(ROOT_5_32, abs=1e-6)
    assert rep["ok"]
    const = lip_membership_bound(two_point, two_point_family, [2.0, 2.0], 2.0)
    assert const["seminorm"] == 0.0 == const["bound"]


def test_uniqueness_probe_examples(two_point, two_point_family):
    rep = minimizer_uniqueness_probe(two_point, two_point_family, [0.0, 1.0], 2.0, 5)
    assert rep["uniqueness_claimed"]
    assert rep["max_pairwise_witness_distance"] <= 1e-4
    const = minimizer_uniqueness_probe(two_point, two_point_family, [1.0, 1.0], 2.0, 5)
    assert const["max_pairwise_witness_distance"] == 0.0
    p1 = minimizer_uniqueness_probe(two_point, two_point_family, [0.0, 1.0], 1.0, 3)
    assert not p1["uniqueness_claimed"]


def test_solver_failure_carries_best():
    sp = random_space(np.random.default_rng(3), 12)
    fam = enumerate_balls(sp)
    f = np.random.default_rng(4).normal(size=12)
    with pytest.raises(SolverFailure) as exc:
        ks1p_seminorm(sp, fam, f, 2.0, SolverOptions(tolerance=1e-14, max_iters=2))
    best = exc.value.best
    assert best.witness.feasibility_residual <= 1e-12
    assert best.value <= ks_norm(sp, fam, feasible_envelope(sp, f).values, 2.0) * (1 + 1e-12)


def test_zero_mass_points_are_unconstrained():
    sp = build_space(["a", "b", "c"], [0.5, 0.0, 0.5], coords=[[0.0], [0.5], [1.0]])
    fam = enumerate_balls(sp)
    # a jump at the null point costs nothing
    res = ks1p_seminorm(sp, fam, [0.0, 7.0, 0.0], 2.0)
    assert res.value == 0.0
    assert res.witness.values[1] == 0.0


@settings(max_examples=25)
@given(seeds, st.integers(2, 3), st.sampled_from(EXPONENTS))
def test_solver_matches_oracle(seed, n, p):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, n, dim=int(rng.integers(1, 3)), zero_mass=bool(rng.random() < 0.2))
    fam = enumerate_balls(sp)
    f = rng.uniform(-1, 1, n)
    s = ks1p_seminorm(sp, fam, f, p).value
    o = ks1p_oracle(sp, fam, f, p)
    assert abs(s - o) <= max(1e-3, 1e-3 * o)


@given(space_and_family(2, 8), st.sampled_from(EXPONENTS), st.floats(-20, 20), st.floats(0.1, 10))
def test_shift_and_scale(data, p, c, a):
    sp, fam, rng = data
    f = rng.normal(size=sp.n)
    s = ks1p_seminorm(sp, fam, f, p).value
    tol = max(1e-4, 1e-3 * s)
    assert abs(ks1p_seminorm(sp, fam, f + c, p).value - s) <= tol
    assert abs(ks1p_seminorm(sp, fam, -a * f, p).value - a * s) <= max(1e-4, 1e-3 * a * s)


@given(space_and_family(2, 8), st.sampled_from(EXPONENTS))
def test_value_bounded_by_envelope_and_feasible(data, p):
    sp, fam, rng = data
    f = rng.normal(size=sp.n)
    res = ks1p_seminorm(sp, fam, f, p)
    assert res.value <= ks_norm(sp, fam, feasible_envelope(sp, f).values, p) * (1 + 1e-12)
    assert res.witness.feasibility_residual <= 1e-9 * max(1.0, lip_constant(sp, f))
    assert np.all(res.witness.values >= 0)
    assert feasibility_residual(sp, f, res.witness.values) == res.witness.feasibility_residual


@given(space_and_family(2, 7), st.sampled_from([1.5, 2.0, 4.0]))
def test_seminorm_triangle(data, p):
    sp, fam, rng = data
    f, g = rng.normal(size=sp.n), rng.normal(size=sp.n)
    opts = SolverOptions()
    sf = ks1p_seminorm(sp, fam, f, p).value
    sg = ks1p_seminorm(sp, fam, g, p).value
    sfg = ks1p_seminorm(sp, fam, f + g, p).value
    assert sfg <= (sf + sg) * (1 + 2 * opts.tolerance) + 1e-12


def test_solve_from_start_agrees(two_point, two_point_family):
    res = solve_from_start(two_point, two_point_family, [0.0, 1.0], 2.0, [3.0, 0.0])
    assert res.value == pytest.approx(ROOT_5_32, abs=1e-6)
