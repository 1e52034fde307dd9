import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ksmms.space import build_space, enumerate_balls, explicit_family

settings.register_profile("ksmms", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ksmms")


@pytest.fixture
def two_point():
    """Points a=0, b=1 on a line with masses 1/2 each."""
    return build_space(["a", "b"], [0.5, 0.5], coords=[[0.0], [1.0]])


@pytest.fixture
def two_point_family(two_point):
    """{a}, {b}, {a, b} with weights 1/4, 1/4, 1/2."""
    return explicit_family(two_point, [("a", 0.5), ("b", 0.5), ("a", 1.0)], [1, 1, 2])


def random_space(rng, n, dim=2, zero_mass=False, probability=True):
    coords = rng.uniform(0.0, 1.0, (n, dim))
    mass = rng.uniform(0.2, 1.0, n)
    if zero_mass and n > 2:
        mass[rng.integers(n)] = 0.0
    sp = build_space([f"p{i}" for i in range(n)], mass, coords=coords)
    return sp.normalized() if probability else sp


seeds = st.integers(0, 2**32 - 1)


@st.composite
def space_and_family(draw, min_n=1, max_n=8):
    rng = np.random.default_rng(draw(seeds))
    n = draw(st.integers(min_n, max_n))
    sp = random_space(rng, n, dim=draw(st.integers(1, 3)), zero_mass=draw(st.booleans()))
    return sp, enumerate_balls(sp), rng


ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def acceptance_log():
    """Record one pass/fail line per acceptance criterion."""

    def log(number, ok, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
