"""Deterministic synthetic spaces and functions."""
from __future__ import annotations

import numpy as np

from ..errors import SizeCap
from ..lipschitz import lip_constant
from ..space import MetricMeasureSpace, build_space
from . import expr

MAX_POINTS = 2000
SPACE_KINDS = ("grid-1d", "grid-2d", "random-cloud", "line-points")
FUNCTION_KINDS = ("random-uniform", "random-lipschitz", "polynomial", "indicator")


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_space(kind: str, size: int, seed=0, probability: bool = True) -> MetricMeasureSpace:
    """Synthetic space of the given kind.

    ``grid-1d``
        ``size`` equispaced nodes on ``[0, 1]``, equal masses.
    ``grid-2d``
        ``size x size`` nodes on ``[0, 1]^2``, equal masses.
    ``random-cloud``
        ``size`` uniform points in the unit square with masses drawn from
        ``U(0.2, 1)``.
    ``line-points``
        The integers ``0 .. size-1`` with equal masses; ``size = 2`` is the
        two-point space at distance 1 with masses ``1/2``.

    Masses are normalized to total one in probability mode.
    """
    if size < 1:
        raise ValueError("size must be positive")
    rng = _rng(seed)
    if kind == "grid-1d":
        n = size
        coords = np.linspace(0.0, 1.0, size)[:, None] if size > 1 else np.zeros((1, 1))
        mass = np.ones(n)
    elif kind == "grid-2d":
        n = size * size
        if n > MAX_POINTS:
            raise SizeCap(f"grid-2d of size {size} has {n} > {MAX_POINTS} points")
        axis = np.linspace(0.0, 1.0, size) if size > 1 else np.zeros(1)
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        coords = np.column_stack([xx.ravel(), yy.ravel()])
        mass = np.ones(n)
    elif kind == "random-cloud":
        n = size
        if n > MAX_POINTS:
            raise SizeCap(f"{n} > {MAX_POINTS} points")
        coords = rng.uniform(0.0, 1.0, (n, 2))
        mass = rng.uniform(0.2, 1.0, n)
    elif kind == "line-points":
        n = size
        coords = np.arange(n, dtype=float)[:, None]
        mass = np.ones(n)
    else:
        raise ValueError(f"unknown space kind {kind!r}; expected one of {SPACE_KINDS}")
    if n > MAX_POINTS:
        raise SizeCap(f"{n} > {MAX_POINTS} points")
    sp = build_space([str(i) for i in range(n)], mass, coords=coords)
    return sp.normalized() if probability else sp


def gen_function(kind: str, space: MetricMeasureSpace, seed=0, *, L: float = 1.0, expression: str | None = None, subset=()) -> np.ndarray:
    """Synthetic function on ``space``.

    ``random-uniform`` draws ``U(-1, 1)``; ``random-lipschitz`` rescales such
    a draw to Lipschitz constant at most ``L``; ``polynomial`` evaluates an
    expression of the coordinates (see :mod:`ksmms.harness.expr`);
    ``indicator`` is 1 on the point ids in ``subset``.
    """
    rng = _rng(seed)
    n = space.n
    if kind == "random-uniform":
        return rng.uniform(-1.0, 1.0, n)
    if kind == "random-lipschitz":
        if not L >= 0:
            raise ValueError("Lipschitz bound must be nonnegative")
        f = rng.uniform(-1.0, 1.0, n)
        lip = lip_constant(space, f)
        if lip == 0.0 or L == 0.0:
            return np.zeros(n) if L == 0.0 else f
        f = f * (L / lip)
        # rounding can leave the measured constant a few ulps above L
        shrink = 2.0 ** -50
        while lip_constant(space, f) > L:
            f = f * (1.0 - shrink)
            shrink *= 2.0
        return f
    if kind == "polynomial":
        if space.coords is None:
            raise ValueError("polynomial functions need point coordinates")
        return expr.evaluate(expression, space.coords)
    if kind == "indicator":
        idx = [space.index_of(s) for s in subset]
        f = np.zeros(n)
        f[idx] = 1.0
        return f
    raise ValueError(f"unknown function kind {kind!r}; expected one of {FUNCTION_KINDS}")
