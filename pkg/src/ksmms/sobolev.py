"""Sobolev-type norms built on Kuelbs-Steadman norms.

On a finite metric measure space the first-order norm is
``||f||_KS^p + ||f||_KS^{1,p}``.  On a uniform Euclidean grid the order-``k``
norms sum the KS^p (or L^q) norms of finite-difference derivatives ``D^a f``
over all multi-indices ``|a| <= k``.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridTooSmall, MissingFullBall, ZeroTotalMass
from .ksnorm import INF, ks_inner, ks_norm, lp_norm, weighted_lp
from .lipschitz import SolverOptions, ks1p_seminorm
from .space import BallFamily, MetricMeasureSpace, build_space, diameter


def average(space: MetricMeasureSpace, f) -> float:
    """Mean ``mu(X)^-1 int f dmu``."""
    if not space.total_mass > 0:
        raise ZeroTotalMass("average needs positive total mass")
    f = np.asarray(f, dtype=float)
    return math.fsum(f * space.mass) / space.total_mass


# ---------------------------------------------------------------------------
# metric-space norms
# ---------------------------------------------------------------------------


def _warn_p1(p):
    if p == 1:
        warnings.warn("the first-order Sobolev-type norm is defined for p > 1; computing p = 1 anyway", RuntimeWarning, stacklevel=3)


def _parts(space, family, f, p, opts):
    return ks_norm(space, family, f, p), ks1p_seminorm(space, family, f, p, opts).value


def ws1p_parts(space, family, f, p, opts: SolverOptions | None = None) -> tuple[float, float]:
    """``(||f||_KS^p, ||f||_KS^{1,p})``; the first-order norm is their sum."""
    _warn_p1(p)
    return _parts(space, family, f, p, opts)


def ws1p_norm(space: MetricMeasureSpace, family: BallFamily, f, p: float, opts: SolverOptions | None = None) -> float:
    """``||f||_KS^p + ||f||_KS^{1,p}``.

    ``p = 1`` is computed with a ``RuntimeWarning``.  Raises
    :class:`~ksmms.errors.SolverFailure` from the semi-norm solver.
    """
    _warn_p1(p)
    ks, semi = _parts(space, family, f, p, opts)
    return ks + semi


def poincare_constant(space: MetricMeasureSpace, family: BallFamily, p: float) -> float:
    """Provable Poincare constant for the given family.

    From ``|f(x) - f_X| <= diam (g(x) + mu(X)^-1 int g)`` integrated over
    each ball:

        C = diam * (1 + tau_*^(-1/p) (sum_r tau_r mu(B_r)^p)^(1/p) / mu(X)),

    where ``tau_*`` is the weight of the full ball.  At ``p = inf`` the
    weighted sum becomes ``max_r mu(B_r)`` and ``tau_*`` drops out.
    """
    k = family.full_ball_index
    if k is None:
        raise MissingFullBall("the ball family has no ball equal to the whole space")
    if p == INF:
        spread = float(np.max(family.ball_mass))
        tau_factor = 1.0
    else:
        spread = weighted_lp(family.ball_mass, family.weights, p)
        tau_factor = float(family.weights[k]) ** (-1.0 / p)
    return diameter(space) * (1.0 + tau_factor * spread / space.total_mass)


def poincare_report(space: MetricMeasureSpace, family: BallFamily, f, p: float, opts: SolverOptions | None = None) -> dict:
    """Compare ``||f - f_X||_KS^p`` with the constant times the semi-norm.

    ``ok_derived`` uses :func:`poincare_constant` and is meant to be asserted;
    ``ok_two_diameter`` uses ``2 diam(X)`` and is recorded only.
    """
    opts = opts or SolverOptions()
    derived = poincare_constant(space, family, p)
    f = np.asarray(f, dtype=float)
    lhs = ks_norm(space, family, f - average(space, f), p)
    semi = ks1p_seminorm(space, family, f, p, opts).value
    two_diam = 2.0 * diameter(space)
    slack = 1.0 + opts.tolerance
    return {
        "lhs": lhs,
        "seminorm": semi,
        "derived_constant": derived,
        "two_diameter_constant": two_diam,
        "ok_derived": bool(lhs <= derived * semi * slack + 1e-12 * max(lhs, 1e-300)),
        "ok_two_diameter": bool(lhs <= two_diam * semi * slack + 1e-12 * max(lhs, 1e-300)),
    }


def equivalent_norm_check(space, family, f_set, p, bullet_norm, opts: SolverOptions | None = None) -> dict:
    """Empirical equivalence of ``bullet(f) + ||f||_KS^{1,p}`` and the first-order norm.

    ``bullet_norm`` is any callable ``f -> float``.  Zero functions are
    skipped.  Returns the smallest and largest ratio over the sample.
    """
    ratios = []
    skipped = 0
    for f in f_set:
        f = np.asarray(f, dtype=float)
        if not np.any(f):
            skipped += 1
            continue
        ks, semi = _parts(space, family, f, p, opts)
        ws = ks + semi
        alt = float(bullet_norm(f)) + semi
        ratios.append(alt / ws if ws > 0 else math.inf)
    ratios = np.array(ratios)
    finite = bool(ratios.size == 0 or (np.all(np.isfinite(ratios)) and np.all(ratios > 0)))
    return {
        "c_low": float(ratios.min()) if ratios.size else None,
        "c_high": float(ratios.max()) if ratios.size else None,
        "ratios": ratios.tolist(),
        "skipped_zero": skipped,
        "ok": finite,
    }


# ---------------------------------------------------------------------------
# Euclidean grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiIndex:
    alpha: tuple

    def __post_init__(self):
        a = tuple(int(v) for v in self.alpha)
        if any(v < 0 for v in a):
            raise ValueError("multi-index entries must be nonnegative")
        object.__setattr__(self, "alpha", a)

    @property
    def order(self) -> int:
        return sum(self.alpha)

    @property
    def dim(self) -> int:
        return len(self.alpha)

    @staticmethod
    def up_to(dim: int, k: int) -> list["MultiIndex"]:
        """All multi-indices with ``|a| <= k``, ordered by order then lexicographically."""
        out = [MultiIndex(a) for a in itertools.product(range(k + 1), repeat=dim) if sum(a) <= k]
        return sorted(out, key=lambda m: (m.order, m.alpha))


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid on the box ``[lower, upper]^dim``.

    Nodes are ordered row-major (last axis fastest).  ``cell_mass`` is the
    per-node measure; ``None`` means uniform with total mass one.
    """

    dim: int
    n_per_axis: int
    lower: float = 0.0
    upper: float = 1.0
    cell_mass: float | None = None

    def __post_init__(self):
        if self.dim < 1 or self.n_per_axis < 1:
            raise ValueError("grid needs dim >= 1 and n_per_axis >= 1")
        if not self.upper > self.lower:
            raise ValueError("grid box must have upper > lower")
        if self.cell_mass is not None and not self.cell_mass > 0:
            raise ValueError("cell mass must be positive")

    @property
    def n_nodes(self) -> int:
        return self.n_per_axis ** self.dim

    @property
    def shape(self) -> tuple:
        return (self.n_per_axis,) * self.dim

    @property
    def h(self) -> float:
        if self.n_per_axis == 1:
            return self.upper - self.lower
        return (self.upper - self.lower) / (self.n_per_axis - 1)

    @property
    def masses(self) -> np.ndarray:
        m = 1.0 / self.n_nodes if self.cell_mass is None else self.cell_mass
        return np.full(self.n_nodes, m)

    @cached_property
    def nodes(self) -> np.ndarray:
        axis = np.linspace(self.lower, self.upper, self.n_per_axis)
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    @cached_property
    def space(self) -> MetricMeasureSpace:
        return build_space([str(i) for i in range(self.n_nodes)], self.masses, coords=self.nodes)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "n_per_axis": self.n_per_axis,
            "lower": self.lower,
            "upper": self.upper,
            "cell_mass": self.cell_mass,
        }

    @classmethod
    def from_dict(cls, d) -> "GridSpec":
        return cls(int(d["dim"]), int(d["n_per_axis"]), float(d.get("lower", 0.0)), float(d.get("upper", 1.0)), d.get("cell_mass"))


def grid_space(grid: GridSpec) -> MetricMeasureSpace:
    return grid.space


def _as_multi(alpha, dim) -> MultiIndex:
    m = alpha if isinstance(alpha, MultiIndex) else MultiIndex(tuple(alpha))
    if m.dim != dim:
        raise ValueError(f"multi-index has {m.dim} entries for a {dim}-dimensional grid")
    return m


def grid_weak_derivative(grid: GridSpec, f, alpha) -> np.ndarray:
    """Finite-difference ``D^alpha f`` on the grid (flattened node order).

    Each axis is differentiated ``alpha_i`` times with central differences
    inside and second-order one-sided differences at the boundary, so
    quadratics are differentiated exactly.
    """
    m = _as_multi(alpha, grid.dim)
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_nodes,):
        raise ValueError(f"expected {grid.n_nodes} values, got {f.shape}")
    if m.order == 0:
        return f.copy()
    need = max(3, 2 * m.order + 1)
    if grid.n_per_axis < need:
        raise GridTooSmall(f"derivative of order {m.order} needs {need} nodes per axis, grid has {grid.n_per_axis}")
    arr = f.reshape(grid.shape)
    for axis, times in enumerate(m.alpha):
        for _ in range(times):
            arr = np.gradient(arr, grid.h, axis=axis, edge_order=2)
    return arr.ravel()


def _derivatives(grid, f, k):
    if k < 0:
        raise ValueError("order k must be >= 0")
    return [(m, grid_weak_derivative(grid, f, m)) for m in MultiIndex.up_to(grid.dim, k)]


def _combine(norms, p):
    norms = np.asarray(norms, dtype=float)
    if p == INF:
        return float(norms.max())
    return weighted_lp(norms, np.ones(len(norms)), p)


def wkp_norm(grid: GridSpec, f, k: int, q: float) -> float:
    """``(sum_{|a|<=k} ||D^a f||_L^q^q)^(1/q)`` (maximum over ``a`` at ``q = inf``)."""
    sp = grid.space
    return _combine([lp_norm(sp, d, q) for _, d in _derivatives(grid, f, k)], q)


def wskp_norm(grid: GridSpec, family: BallFamily, f, k: int, p: float) -> float:
    """``(sum_{|a|<=k} ||D^a f||_KS^p^p)^(1/p)`` (maximum over ``a`` at ``p = inf``)."""
    sp = grid.space
    return _combine([ks_norm(sp, family, d, p) for _, d in _derivatives(grid, f, k)], p)


def wsk2_inner(grid: GridSpec, family: BallFamily, f, g, k: int) -> float:
    """``sum_{|a|<=k} <D^a f, D^a g>_KS^2``."""
    sp = grid.space
    dg = dict(_derivatives(grid, g, k))
    return math.fsum(ks_inner(sp, family, d, dg[m]) for m, d in _derivatives(grid, f, k))


def euclid_embedding_report(grid: GridSpec, family: BallFamily, f, k: int, q: float) -> dict:
    """Check ``||f||_WS^{k,q} <= ||f||_W^{k,q}`` with shared finite differences.

    The node measure of the grid stands in for the Lebesgue measure on the
    Euclidean side (flagged as ``measure`` in the report).
    """
    ws = wskp_norm(grid, family, f, k, q)
    w = wkp_norm(grid, f, k, q)
    return {
        "ws_norm": ws,
        "w_norm": w,
        "ok": bool(ws <= w * (1.0 + 1e-10) + 1e-300),
        "measure": "grid node measure",
    }
