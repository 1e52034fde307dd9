"""Finite metric measure spaces and their enumerated closed-ball families.

A :class:`MetricMeasureSpace` is a finite point set carrying a distance table
and one measure atom per point.  A :class:`BallFamily` is the ordered list of
closed balls ``B(center, radius)`` together with positive weights summing to
one; every Kuelbs-Steadman quantity in this package is a finite sum over such
a family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from .errors import (
    BadRadiusGrid,
    EmptySpace,
    IndexOutOfRange,
    NegativeMass,
    NonMetric,
)

# largest point count for which the O(n^3) triangle scan is run
TRIANGLE_CHECK_LIMIT = 2000
# geometric weights never fall below this (float64 would underflow to 0)
MIN_LOG10_WEIGHT = -200.0


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class MetricMeasureSpace:
    """Finite metric measure space ``(X, d, mu)``.

    Attributes
    ----------
    point_ids : tuple of str
        Ordered point identifiers.
    dist : (n, n) ndarray
        Symmetric distance table with zero diagonal.
    mass : (n,) ndarray
        Measure atoms ``mu({x})``; zero is allowed (geometry-only points).
    coords : (n, D) ndarray or None
        Coordinates when the space was built with the Euclidean rule.
    """

    point_ids: tuple
    dist: np.ndarray
    mass: np.ndarray
    coords: np.ndarray | None = None
    total_mass: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_mass", math.fsum(self.mass))

    @property
    def n(self) -> int:
        return len(self.point_ids)

    def index_of(self, point_id) -> int:
        try:
            return self.point_ids.index(str(point_id))
        except ValueError:
            raise KeyError(f"unknown point id {point_id!r}") from None

    def normalized(self) -> "MetricMeasureSpace":
        """Return the same space with total mass rescaled to one."""
        return MetricMeasureSpace(self.point_ids, self.dist, _readonly(self.mass / self.total_mass), self.coords)

    @property
    def positive(self) -> np.ndarray:
        return self.mass > 0


def _check_triangle(dist, ids, tol):
    n = dist.shape[0]
    for y in range(n):
        bound = dist[:, y, None] + dist[None, y, :]
        bad = dist > bound + tol
        if bad.any():
            xs, zs = np.nonzero(bad)
            x, z = int(xs[0]), int(zs[0])
            raise NonMetric(
                f"triangle inequality fails: d({ids[x]},{ids[z]})={dist[x, z]!r} > "
                f"d({ids[x]},{ids[y]}) + d({ids[y]},{ids[z]})={bound[x, z]!r}",
                (ids[x], ids[y], ids[z]),
            )


def build_space(point_ids: Sequence, mass, *, dist=None, coords=None) -> MetricMeasureSpace:
    """Build and validate a finite metric measure space.

    Exactly one of ``dist`` (explicit table) or ``coords`` (Euclidean rule)
    must be given.  Explicit tables are checked for symmetry, positivity and
    the triangle inequality over every triple (up to 2000 points); Euclidean
    distances are metric by construction and only checked for coincident
    points.
    """
    ids = tuple(str(p) for p in point_ids)
    n = len(ids)
    if n == 0:
        raise EmptySpace("a space needs at least one point")
    if len(set(ids)) != n:
        raise ValueError("point ids must be unique")
    mass = np.asarray(mass, dtype=float).reshape(-1)
    if mass.shape != (n,):
        raise ValueError(f"expected {n} mass atoms, got {mass.shape[0]}")
    if not np.all(np.isfinite(mass)):
        raise ValueError("mass atoms must be finite")
    if np.any(mass < 0):
        i = int(np.argmax(mass < 0))
        raise NegativeMass(f"negative mass {mass[i]!r} at point {ids[i]}")
    if not mass.sum() > 0:
        raise NegativeMass("total mass must be positive")

    if (dist is None) == (coords is None):
        raise ValueError("give exactly one of dist or coords")
    if coords is not None:
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.shape[0] != n:
            raise ValueError("coords must have one row per point")
        d = cdist(coords, coords)
        coords = _readonly(coords)
    else:
        d = np.array(dist, dtype=float)
        if d.shape != (n, n):
            raise ValueError(f"distance table must be {n}x{n}")
        if not np.all(np.isfinite(d)):
            raise ValueError("distances must be finite")
        scale = float(np.abs(d).max()) if n > 1 else 0.0
        tol = 1e-12 * scale
        if np.any(np.diag(d) != 0):
            i = int(np.argmax(np.diag(d) != 0))
            raise NonMetric(f"d({ids[i]},{ids[i]}) != 0", (ids[i], ids[i]))
        asym = np.abs(d - d.T) > tol
        if asym.any():
            i, j = (int(v[0]) for v in np.nonzero(asym))
            raise NonMetric(f"d({ids[i]},{ids[j]}) != d({ids[j]},{ids[i]})", (ids[i], ids[j]))
        d = 0.5 * (d + d.T)
        if n <= TRIANGLE_CHECK_LIMIT:
            _check_triangle(d, ids, tol)

    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] <= 0):
        i, j = (int(v[0]) for v in np.nonzero((d <= 0) & off))
        raise NonMetric(f"d({ids[i]},{ids[j]}) must be positive for distinct points", (ids[i], ids[j]))
    return MetricMeasureSpace(ids, _readonly(d), _readonly(mass), coords)


def diameter(space: MetricMeasureSpace) -> float:
    return float(space.dist.max())


def min_positive_distance(space: MetricMeasureSpace) -> float:
    """Smallest distance between distinct points (``inf`` for one point)."""
    if space.n < 2:
        return math.inf
    d = space.dist[~np.eye(space.n, dtype=bool)]
    return float(d.min())


def doubling_constant(space: MetricMeasureSpace) -> float:
    """Exact ``sup mu(B(x, 2r)) / mu(B(x, r))`` over centers and all radii ``r > 0``.

    For a center ``x`` with distinct distance levels ``0 = u_0 < ... < u_K``,
    the closed ball ``B(x, r)`` is constant for ``r`` in ``[u_k, u_{k+1})``
    while ``B(x, 2r)`` grows towards ``{y : d(x, y) < 2 u_{k+1}}``; the
    supremum over that interval is the ratio of those two masses.  Balls of
    zero measure are skipped.
    """
    best = 1.0
    for x in range(space.n):
        order = np.argsort(space.dist[x], kind="stable")
        d = space.dist[x, order]
        cum = np.cumsum(space.mass[order])
        levels, first = np.unique(d, return_index=True)
        if len(levels) < 2:
            continue
        # mass of B(x, u_k) includes every point tied at level u_k
        last = np.append(first[1:], len(d)) - 1
        denom = cum[last[:-1]]
        upper = np.searchsorted(d, 2.0 * levels[1:], side="left")
        numer = np.where(upper > 0, cum[np.maximum(upper - 1, 0)], 0.0)
        ok = denom > 0
        if ok.any():
            best = max(best, float(np.max(numer[ok] / denom[ok])))
    return best


@dataclass(frozen=True)
class BallScheme:
    """Parameters of a ball enumeration.

    ``radius_grid`` and ``center_order`` default to the geometric ladder and
    the point order.  ``weight_rule`` is ``"geometric"`` (raw weight
    ``ratio**position``) or ``"uniform"``.
    """

    radius_grid: tuple | None = None
    center_order: tuple | None = None
    weight_rule: str = "geometric"
    ratio: float = 0.5

    def to_dict(self):
        return {
            "radius_grid": None if self.radius_grid is None else list(self.radius_grid),
            "center_order": None if self.center_order is None else list(self.center_order),
            "weight_rule": self.weight_rule,
            "ratio": self.ratio,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        rg = d.get("radius_grid")
        co = d.get("center_order")
        return cls(
            radius_grid=None if rg is None else tuple(float(r) for r in rg),
            center_order=None if co is None else tuple(str(c) for c in co),
            weight_rule=d.get("weight_rule", "geometric"),
            ratio=float(d.get("ratio", 0.5)),
        )


@dataclass(frozen=True, eq=False)
class BallFamily:
    """Ordered closed balls with weights ``tau_r``.

    Attributes
    ----------
    centers : (R,) int ndarray
        Center index of each ball.
    radii : (R,) ndarray
    membership : scipy.sparse.csr_matrix, shape (R, n)
        Row ``r`` is the indicator ``chi_r`` of ball ``r``.
    weights : (R,) ndarray
        Positive, summing to one.
    ball_mass : (R,) ndarray
        ``mu(B_r)``.
    """

    centers: np.ndarray
    radii: np.ndarray
    membership: sparse.csr_matrix
    weights: np.ndarray
    ball_mass: np.ndarray
    has_full_ball: bool
    covers_singletons: bool
    n_collapsed: int = 0

    def __len__(self):
        return len(self.radii)

    def member_set(self, r) -> frozenset:
        row = self.membership.getrow(r)
        return frozenset(int(i) for i in row.indices)

    def integrals(self, space, f) -> np.ndarray:
        """All ball integrals ``int chi_r f dmu`` at once."""
        f = np.asarray(f, dtype=float)
        return self.membership @ (f * space.mass)

    @property
    def full_ball_index(self) -> int | None:
        full = np.flatnonzero(np.diff(self.membership.indptr) == self.membership.shape[1])
        return int(full[0]) if len(full) else None


def default_radius_grid(space: MetricMeasureSpace) -> tuple:
    """Ladder ``r_j = (min positive distance / 2) * 2**j`` up to the diameter."""
    if space.n < 2:
        return (1.0,)
    r = min_positive_distance(space) / 2.0
    diam = diameter(space)
    grid = [r]
    while grid[-1] < diam:
        grid.append(grid[-1] * 2.0)
    return tuple(grid)


def _validate_grid(space, grid):
    if len(grid) == 0:
        raise BadRadiusGrid("radius_grid is empty")
    g = np.asarray(grid, dtype=float)
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise BadRadiusGrid("radii must be positive and finite")
    if np.any(np.diff(g) <= 0):
        raise BadRadiusGrid("radius_grid must be strictly increasing")
    if space.n > 1 and g[0] >= min_positive_distance(space):
        raise BadRadiusGrid(
            f"min radius {g[0]!r} must be below the minimal positive distance "
            f"{min_positive_distance(space)!r} (singletons would be missed)"
        )
    if g[-1] < diameter(space):
        raise BadRadiusGrid(f"max radius {g[-1]!r} must reach the diameter {diameter(space)!r}")
    return g


def _cantor_order(n_centers, n_radii):
    i, j = np.meshgrid(np.arange(n_centers), np.arange(n_radii), indexing="ij")
    i, j = i.ravel(), j.ravel()
    s = i + j
    key = s * (s + 1) // 2 + j
    order = np.argsort(key, kind="stable")
    return i[order], j[order]


def _normalize_weights(raw):
    return raw / math.fsum(raw)


def _raw_weights(n_balls, rule, ratio):
    if rule == "uniform":
        return np.ones(n_balls)
    if rule != "geometric":
        raise ValueError(f"unknown weight_rule {rule!r}")
    if not 0 < ratio < 1:
        raise ValueError("geometric ratio must lie in (0, 1)")
    if n_balls > 1 and (n_balls - 1) * math.log10(ratio) < MIN_LOG10_WEIGHT:
        ratio = 10.0 ** (MIN_LOG10_WEIGHT / (n_balls - 1))
    return ratio ** np.arange(n_balls, dtype=float)


def _family(space, centers, radii, rows, weights, n_collapsed=0):
    n = space.n
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    member = sparse.csr_matrix((np.ones(len(indices)), indices, indptr), shape=(len(rows), n))
    sizes = np.diff(indptr)
    singles = {int(r[0]) for r in rows if len(r) == 1}
    w = _readonly(weights)
    return BallFamily(
        centers=np.asarray(centers, dtype=np.int64),
        radii=_readonly(radii),
        membership=member,
        weights=w,
        ball_mass=_readonly(member @ space.mass),
        has_full_ball=bool(np.any(sizes == n)),
        covers_singletons=len(singles) == n,
        n_collapsed=n_collapsed,
    )


def enumerate_balls(space: MetricMeasureSpace, scheme: BallScheme | None = None) -> BallFamily:
    """Enumerate closed balls in diagonal (Cantor pairing) order.

    The pair ``(center position i, radius index j)`` is visited in order of
    ``(i + j)(i + j + 1)/2 + j``.  A ball whose member set already occurred
    earlier in the enumeration is dropped, so each distinct set appears once,
    carried by its first (center, radius).  Raw weights follow
    ``scheme.weight_rule`` and are renormalized to sum to one.

    Raises
    ------
    BadRadiusGrid
        If the grid misses singletons or never reaches the diameter.
    """
    scheme = scheme or BallScheme()
    grid = scheme.radius_grid if scheme.radius_grid is not None else default_radius_grid(space)
    grid = _validate_grid(space, grid)
    if scheme.center_order is None:
        center_idx = np.arange(space.n)
    else:
        center_idx = np.array([space.index_of(c) for c in scheme.center_order])
        if sorted(center_idx.tolist()) != list(range(space.n)):
            raise ValueError("center_order must be a permutation of the point ids")

    ci, rj = _cantor_order(space.n, len(grid))
    seen = set()
    centers, radii, rows = [], [], []
    for i, j in zip(ci.tolist(), rj.tolist()):
        c = int(center_idx[i])
        members = np.flatnonzero(space.dist[c] <= grid[j])
        key = members.tobytes()
        if key in seen:
            continue
        seen.add(key)
        centers.append(c)
        radii.append(grid[j])
        rows.append(members)
    raw = _raw_weights(len(rows), scheme.weight_rule, scheme.ratio)
    return _family(space, centers, radii, rows, _normalize_weights(raw), len(ci) - len(rows))


def explicit_family(space: MetricMeasureSpace, balls, weights=None) -> BallFamily:
    """Family from an explicit list of ``(center_id, radius)`` and weights.

    Weights are renormalized to sum to one; uniform when omitted.
    """
    centers, radii, rows = [], [], []
    for center, radius in balls:
        c = space.index_of(center)
        centers.append(c)
        radii.append(float(radius))
        rows.append(np.flatnonzero(space.dist[c] <= radius))
    if not rows:
        raise ValueError("a ball family needs at least one ball")
    raw = np.ones(len(rows)) if weights is None else np.asarray(weights, dtype=float)
    if raw.shape != (len(rows),) or np.any(raw <= 0):
        raise ValueError("need one positive weight per ball")
    return _family(space, centers, radii, rows, _normalize_weights(raw))


def ball_integral(space: MetricMeasureSpace, family: BallFamily, r: int, f) -> float:
    """``int_X chi_r f dmu``, summed over the members in index order."""
    if not 0 <= r < len(family):
        raise IndexOutOfRange(f"ball index {r} outside [0, {len(family)})")
    f = np.asarray(f, dtype=float)
    lo, hi = family.membership.indptr[r], family.membership.indptr[r + 1]
    idx = family.membership.indices[lo:hi]
    return float(np.dot(f[idx], space.mass[idx]))
