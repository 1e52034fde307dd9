"""Hardy-Littlewood maximal operator, 5B covering and distribution-function tools.

The candidate balls for ``Mf`` are all closed balls centred at points with
radii in ``{0} U {d(x, y)}``.  A ball's average only changes when its member
set does, so this finite family realizes the full supremum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import BadExponent, NegativeInput, NoValidBall
from .ksnorm import INF, embedding_constant, ks_norm, lp_norm
from .lipschitz import SolverOptions
from .sobolev import _parts
from .space import BallFamily, MetricMeasureSpace, doubling_constant


def _sorted_rows(space):
    order = np.argsort(space.dist, axis=1, kind="stable")
    d = np.take_along_axis(space.dist, order, axis=1)
    n = space.n
    idx = np.broadcast_to(np.arange(n), (n, n))
    # position of the last member of each tie group (closed balls keep ties)
    is_end = np.ones((n, n), dtype=bool)
    is_end[:, :-1] = d[:, 1:] != d[:, :-1]
    end = np.where(is_end, idx, n)
    end = np.minimum.accumulate(end[:, ::-1], axis=1)[:, ::-1]
    return order, d, end


def _maximal(space, f, R):
    a = np.abs(np.asarray(f, dtype=float))
    if a.shape != (space.n,):
        raise ValueError(f"expected {space.n} values, got {a.shape}")
    order, d, end = _sorted_rows(space)
    mass = space.mass[order]
    cm = np.cumsum(mass, axis=1)
    cf = np.cumsum(mass * a[order], axis=1)
    bm = np.take_along_axis(cm, end, axis=1)
    bf = np.take_along_axis(cf, end, axis=1)
    valid = bm > 0
    if R is not None:
        valid &= d < R
    avg = np.where(valid, bf / np.where(valid, bm, 1.0), -np.inf)
    # a point at sorted position j lies in every ball whose radius is >= d[j]
    reach = np.maximum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
    out = np.full((space.n, space.n), -np.inf)
    np.put_along_axis(out, order, reach, axis=1)
    return out.max(axis=0)


def maximal_function(space: MetricMeasureSpace, f) -> np.ndarray:
    """``Mf(x) = max`` over candidate balls ``B`` containing ``x`` of ``mu(B)^-1 int_B |f|``.

    Balls of zero measure are skipped.

    Raises
    ------
    NoValidBall
        If some point lies in no ball of positive measure.
    """
    m = _maximal(space, f, None)
    if np.isneginf(m).any():
        i = int(np.argmax(np.isneginf(m)))
        raise NoValidBall(f"point {space.point_ids[i]} lies in no ball of positive measure")
    return m


def restricted_maximal(space: MetricMeasureSpace, f, R: float) -> np.ndarray:
    """Maximal function over candidate balls of radius ``< R``.

    A point contained in no admissible ball of positive measure gets 0.
    """
    if not R > 0:
        raise ValueError("restriction radius must be positive")
    m = _maximal(space, f, R)
    return np.where(np.isneginf(m), 0.0, m)


# ---------------------------------------------------------------------------
# covering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoveringSelection:
    selected: tuple
    expansion_factor: int = 5


def _ball_members(space, balls):
    centers = np.array([_center_index(space, c) for c, _ in balls], dtype=int)
    radii = np.array([float(r) for _, r in balls])
    if np.any(radii < 0):
        raise ValueError("radii must be nonnegative")
    return centers, radii, space.dist[centers] <= radii[:, None]


def _center_index(space, c):
    if isinstance(c, (int, np.integer)):
        if not 0 <= c < space.n:
            raise IndexError(f"center index {c} out of range")
        return int(c)
    return space.index_of(c)


def greedy_5B(space: MetricMeasureSpace, balls) -> CoveringSelection:
    """Greedy disjoint subfamily of ``balls`` (pairs ``(center, radius)``).

    Balls are visited by decreasing radius, ties by input position, and a
    ball is kept iff its member set misses every kept ball.  Every skipped
    ball then meets a kept ball at least as large, so the 5-fold dilations
    of the kept balls cover every input ball.
    """
    if len(balls) == 0:
        return CoveringSelection(())
    _, radii, members = _ball_members(space, balls)
    order = sorted(range(len(balls)), key=lambda i: (-radii[i], i))
    taken = np.zeros(space.n, dtype=bool)
    selected = []
    for i in order:
        if not (members[i] & taken).any():
            selected.append(i)
            taken |= members[i]
    return CoveringSelection(tuple(selected))


def check_covering(space: MetricMeasureSpace, balls, selection: CoveringSelection) -> dict:
    """Brute-force check of the three covering guarantees over the ambient points."""
    centers, radii, members = _ball_members(space, balls)
    sel = list(selection.selected)
    disjoint = True
    for a in range(len(sel)):
        for b in range(a + 1, len(sel)):
            if (members[sel[a]] & members[sel[b]]).any():
                disjoint = False
    radius_ok = True
    covered = True
    if sel:
        grown = space.dist[centers[sel]] <= selection.expansion_factor * radii[sel][:, None]
        union = grown.any(axis=0)
    else:
        union = np.zeros(space.n, dtype=bool)
    for i in range(len(balls)):
        meets = [j for j in sel if (members[i] & members[j]).any()]
        if not any(radii[j] >= 0.5 * radii[i] for j in meets):
            radius_ok = False
        if not union[members[i]].all():
            covered = False
    return {"disjoint": disjoint, "radius_ok": radius_ok, "covered": covered, "ok": disjoint and radius_ok and covered}


# ---------------------------------------------------------------------------
# distribution function and layer cake
# ---------------------------------------------------------------------------


def distribution_function(space: MetricMeasureSpace, f, t: float) -> float:
    """``mu({f > t})``."""
    f = np.asarray(f, dtype=float)
    return math.fsum(space.mass[f > t])


def _polynomial(psi) -> Polynomial:
    return psi if isinstance(psi, Polynomial) else Polynomial(np.asarray(psi, dtype=float))


def layer_cake(space: MetricMeasureSpace, f, psi) -> dict:
    """Both sides of ``int Psi(f) dmu = int_0^inf psi(s) mu({f > s}) ds``.

    ``psi`` is a :class:`numpy.polynomial.Polynomial` or its ascending
    coefficients, and ``Psi(t) = int_0^t psi``.  The right side is exact:
    ``mu({f > s})`` is constant between consecutive distinct values of ``f``.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise NegativeInput("layer cake needs a nonnegative function")
    Psi = _polynomial(psi).integ(lbnd=0.0)
    lhs = math.fsum(Psi(f) * space.mass)
    levels = np.unique(f[f > 0])
    knots = np.concatenate([[0.0], levels])
    # on (knots[k-1], knots[k]) the super-level set is {f >= knots[k]}
    tail = np.array([math.fsum(space.mass[f >= v]) for v in levels])
    rhs = math.fsum((Psi(knots[1:]) - Psi(knots[:-1])) * tail)
    diff = abs(lhs - rhs)
    return {"lhs": lhs, "rhs": rhs, "abs_diff": diff, "ok": bool(diff <= 1e-12 * max(1.0, abs(lhs)))}


# ---------------------------------------------------------------------------
# boundedness reports
# ---------------------------------------------------------------------------


def _check_nonneg(f):
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise NegativeInput("expected a nonnegative function")
    return f


def weak_type_report(space: MetricMeasureSpace, f, t_grid=None, family: BallFamily | None = None) -> dict:
    """``sup_t t mu({Mf > t}) / ||f||_L^1`` against ``D^3``.

    Without ``t_grid`` the supremum is exact: ``t mu({Mf > t})`` increases
    between consecutive values ``v`` of ``Mf``, so the supremum is the
    largest left limit ``v mu({Mf >= v})``.  With a ``family`` the same
    supremum divided by ``||f||_KS^1`` is recorded as ``ks1_ratio``.
    """
    f = _check_nonneg(f)
    mf = maximal_function(space, f)
    D = doubling_constant(space)
    l1 = lp_norm(space, f, 1)
    pos = space.mass > 0
    if t_grid is None:
        vals = np.unique(mf[pos])
        vals = vals[vals > 0]
        sup = max((float(v) * math.fsum(space.mass[mf >= v]) for v in vals), default=0.0)
    else:
        sup = max((float(t) * distribution_function(space, mf, t) for t in t_grid if t > 0), default=0.0)
    ratio = sup / l1 if l1 > 0 else 0.0
    bound = D ** 3
    out = {
        "sup_ratio": ratio,
        "C_bound": bound,
        "doubling_constant": D,
        "ok": bool(ratio <= bound * (1.0 + 1e-10)),
    }
    if family is not None:
        k1 = ks_norm(space, family, f, 1)
        out["ks1_ratio"] = sup / k1 if k1 > 0 else None
    return out


def marcinkiewicz_constant(D: float, p: float) -> float:
    """``2 (D^3 p / (p - 1))^(1/p)``: L^p bound interpolated from weak (1,1) and L^inf."""
    return 2.0 * (D ** 3 * p / (p - 1.0)) ** (1.0 / p)


def strong_type_report(space: MetricMeasureSpace, family: BallFamily, f, p: float) -> dict:
    """KS^p ratio of ``Mf`` to ``f`` (recorded) and the provable L^p chain.

    The chain ``||Mf||_KS^p <= C_e ||Mf||_L^p <= C_e C_p ||f||_L^p`` uses the
    KS-vs-L^p embedding constant ``C_e`` (at most one in probability mode)
    and :func:`marcinkiewicz_constant`.
    """
    if not (1 < p < INF):
        raise BadExponent(f"need 1 < p < inf, got {p!r}")
    f = _check_nonneg(f)
    mf = maximal_function(space, f)
    D = doubling_constant(space)
    cm = marcinkiewicz_constant(D, p)
    ce = embedding_constant(space, family, p, p)
    ks_mf = ks_norm(space, family, mf, p)
    ks_f = ks_norm(space, family, f, p)
    lp_mf = lp_norm(space, mf, p)
    lp_f = lp_norm(space, f, p)
    slack = 1.0 + 1e-10
    chain = ks_mf <= ce * lp_mf * slack + 1e-300 and lp_mf <= cm * lp_f * slack + 1e-300
    return {
        "ks_ratio": ks_mf / ks_f if ks_f > 0 else None,
        "lp_ratio": lp_mf / lp_f if lp_f > 0 else None,
        "ks_of_mf": ks_mf,
        "lp_of_mf": lp_mf,
        "lp_of_f": lp_f,
        "embedding_constant": ce,
        "C_p": cm,
        "lp_chain_ok": bool(chain),
    }


def ws_maximal_report(space: MetricMeasureSpace, family: BallFamily, f, p: float, opts: SolverOptions | None = None) -> dict:
    """``||Mf||_WS^{1,p} / ||f||_WS^{1,p}`` with both decompositions; recorded only."""
    if not p > 1:
        raise BadExponent(f"need p > 1, got {p!r}")
    f = np.asarray(f, dtype=float)
    mf = maximal_function(space, f)
    ks_f, semi_f = _parts(space, family, f, p, opts)
    ks_m, semi_m = _parts(space, family, mf, p, opts)
    den = ks_f + semi_f
    return {
        "ws_ratio": (ks_m + semi_m) / den if den > 0 else None,
        "f_ks": ks_f,
        "f_seminorm": semi_f,
        "mf_ks": ks_m,
        "mf_seminorm": semi_m,
    }
