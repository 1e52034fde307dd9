"""Lebesgue and Kuelbs-Steadman norms on a finite space, plus comparison reports."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadExponent
from .space import BallFamily, MetricMeasureSpace

INF = math.inf


def conjugate(p: float) -> float:
    """Conjugate exponent ``q`` with ``1/p + 1/q = 1``."""
    if p < 1:
        raise BadExponent(f"exponent must be >= 1, got {p!r}")
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class NormParams:
    p: float
    family: BallFamily | None = None

    def __post_init__(self):
        if not (self.p >= 1):
            raise BadExponent(f"exponent must be >= 1, got {self.p!r}")

    @property
    def q(self) -> float:
        return conjugate(self.p)


def weighted_lp(values, weights, p: float) -> float:
    """``(sum w |v|^p)^(1/p)``, or ``max |v|`` at ``p = inf``; overflow-safe."""
    a = np.abs(np.asarray(values, dtype=float))
    if a.size == 0:
        return 0.0
    s = float(a.max())
    if s == 0.0:
        return 0.0
    if p == INF:
        return s
    return s * float(np.dot(weights, (a / s) ** p)) ** (1.0 / p)


def lp_norm(space: MetricMeasureSpace, f, q: float) -> float:
    f = np.asarray(f, dtype=float)
    if q == INF:
        pos = space.mass > 0
        return float(np.abs(f[pos]).max())
    if q < 1:
        raise BadExponent(f"exponent must be >= 1, got {q!r}")
    return weighted_lp(f, space.mass, q)


def ks_norm(space: MetricMeasureSpace, family: BallFamily, f, p: float) -> float:
    """Kuelbs-Steadman norm.

    ``(sum_r tau_r |int chi_r f|^p)^(1/p)`` for finite ``p`` and the
    unweighted ``sup_r |int chi_r f|`` for ``p = inf``.
    """
    if not (p >= 1):
        raise BadExponent(f"exponent must be >= 1, got {p!r}")
    return weighted_lp(family.integrals(space, f), family.weights, p)


def ks_inner(space: MetricMeasureSpace, family: BallFamily, f, g) -> float:
    bf = family.integrals(space, f)
    bg = family.integrals(space, g)
    return float(np.dot(family.weights, bf * bg))


def embedding_constant(space: MetricMeasureSpace, family: BallFamily, p: float, q: float) -> float:
    """Constant ``C`` with ``||f||_KS^p <= C ||f||_L^q`` for every ``f``.

    For ``q < inf`` (or ``p = inf``) Hoelder on each ball gives
    ``|int chi_r f| <= mu(B_r)^(1 - 1/q) ||f||_q``; for ``q = inf`` and finite
    ``p`` the weighted sum ``(sum tau_r mu(B_r)^p)^(1/p)`` is kept.
    """
    if not (p >= 1 and q >= 1):
        raise BadExponent("exponents must be >= 1")
    mb = family.ball_mass
    if q == INF and p != INF:
        return weighted_lp(mb, family.weights, p)
    return float(np.max(mb ** (1.0 - 1.0 / q)))


def holder_report(space: MetricMeasureSpace, family: BallFamily, f, g, p: float) -> dict:
    """Hoelder-type comparison for ``f g``.

    ``per_ball_ok`` and ``lp_chain_ok`` are provable and meant to be asserted.
    ``ks_holder_ok`` records ``||fg||_KS^1 <= ||f||_KS^p ||g||_KS^q``,
    which fails in general (sign cancellation inside ball integrals).
    """
    if not (1 < p < INF):
        raise BadExponent(f"need 1 < p < inf, got {p!r}")
    q = conjugate(p)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    fg = f * g

    lhs = np.abs(family.integrals(space, fg))
    fp = family.integrals(space, np.abs(f) ** p) ** (1.0 / p)
    gq = family.integrals(space, np.abs(g) ** q) ** (1.0 / q)
    per_ball = lhs <= fp * gq * (1 + 1e-10) + 1e-300

    ks1 = ks_norm(space, family, fg, 1)
    ksp = ks_norm(space, family, f, p)
    ksq = ks_norm(space, family, g, q)
    lpf = lp_norm(space, f, p)
    lqg = lp_norm(space, g, q)
    worst = int(np.argmin(fp * gq - lhs)) if len(lhs) else 0
    return {
        "ks1_of_product": ks1,
        "ks_p_of_f": ksp,
        "ks_q_of_g": ksq,
        "lp_of_f": lpf,
        "lq_of_g": lqg,
        "per_ball_ok": bool(per_ball.all()),
        "lp_chain_ok": bool(ks1 <= lpf * lqg * (1 + 1e-10) + 1e-300),
        "ks_holder_ok": bool(ks1 <= ksp * ksq),
        "worst_ball": worst,
    }


def inclusion_report(space: MetricMeasureSpace, family: BallFamily, f, p0: float, p1: float) -> dict:
    """Compare ``||f||_KS^p0`` and ``||f||_KS^p1`` for ``p0 <= p1 < inf``.

    ``monotone_ok`` (weights sum to one, power-mean inequality) is the
    provable statement.  ``mass_scaled_ok`` checks ``c0 ||f||_p0 <= c1 ||f||_p1``
    with ``c_i = (sum_r mu(B_r))^(-1/p_i)``; recorded only.
    """
    if not (1 <= p0 <= p1 < INF):
        raise BadExponent("need 1 <= p0 <= p1 < inf")
    n0 = ks_norm(space, family, f, p0)
    n1 = ks_norm(space, family, f, p1)
    total = math.fsum(family.ball_mass)
    c0 = total ** (-1.0 / p0)
    c1 = total ** (-1.0 / p1)
    return {
        "ks_p0": n0,
        "ks_p1": n1,
        "c0": c0,
        "c1": c1,
        "monotone_ok": bool(n0 <= n1 * (1 + 1e-10) + 1e-300),
        "mass_scaled_ok": bool(c0 * n0 <= c1 * n1),
    }
