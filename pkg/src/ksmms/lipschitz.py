"""Lipschitz constants, slopes and the Lipschitz-type Kuelbs-Steadman semi-norm.

The semi-norm of ``f`` is the smallest ``||g||_KS^p`` over nonnegative
witnesses ``g`` satisfying ``|f(x) - f(y)| <= d(x, y) (g(x) + g(y))`` for
every pair of points of positive mass.  On a finite space this is the convex
program

    minimize    ||A g||_{tau, p}
    subject to  g(x) + g(y) >= c_xy = |f(x) - f(y)| / d(x, y),   g >= 0,

where row ``r`` of ``A`` is ``chi_r * mu``.  :func:`ks1p_seminorm` solves it
with a proximal augmented Lagrangian whose subproblems are handled by
semismooth Newton; :func:`ks1p_oracle` is an independent
grid search used to certify the solver on tiny instances.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, sparse

from .errors import BadExponent, SolverFailure, TooLarge
from .ksnorm import INF, ks_norm
from .space import BallFamily, MetricMeasureSpace


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-6
    max_iters: int = 50_000
    restarts: int = 0
    seed: int = 0


@dataclass(frozen=True, eq=False)
class GradientWitness:
    values: np.ndarray
    feasibility_residual: float


@dataclass(frozen=True, eq=False)
class SeminormResult:
    value: float
    witness: GradientWitness
    diagnostics: dict = field(default_factory=dict)


def lip_constant(space: MetricMeasureSpace, f) -> float:
    """Least Lipschitz constant ``max |f(x) - f(y)| / d(x, y)`` over pairs."""
    if space.n < 2:
        return 0.0
    f = np.asarray(f, dtype=float)
    i, j = np.triu_indices(space.n, 1)
    return float(np.max(np.abs(f[i] - f[j]) / space.dist[i, j]))


def slope(space: MetricMeasureSpace, f, x, h: float) -> float:
    """Discrete slope at ``x``: largest difference quotient within distance ``h``."""
    if not h > 0:
        raise ValueError("neighborhood radius must be positive")
    f = np.asarray(f, dtype=float)
    xi = x if isinstance(x, (int, np.integer)) else space.index_of(x)
    d = space.dist[xi]
    near = (d <= h) & (d > 0)
    if not near.any():
        return 0.0
    return float(np.max(np.abs(f[near] - f[xi]) / d[near]))


def _pair_ratios(space, f):
    n = space.n
    if n < 2:
        return np.zeros((n, n))
    f = np.asarray(f, dtype=float)
    q = np.abs(f[:, None] - f[None, :])
    np.fill_diagonal(q, 0.0)
    d = space.dist + np.eye(n)
    return q / d


def feasible_envelope(space: MetricMeasureSpace, f) -> GradientWitness:
    """``g(x) = max_y |f(x) - f(y)| / d(x, y)``; always a feasible witness."""
    ratios = _pair_ratios(space, f)
    g = ratios.max(axis=1) if space.n > 1 else np.zeros(space.n)
    return GradientWitness(g, feasibility_residual(space, f, g))


def feasibility_residual(space: MetricMeasureSpace, f, g) -> float:
    """``max (|f(x) - f(y)| - d(x, y)(g(x) + g(y)))_+`` over positive-mass pairs."""
    active = np.flatnonzero(space.mass > 0)
    if len(active) < 2:
        return 0.0
    f = np.asarray(f, dtype=float)[active]
    g = np.asarray(g, dtype=float)[active]
    i, j = np.triu_indices(len(active), 1)
    d = space.dist[active[i], active[j]]
    gap = np.abs(f[i] - f[j]) - d * (g[i] + g[j])
    return float(max(0.0, gap.max()))


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


class _Problem:
    """Scaled program over the positive-mass points.

    Pair constraints with ``c_xy = 0`` are implied by ``g >= 0`` and dropped;
    ratios are divided by their maximum so that ``c`` lies in ``(0, 1]``.
    The objective is nondecreasing in every coordinate, so some minimizer lies
    in ``[0, 1]^m``.  All constraints, ``g >= 0`` included, are stacked into
    one sparse system ``C z >= h``.  For ``p = inf`` the variable gains an
    epigraph coordinate ``t`` with ``t >= (A g)_r / a_max``.
    """

    def __init__(self, space, family, f, p):
        if not p >= 1:
            raise BadExponent(f"exponent must be >= 1, got {p!r}")
        self.p = p
        self.n = space.n
        self.active = np.flatnonzero(space.mass > 0)
        m = len(self.active)
        self.m = m
        f = np.asarray(f, dtype=float)
        fa = f[self.active]
        i, j = np.triu_indices(m, 1)
        c = np.abs(fa[i] - fa[j]) / space.dist[self.active[i], self.active[j]] if m > 1 else np.zeros(0)
        keep = c > 0
        self.I, self.J, c = i[keep], j[keep], c[keep]
        self.scale = float(c.max()) if len(c) else 0.0
        self.c = c / self.scale if self.scale > 0 else c

        sub = family.membership[:, self.active]
        A = sub.multiply(space.mass[self.active][None, :]).tocsr()
        rows = np.flatnonzero(np.diff(A.indptr) > 0)
        A = A[rows]
        self.tau = np.asarray(family.weights)[rows]
        self.A = A.toarray() if A.shape[0] * A.shape[1] <= 4_000_000 else A
        self.AT = self.A.T
        self.w = self.AT @ self.tau
        self.epi = p == INF
        self.dim = m + 1 if self.epi else m
        self.amax = float(np.asarray(A.sum(axis=1)).max()) if A.shape[0] else 1.0

        npair = len(self.I)
        pr = np.arange(npair)
        blocks = [
            sparse.csr_matrix(
                (np.ones(2 * npair), (np.concatenate([pr, pr]), np.concatenate([self.I, self.J]))),
                shape=(npair, self.dim),
            ),
            sparse.eye(m, self.dim, format="csr"),
        ]
        h = [self.c, np.zeros(m)]
        if self.epi:
            blocks.append(sparse.hstack([-A / self.amax, np.ones((A.shape[0], 1))]).tocsr())
            h.append(np.zeros(A.shape[0]))
        self.C = sparse.vstack(blocks).tocsr()
        self.CT = self.C.T.tocsr()
        self.h = np.concatenate(h)
        self.oscale = 1.0

    def normalize_objective(self, z):
        """Rescale the objective so its gradient at ``z`` has unit sup norm."""
        self.oscale = 1.0
        s = float(np.abs(self.gradient(z)).max())
        if s > 0:
            self.oscale = s

    def objective(self, z):
        if self.epi:
            return float(z[-1])
        return self.witness_norm(z) / self.oscale

    def gradient(self, z):
        if self.epi:
            g = np.zeros(self.dim)
            g[-1] = 1.0
            return g
        if self.p == 1:
            return self.w / self.oscale
        u = self.A @ z
        F = _wlp(u, self.tau, self.p)
        if F == 0.0:
            return np.zeros(self.dim)
        return self.AT @ (self.tau * np.sign(u) * np.abs(u / F) ** (self.p - 1.0)) / self.oscale

    def hessian(self, z):
        if self.epi or self.p == 1:
            return np.zeros((self.dim, self.dim))
        u = self.A @ z
        F = _wlp(u, self.tau, self.p)
        if F == 0.0:
            return np.zeros((self.dim, self.dim))
        a = np.abs(u) / F
        d = (self.p - 1.0) / F * self.tau * np.maximum(a, 1e-12) ** (self.p - 2.0)
        v = self.AT @ (self.tau * np.sign(u) * a ** (self.p - 1.0))
        H = self.AT @ (self.A * d[:, None]) if isinstance(self.A, np.ndarray) else (self.AT @ sparse.diags(d) @ self.A).toarray()
        H -= ((self.p - 1.0) / F) * np.outer(v, v)
        return H / self.oscale

    def witness_norm(self, g):
        """``||A g||_{tau, p}`` in scaled units (``g`` may carry the epigraph slot)."""
        u = self.A @ g[: self.m]
        if self.p == INF:
            return float(u.max()) if u.size else 0.0
        if self.p == 1:
            return float(np.dot(self.tau, u))
        return _wlp(u, self.tau, self.p)

    def minorant(self, z, lam):
        """Vector ``l`` with ``l . g <= objective(g)`` for every ``g >= 0``.

        For finite ``p`` the gradient at any point works (convex and
        positively homogeneous); for ``p = inf`` a multiplier-weighted average
        of the ball rows stays below their maximum.
        """
        if self.epi:
            nu = lam[len(self.I) + self.m:]
            tot = nu.sum()
            if tot <= 0:
                return np.zeros(self.m)
            return (self.AT @ nu) / (self.amax * tot)
        return self.gradient(np.maximum(z[: self.m], 0.0))

    def dual_bound(self, z, lam):
        """Lower bound on the optimal objective from pair multipliers.

        With ``v = K^T lam_pairs`` and ``s_i = min(1, l_i / v_i)``, shrinking
        each pair multiplier by ``min(s_I, s_J)`` gives ``K^T lam' <= l``, so
        ``lam'`` is dual feasible and ``c . lam'`` bounds the minimum.
        """
        lp = lam[: len(self.I)]
        v = np.bincount(self.I, lp, self.m) + np.bincount(self.J, lp, self.m)
        l = self.minorant(z, lam)
        s = np.ones(self.m)
        pos = v > 0
        s[pos] = np.clip(l[pos] / v[pos], 0.0, 1.0)
        return float(np.dot(self.c, lp * np.minimum(s[self.I], s[self.J])))

    def value(self, g):
        """Objective of a witness in the same units as :meth:`objective`."""
        if self.epi:
            return self.witness_norm(g) / self.amax
        return self.witness_norm(g) / self.oscale

    def repair(self, g):
        """Raise ``g`` until every pair constraint holds (two passes absorb rounding)."""
        g = np.maximum(np.asarray(g, dtype=float), 0.0)
        for _ in range(2):
            deficit = self.c - (g[self.I] + g[self.J])
            bad = deficit > 0
            if not bad.any():
                break
            bump = np.zeros(self.m)
            np.maximum.at(bump, self.I[bad], 0.5 * deficit[bad])
            np.maximum.at(bump, self.J[bad], 0.5 * deficit[bad])
            g = g + bump
        return g

    def lift(self, g):
        z = np.zeros(self.dim)
        z[: self.m] = g
        if self.epi:
            z[-1] = self.value(g)
        return z


def _wlp(u, tau, p):
    s = float(np.abs(u).max()) if u.size else 0.0
    if s == 0.0:
        return 0.0
    return s * float(np.dot(tau, (np.abs(u) / s) ** p)) ** (1.0 / p)


def _newton(prob, z, lam, rho, sigma, eps, budget):
    """Semismooth Newton on the proximal augmented Lagrangian centred at ``z``.

    Returns ``(z, multipliers, newton_steps, gradient_sup_norm)``.
    """
    center = z.copy()

    def phi(v):
        mu = np.maximum(0.0, lam - rho * (prob.C @ v - prob.h))
        dv = v - center
        val = prob.objective(v) + (np.dot(mu, mu) - np.dot(lam, lam)) / (2.0 * rho) + np.dot(dv, dv) / (2.0 * sigma)
        return val, mu

    val, mu = phi(z)
    it = 0
    gn = math.inf
    eye = np.eye(prob.dim) / sigma
    while True:
        grad = prob.gradient(z) - prob.CT @ mu + (z - center) / sigma
        gn = float(np.abs(grad).max())
        if gn <= eps or it >= budget:
            break
        it += 1
        CA = prob.C[mu > 0]
        H = prob.hessian(z) + rho * (CA.T @ CA).toarray() + eye
        try:
            d = linalg.cho_solve(linalg.cho_factor(H), -grad)
        except linalg.LinAlgError:
            d = np.linalg.lstsq(H, -grad, rcond=None)[0]
        slope = float(np.dot(grad, d))
        if slope >= 0:
            d, slope = -grad, -float(np.dot(grad, grad))
        step = 1.0
        while True:
            nval, nmu = phi(z + step * d)
            if nval <= val + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-12:
                return z, mu, it, gn
        z = z + step * d
        val, mu = nval, nmu
    return z, mu, it, gn


_MAX_OUTER = 100
_MAX_NEWTON = 100
_ABS_FLOOR = 1e-9


def _solve_from(prob, g0, opts):
    """Proximal augmented Lagrangian from a feasible start ``g0`` (scaled units).

    Stops once the repaired witness is within relative ``opts.tolerance`` of
    the dual bound from :meth:`_Problem.dual_bound`, up to an absolute floor of
    ``1e-9`` times the starting value.
    """
    tol = opts.tolerance
    best_g = prob.repair(g0)
    z = prob.lift(best_g)
    if not prob.epi:
        prob.normalize_objective(z)
    best = prob.value(best_g)
    # values far below the start's norm drown in rounding of the constraints
    floor = _ABS_FLOOR * best
    lam = np.zeros(len(prob.h))
    rho, sigma, eps = 10.0, 10.0, 1e-2
    used = 0
    prev_viol = math.inf
    converged = False
    gap = math.inf
    lower = 0.0
    outer = 0
    while used < opts.max_iters and outer < _MAX_OUTER:
        outer += 1
        z, lam, it, gn = _newton(prob, z, lam, rho, sigma, eps, min(_MAX_NEWTON, opts.max_iters - used))
        used += max(it, 1)
        r = prob.C @ z - prob.h
        viol = float(max(0.0, -r.min()))

        g = prob.repair(z[: prob.m])
        val = prob.value(g)
        if val < best:
            best, best_g = val, g

        lower = max(lower, prob.dual_bound(z, lam))
        gap = max(0.0, best - lower)
        if gap <= tol * best + floor:
            converged = True
            break
        if viol > 0.25 * prev_viol:
            rho = min(rho * 10.0, 1e5)
        prev_viol = viol
        sigma = min(sigma * 10.0, 1e6)
        eps_min = 0.1 * tol * best / (prob.dim * (1.0 + float(np.abs(z).max())))
        eps = max(min(0.1 * eps, 0.1 * gap / prob.dim), eps_min, 1e-15)
    info = {"converged": converged, "iterations": used, "outer": outer, "rho": rho, "relative_gap": gap / best if best > 0 else 0.0}
    return best_g, prob.witness_norm(best_g), info


def _unscale(prob, g_scaled):
    g = np.zeros(prob.n)
    g[prob.active] = g_scaled * prob.scale
    return g


def _starts(prob, opts, space, f):
    env = feasible_envelope(space, f).values[prob.active] / prob.scale
    starts = [("envelope", env), ("constant", np.full(prob.m, 0.5))]
    rng = np.random.default_rng(opts.seed)
    for k in range(opts.restarts):
        starts.append((f"random{k}", prob.repair(rng.uniform(0.0, 1.0, prob.m))))
    return starts


def ks1p_seminorm(space: MetricMeasureSpace, family: BallFamily, f, p: float, opts: SolverOptions | None = None) -> SeminormResult:
    """Lipschitz-type Kuelbs-Steadman semi-norm ``inf ||g||_KS^p``.

    Runs the solver from the envelope witness, the constant witness
    ``Lip(f)/2`` and ``opts.restarts`` random feasible starts, and returns
    the smallest feasible value found.  Witness values at zero-mass points
    are zero (those points carry no constraint).

    Raises
    ------
    SolverFailure
        When no start converged within ``opts.max_iters``; the best feasible
        result is attached as ``best``.
    """
    opts = opts or SolverOptions()
    prob = _Problem(space, family, f, p)
    if prob.scale == 0.0:
        g = np.zeros(space.n)
        return SeminormResult(0.0, GradientWitness(g, 0.0), {"converged": True, "iterations": 0, "starts": 0})

    best = None
    diags = []
    for name, g0 in _starts(prob, opts, space, f):
        g, val, info = _solve_from(prob, g0, opts)
        info["start"] = name
        diags.append(info)
        if best is None or val < best[1]:
            best = (g, val)
    g = _unscale(prob, best[0])
    value = ks_norm(space, family, g, p)
    res = SeminormResult(
        value,
        GradientWitness(g, feasibility_residual(space, f, g)),
        {
            "converged": any(d["converged"] for d in diags),
            "iterations": sum(d["iterations"] for d in diags),
            "starts": len(diags),
            "runs": diags,
        },
    )
    if not res.diagnostics["converged"]:
        raise SolverFailure(f"no start converged within {opts.max_iters} iterations", best=res)
    return res


def solve_from_start(space, family, f, p, g0, opts: SolverOptions | None = None) -> SeminormResult:
    """Single solver run from a given witness (repaired to feasibility first)."""
    opts = opts or SolverOptions()
    prob = _Problem(space, family, f, p)
    if prob.scale == 0.0:
        g = np.zeros(space.n)
        return SeminormResult(0.0, GradientWitness(g, 0.0), {"converged": True})
    g0 = np.asarray(g0, dtype=float)[prob.active] / prob.scale
    g, _, info = _solve_from(prob, g0, opts)
    g = _unscale(prob, g)
    return SeminormResult(ks_norm(space, family, g, p), GradientWitness(g, feasibility_residual(space, f, g)), info)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


def _batch_ks(ints, tau, p):
    a = np.abs(ints)
    if p == INF:
        return a.max(axis=1)
    s = a.max(axis=1)
    safe = np.where(s > 0, s, 1.0)
    return s * ((a / safe[:, None]) ** p @ tau) ** (1.0 / p)


def ks1p_oracle(space: MetricMeasureSpace, family: BallFamily, f, p: float, step: float = 1e-3, refine: int = 2) -> float:
    """Grid-search value of the semi-norm for spaces of at most three points.

    All but the last positive-mass coordinate are scanned over
    ``[0, 2 Lip(f)]`` with spacing ``step * 2 Lip(f)``; the last one is set to
    the smallest value satisfying its constraints, which is optimal because
    the objective is nondecreasing in every coordinate.  The scan is then
    repeated ``refine`` times on a ten-times finer grid around the incumbent.
    """
    if space.n > 3:
        raise TooLarge(f"oracle handles at most 3 points, got {space.n}")
    f = np.asarray(f, dtype=float)
    active = np.flatnonzero(space.mass > 0)
    m = len(active)
    L = lip_constant(space, f)
    if m < 2 or L == 0.0:
        return 0.0
    A = (family.membership.toarray() * space.mass[None, :])[:, active]
    tau = np.asarray(family.weights)
    fa = f[active]
    d = space.dist[np.ix_(active, active)]
    last = m - 1
    c_last = np.array([abs(fa[last] - fa[k]) / d[last, k] for k in range(last)])
    c_free = abs(fa[0] - fa[1]) / d[0, 1] if last == 2 else 0.0

    def evaluate(free):
        # free: (N, m-1) points over the leading coordinates
        g_last = np.maximum(0.0, (c_last[None, :] - free).max(axis=1))
        vals = _batch_ks(np.column_stack([free, g_last]) @ A.T, tau, p)
        if last == 2:
            vals[free[:, 0] + free[:, 1] < c_free] = np.inf
        k = int(np.argmin(vals))
        return float(vals[k]), free[k]

    lo = np.zeros(last)
    hi = np.full(last, 2.0 * L)
    h = step * 2.0 * L
    best_val, best_pt = math.inf, None
    for _ in range(refine + 1):
        axes = [np.arange(lo[k], hi[k] + 0.5 * h, h) for k in range(last)]
        if last == 1:
            val, pt = evaluate(axes[0][:, None])
        else:
            val, pt = math.inf, None
            rows = max(1, 2_000_000 // len(axes[1]))
            for s in range(0, len(axes[0]), rows):
                x0, x1 = np.meshgrid(axes[0][s : s + rows], axes[1], indexing="ij")
                v, q = evaluate(np.column_stack([x0.ravel(), x1.ravel()]))
                if v < val:
                    val, pt = v, q
        if val < best_val:
            best_val, best_pt = val, pt
        lo = np.maximum(best_pt - h, 0.0)
        hi = best_pt + h
        h /= 10.0
    return best_val


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def lip_membership_bound(space: MetricMeasureSpace, family: BallFamily, f, p: float, opts: SolverOptions | None = None) -> dict:
    """Check ``||f||_KS^{1,p} <= (Lip(f)/2) ||1||_KS^p``.

    The constant witness ``Lip(f)/2`` is feasible, hence the bound.
    """
    opts = opts or SolverOptions()
    L = lip_constant(space, f)
    bound = 0.5 * L * ks_norm(space, family, np.ones(space.n), p)
    semi = ks1p_seminorm(space, family, f, p, opts).value
    return {
        "seminorm": semi,
        "bound": bound,
        "slack": bound - semi,
        "ok": bool(semi <= bound * (1.0 + opts.tolerance) + 1e-300),
    }


def minimizer_uniqueness_probe(space: MetricMeasureSpace, family: BallFamily, f, p: float, n_restarts: int = 5, opts: SolverOptions | None = None) -> dict:
    """Spread of solver witnesses from independent random feasible starts.

    The spread is the largest pairwise sup-distance between witnesses,
    measured on positive-mass points only (zero-mass coordinates do not enter
    any ball integral).  Uniqueness is claimed only for ``1 < p < inf`` on
    families covering every singleton.

    Near a smooth minimum the witness error scales like the square root of
    the objective gap, so the runs use a relative tolerance of at most
    ``1e-10``.
    """
    opts = opts or SolverOptions()
    opts = replace(opts, tolerance=min(opts.tolerance, 1e-10))
    rng = np.random.default_rng(opts.seed)
    env = feasible_envelope(space, f).values
    active = space.mass > 0
    witnesses = []
    for _ in range(n_restarts):
        g0 = env * rng.uniform(0.0, 2.0, space.n)
        res = solve_from_start(space, family, f, p, g0, opts)
        witnesses.append(res.witness.values[active])
    spread = 0.0
    for a, b in itertools.combinations(witnesses, 2):
        spread = max(spread, float(np.abs(a - b).max()))
    return {
        "max_pairwise_witness_distance": spread,
        "uniqueness_claimed": bool(1 < p < INF and family.covers_singletons),
        "restarts": n_restarts,
    }
