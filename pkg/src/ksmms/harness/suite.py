"""Randomized property suite.

Each check is a pair of functions: ``make(rng, trial, cfg)`` builds a
JSON-serializable input document, and ``evaluate(inputs, cfg)`` turns it into
computed values, asserted flags and report-only measurements.  Because
evaluation only sees the document, any record can be replayed from its inputs
alone; failing records carry those inputs inline.

Every trial draws from its own generator, seeded by
``(root seed, crc32(check name), trial)``, so adding or resizing one check
never changes the inputs of another.
"""
from __future__ import annotations

import hashlib
import json
import math
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .. import io
from ..errors import KSError
from ..ksnorm import INF, embedding_constant, holder_report, ks_norm, lp_norm
from ..lipschitz import SolverOptions, ks1p_oracle, ks1p_seminorm, lip_constant, lip_membership_bound, minimizer_uniqueness_probe
from ..maximal import check_covering, distribution_function, greedy_5B, layer_cake, maximal_function, strong_type_report, weak_type_report, ws_maximal_report
from ..sobolev import GridSpec, euclid_embedding_report, grid_weak_derivative, poincare_report, wkp_norm, wsk2_inner, wskp_norm
from ..space import BallScheme, build_space, enumerate_balls, explicit_family
from . import generators

TOLERANCES = {
    "exact": 0.0,
    "identity": 1e-12,
    "norm": 1e-10,
    "solver_abs": 1e-4,
    "solver_rel": 1e-3,
    "oracle_abs": 1e-3,
    "oracle_rel": 1e-3,
    "uniqueness": 1e-4,
    "lipschitz_bound": 1e-6,
}
EXPONENTS = (1.0, 1.5, 2.0, 4.0, INF)


@dataclass(frozen=True)
class SuiteConfig:
    """Suite parameters.

    ``trials`` overrides the per-check trial counts by name; ``trial_scale``
    multiplies the defaults (``0`` gives an empty run).  ``sizes`` bounds the
    point count of the small random spaces used by the solver checks.
    """

    seed: int = 42
    trials: dict = field(default_factory=dict)
    trial_scale: float = 1.0
    sizes: tuple = (2, 8)
    exponents: tuple = EXPONENTS
    probability_mode: bool = True
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    solver_tolerance: float = 1e-6
    solver_max_iters: int = 50_000
    checks: tuple | None = None

    @property
    def solver(self) -> SolverOptions:
        return SolverOptions(tolerance=self.solver_tolerance, max_iters=self.solver_max_iters)

    def tol(self, name) -> float:
        return float(self.tolerances.get(name, TOLERANCES[name]))

    def n_trials(self, check: "Check") -> int:
        if check.name in self.trials:
            return int(self.trials[check.name])
        return int(math.ceil(check.default_trials * self.trial_scale))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "trials": dict(sorted(self.trials.items())),
            "trial_scale": self.trial_scale,
            "sizes": list(self.sizes),
            "exponents": [_enc_p(p) for p in self.exponents],
            "probability_mode": self.probability_mode,
            "tolerances": dict(sorted(self.tolerances.items())),
            "solver_tolerance": self.solver_tolerance,
            "solver_max_iters": self.solver_max_iters,
            "checks": None if self.checks is None else list(self.checks),
        }

    @classmethod
    def from_dict(cls, d) -> "SuiteConfig":
        return cls(
            seed=int(d["seed"]),
            trials=dict(d.get("trials", {})),
            trial_scale=float(d.get("trial_scale", 1.0)),
            sizes=tuple(d.get("sizes", (2, 8))),
            exponents=tuple(_dec_p(p) for p in d.get("exponents", [_enc_p(p) for p in EXPONENTS])),
            probability_mode=bool(d.get("probability_mode", True)),
            tolerances=dict(d.get("tolerances", TOLERANCES)),
            solver_tolerance=float(d.get("solver_tolerance", 1e-6)),
            solver_max_iters=int(d.get("solver_max_iters", 50_000)),
            checks=None if d.get("checks") is None else tuple(d["checks"]),
        )


@dataclass(frozen=True)
class Check:
    name: str
    criterion: int | None
    default_trials: int
    make: Callable
    evaluate: Callable
    summarize: Callable | None = None


# ---------------------------------------------------------------------------
# encoding helpers
# ---------------------------------------------------------------------------


def _enc_p(p):
    return "inf" if p == INF else float(p)


def _dec_p(p):
    return INF if p in ("inf", "Infinity") else float(p)


def _clean(v):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def digest(doc) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


_CACHE: dict = {}


def _cached(kind, doc, build):
    key = (kind, json.dumps(doc, sort_keys=True))
    if key not in _CACHE:
        if len(_CACHE) > 256:
            _CACHE.clear()
        _CACHE[key] = build(doc)
    return _CACHE[key]


def _space(inputs):
    return _cached("space", inputs["space"], io.space_from_dict)


def _family(inputs):
    sp = _space(inputs)
    fam = inputs["family"]

    def build(_):
        if fam["kind"] == "explicit":
            return explicit_family(sp, [tuple(b) for b in fam["balls"]], fam.get("weights"))
        return enumerate_balls(sp, BallScheme.from_dict(fam.get("scheme")))

    return _cached("family", {"space": inputs["space"], "family": fam}, build)


def _grid(inputs):
    return _cached("grid", inputs["grid"], GridSpec.from_dict)


def _grid_family(inputs):
    g = _grid(inputs)
    return _cached("grid_family", inputs["grid"], lambda _: enumerate_balls(g.space))


def _arr(x):
    return np.asarray(x, dtype=float)


def _rel_close(a, b, tol):
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300)


def _le(a, b, tol):
    return a <= b * (1.0 + tol) + 1e-300


# ---------------------------------------------------------------------------
# random inputs
# ---------------------------------------------------------------------------


def _random_space(rng, cfg, lo=None, hi=None, allow_zero_mass=True):
    lo = cfg.sizes[0] if lo is None else lo
    hi = cfg.sizes[1] if hi is None else hi
    n = int(rng.integers(lo, hi + 1))
    kind = rng.choice(["random-cloud", "random-cloud", "line-points", "grid-1d", "matrix"])
    if kind == "matrix":
        # l1 distances of a random cloud, stored as an explicit table
        pts = rng.uniform(0.0, 1.0, (n, 2))
        dist = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
        mass = rng.uniform(0.2, 1.0, n)
        sp = build_space([str(i) for i in range(n)], mass, dist=dist)
    else:
        sp = generators.gen_space(str(kind), n, rng, probability=False)
    doc = io.space_to_dict(sp)
    mass = np.array(doc["measure"])
    if allow_zero_mass and n > 2 and rng.random() < 0.15:
        mass[int(rng.integers(n))] = 0.0
    if cfg.probability_mode:
        mass = mass / math.fsum(mass)
    doc["measure"] = mass.tolist()
    return doc


def _random_family(rng):
    if rng.random() < 0.25:
        scheme = BallScheme(ratio=float(rng.uniform(0.3, 0.8)))
    elif rng.random() < 0.1:
        scheme = BallScheme(weight_rule="uniform")
    else:
        scheme = BallScheme()
    return {"kind": "enumerate", "scheme": scheme.to_dict()}


def _random_f(rng, n, nonneg=False):
    style = rng.integers(4)
    if style == 0:
        f = rng.uniform(-1.0, 1.0, n)
    elif style == 1:
        f = rng.normal(0.0, 3.0, n)
    elif style == 2:
        f = rng.integers(-2, 3, n).astype(float)
    else:
        f = np.where(rng.random(n) < 0.3, rng.uniform(-5.0, 5.0, n), 0.0)
    return np.abs(f) if nonneg else f


def _small_instance(rng, cfg, lo=None, hi=None):
    doc = _random_space(rng, cfg, lo, hi)
    n = len(doc["measure"])
    return {"space": doc, "family": _random_family(rng)}, n


CANONICAL_SPACE = {
    "format_version": 1,
    "points": [{"id": "a", "coords": [0.0]}, {"id": "b", "coords": [1.0]}],
    "metric": {"type": "euclidean"},
    "measure": [0.5, 0.5],
}
CANONICAL_FAMILY = {"kind": "explicit", "balls": [["a", 0.5], ["b", 0.5], ["a", 1.0]], "weights": [0.25, 0.25, 0.5]}


# ---------------------------------------------------------------------------
# checks: Kuelbs-Steadman norms
# ---------------------------------------------------------------------------


def _make_norm_axioms(rng, trial, cfg):
    inputs, n = _small_instance(rng, cfg, 1, 12)
    inputs.update(
        f=_random_f(rng, n).tolist(),
        g=_random_f(rng, n).tolist(),
        a=float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 10.0)),
        p=_enc_p(cfg.exponents[trial % len(cfg.exponents)]),
    )
    return inputs


def _eval_norm_axioms(inputs, cfg):
    sp, fam = _space(inputs), _family(inputs)
    f, g, a, p = _arr(inputs["f"]), _arr(inputs["g"]), inputs["a"], _dec_p(inputs["p"])
    tol = cfg.tol("norm")
    nf, ng = ks_norm(sp, fam, f, p), ks_norm(sp, fam, g, p)
    naf, nfg = ks_norm(sp, fam, a * f, p), ks_norm(sp, fam, f + g, p)
    visible = bool(np.any(f[sp.mass > 0] != 0))
    asserted = {
        "homogeneity": _rel_close(naf, abs(a) * nf, tol),
        "triangle": _le(nfg, nf + ng, tol),
    }
    if fam.covers_singletons and visible:
        asserted["definiteness"] = nf > 0
    return {"ks_f": nf, "ks_g": ng, "ks_af": naf, "ks_f_plus_g": nfg}, asserted, {}


def _make_monotone(rng, trial, cfg):
    inputs, n = _small_instance(rng, cfg, 1, 12)
    finite = sorted(p for p in cfg.exponents if p != INF)
    i, j = sorted(rng.integers(len(finite), size=2).tolist())
    inputs.update(f=_random_f(rng, n).tolist(), p0=finite[i], p1=finite[j])
    return inputs


def _eval_monotone(inputs, cfg):
    sp, fam = _space(inputs), _family(inputs)
    f = _arr(inputs["f"])
    n0 = ks_norm(sp, fam, f, inputs["p0"])
    n1 = ks_norm(sp, fam, f, inputs["p1"])
    return {"ks_p0": n0, "ks_p1": n1}, {"monotone": _le(n0, n1, cfg.tol("norm"))}, {}


def _make_embedding(rng, trial, cfg):
    inputs, n = _small_instance(rng, cfg, 1, 12)
    k = len(cfg.exponents)
    inputs.update(
        f=_random_f(rng, n).tolist(),
        p=_enc_p(cfg.exponents[trial % k]),
        q=_enc_p(cfg.exponents[(trial // k) % k]),
    )
    return inputs


def _eval_embedding(inputs, cfg):
    sp, fam = _space(inputs), _family(inputs)
    f, p, q = _arr(inputs["f"]), _dec_p(inputs["p"]), _dec_p(inputs["q"])
    c = embedding_constant(sp, fam, p, q)
    ks = ks_norm(sp, fam, f, p)
    lq = lp_norm(sp, f, q)
    asserted = {"embedding": _le(ks, c * lq, cfg.tol("norm"))}
    if cfg.probability_mode:
        asserted["constant_at_most_one"] = c <= 1.0 + cfg.tol("identity")
    return {"ks": ks, "lq": lq, "constant": c}, asserted, {}


def _make_holder(rng, trial, cfg):
    inputs, n = _small_instance(rng, cfg, 1, 12)
    inputs.update(f=_random_f(rng, n).tolist(), g=_random_f(rng, n).tolist(), p=(1.5, 2.0, 4.0)[trial % 3])
    return inputs


def _eval_holder(inputs, cfg):
    rep = holder_report(_space(inputs), _family(inputs), _arr(inputs["f"]), _arr(inputs["g"]), inputs["p"])
    values = {k: rep[k] for k in ("ks1_of_product", "ks_p_of_f", "ks_q_of_g", "lp_of_f", "lq_of_g")}
    return values, {"per_ball": rep["per_ball_ok"], "lp_chain": rep["lp_chain_ok"]}, {"ks_level_inequality": rep["ks_holder_ok"]}


def _summ_holder(records):
    flags = [r["report_only"]["ks_level_inequality"] for r in records if "ks_level_inequality" in r["report_only"]]
    return {"ks_level_inequality_rate": _rate(flags)}


def _make_holder_counterexample(rng, trial, cfg):
    return {"space": CANONICAL_SPACE, "family": CANONICAL_FAMILY, "f": [1.0, -1.0], "g": [1.0, -1.0], "p": 2.0}


def _eval_holder_counterexample(inputs, cfg):
    rep = holder_report(_space(inputs), _family(inputs), _arr(inputs["f"]), _arr(inputs["g"]), inputs["p"])
    prod = rep["ks_p_of_f"] * rep["ks_q_of_g"]
    tol = cfg.tol("identity")
    asserted = {
        "ks1_of_product_is_0.75": abs(rep["ks1_of_product"] - 0.75) <= tol,
        "product_of_norms_is_0.125": abs(prod - 0.125) <= tol,
        "counterexample_reproduced": not rep["ks_holder_ok"],
    }
    return {"ks1_of_product": rep["ks1_of_product"], "product_of_norms": prod}, asserted, {"ks_level_inequality": rep["ks_holder_ok"]}


# ---------------------------------------------------------------------------
# checks: semi-norm
# ---------------------------------------------------------------------------


def _solver_tol(cfg, ref):
    return max(cfg.tol("solver_abs"), cfg.tol("solver_rel") * abs(ref))


def _make_oracle(rng, trial, cfg):
    inputs, n = _small_instance(rng, cfg, 2, 3)
    inputs.update(f=_random_f(rng, n).tolist(), p=_enc_p(cfg.exponents[trial % len(cfg.exponents)]))
    return inputs


def _eval_oracle(inputs, cfg):
    sp, fam = _space(inputs), _family(inputs)
    f, p = _arr(inputs["f"]), _dec_p(inputs["p"])
    s = ks1p_seminorm(sp, fam, f, p, cfg.solver).value
    o = ks1p_oracle(sp, fam, f, p)
    ok = abs(s - o) <= max(cfg.tol("oracle_abs"), cfg.tol("oracle_rel") * o)
    return {"solver": s, "oracle": o, "difference": s - o}, {"agreement": ok}, {}


def _make_worked(rng, trial, cfg):
    return {"space": CANONICAL_SPACE, "family": CANONICAL_FAMILY, "f": [0.0, 1.0], "p": 2.0}


def _eval_worked(inputs, cfg):
    res = ks1p_seminorm(_space(inputs), _family(inputs), _arr(inputs["f"]), inputs["p"], cfg.solver)
    target = math.sqrt(5.0 / 32.0)
    return (
        {"value": res.value, "target": target, "witness": res.witness.values},
        {"value_matches": abs(res.value - target) <= cfg.tol("oracle_abs")},
        {},
    )


def _make_invariance(rng, trial, cfg):
    inputs, n = _small_instance(rng, cfg)
    inputs.update(
        f=_random_f(rng, n).tolist(),
        c=float(rng.uniform(-10.0, 10.0)),
        a=float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 10.0)),
        p=_enc_p(cfg.exponents[trial % len(cfg.exponents)]),
    )
    return inputs


def _eval_invariance(inputs, cfg):
    sp, fam = _space(inputs), _family(inputs)
    f, c, a, p = _arr(inputs["f"]), inputs["c"], inputs["a"], _dec_p(inputs["p"])
    s = ks1p_seminorm(sp, fam, f, p, cfg.solver).value
    s_shift = ks1p_seminorm(sp, fam, f + c, p, cfg.solver).value
    s_scale = ks1p_seminorm(sp, fam, a * f, p, cfg.solver).value
    asserted = {
        "shift_invariance": abs(s_shift - s) <= _solver_tol(cfg, s),
        "homogeneity": abs(s_scale - abs(a) * s) <= _solver_tol(cfg, abs(a) * s),
    }
    if not np.any(f[sp.mass > 0] != f[sp.mass > 0][0]) if np.any(sp.mass > 0) else True:
        asserted["constant_vanishes"] = s == 0.0
    return {"seminorm": s, "shifted": s_shift, "scaled": s_scale}, asserted, {}


def _make_lip_bound(rng, trial, cfg):
    inputs, n = _small_instance(rng, cfg)
    sp = io.space_from_dict(inputs["space"])
    L = float(rng.uniform(0.1, 5.0))
    inputs.update(f=generators.gen_function("random-lipschitz", sp, rng, L=L).tolist(), L=L, p=_enc_p(cfg.exponents[trial % len(cfg.exponents)]))
    return inputs


def _eval_lip_bound(inputs, cfg):
    sp, fam = _space(inputs), _family(inputs)
    f, p = _arr(inputs["f"]), _dec_p(inputs["p"])
    rep = lip_membership_bound(sp, fam, f, p, replace(cfg.solver, tolerance=cfg.tol("lipschitz_bound")))
    asserted = {"bound": rep["ok"], "lipschitz_constant": lip_constant(sp, f) <= inputs["L"]}
    return {"seminorm": rep["seminorm"], "bound": rep["bound"], "slack": rep["slack"]}, asserted, {}


def _make_uniqueness(rng, trial, cfg):
    inputs, n = _small_instance(rng, cfg)
    inputs.update(f=_random_f(rng, n).tolist(), p=(1.5, 2.0, 4.0)[trial % 3], restarts=5, seed=int(rng.integers(2**31)))
    return inputs


def _eval_uniqueness(inputs, cfg):
    sp, fam = _space(inputs), _family(inputs)
    opts = replace(cfg.solver, seed=inputs["seed"])
    rep = minimizer_uniqueness_probe(sp, fam, _arr(inputs["f"]), inputs["p"], inputs["restarts"], opts)
    spread = rep["max_pairwise_witness_distance"]
    asserted = {}
    if rep["uniqueness_claimed"]:
        asserted["spread"] = spread <= cfg.tol("uniqueness")
    return {"spread": spread, "covers_singletons": rep["uniqueness_claimed"]}, asserted, {}


# ---------------------------------------------------------------------------
# checks: Poincare and maximal operator
# ---------------------------------------------------------------------------


def _make_poincare(rng, trial, cfg):
    inputs, n = _small_instance(rng, cfg)
    inputs.update(f=_random_f(rng, n).tolist(), p=(1.5, 2.0, 4.0)[trial % 3])
    return inputs


def _eval_poincare(inputs, cfg):
    rep = poincare_report(_space(inputs), _family(inputs), _arr(inputs["f"]), inputs["p"], cfg.solver)
    values = {k: rep[k] for k in ("lhs", "seminorm", "derived_constant", "two_diameter_constant")}
    return values, {"derived_constant": rep["ok_derived"]}, {"two_diameter_ok": rep["ok_two_diameter"]}


def _summ_poincare(records):
    return {"two_diameter_constant_rate": _rate([r["report_only"].get("two_diameter_ok") for r in records])}


def _make_layer_cake(rng, trial, cfg):
    doc = _random_space(rng, cfg, 1, 30)
    n = len(doc["measure"])
    f = np.abs(_random_f(rng, n, nonneg=True))
    if rng.random() < 0.3:
        f = np.round(f, 1)
    degree = int(rng.integers(0, 4))
    return {"space": doc, "f": f.tolist(), "psi": rng.uniform(-2.0, 3.0, degree + 1).tolist()}


def _eval_layer_cake(inputs, cfg):
    rep = layer_cake(_space(inputs), _arr(inputs["f"]), inputs["psi"])
    return {"lhs": rep["lhs"], "rhs": rep["rhs"], "abs_diff": rep["abs_diff"]}, {"equality": rep["ok"]}, {}


def _make_covering(rng, trial, cfg):
    doc = _random_space(rng, cfg, 3, 40, allow_zero_mass=False)
    sp = io.space_from_dict(doc)
    k = int(rng.integers(1, 16))
    diam = float(sp.dist.max()) if sp.n > 1 else 1.0
    centers = rng.integers(sp.n, size=k)
    radii = rng.uniform(0.0, 0.5 * diam, k)
    if rng.random() < 0.3:
        radii = np.round(radii / diam * 4) * diam / 4  # force ties
    balls = [[sp.point_ids[int(c)], float(r)] for c, r in zip(centers, radii)]
    return {"space": doc, "balls": balls}


def _eval_covering(inputs, cfg):
    sp = _space(inputs)
    balls = [tuple(b) for b in inputs["balls"]]
    sel = greedy_5B(sp, balls)
    rep = check_covering(sp, balls, sel)
    return {"selected": list(sel.selected)}, {"disjoint": rep["disjoint"], "radius_condition": rep["radius_ok"], "five_fold_cover": rep["covered"]}, {}


_WEAK_GRIDS = ((1, 64), (1, 256), (2, 8), (2, 16))


def _grid_doc(dim, n):
    return GridSpec(dim, n).to_dict()


def _nonneg_f(rng, n):
    style = rng.integers(3)
    if style == 0:
        return rng.uniform(0.0, 1.0, n)
    if style == 1:
        return np.where(rng.random(n) < 0.05, rng.uniform(0.0, 10.0, n), 0.0)
    return rng.exponential(1.0, n) ** 3


def _make_weak(rng, trial, cfg):
    dim, n = _WEAK_GRIDS[trial % len(_WEAK_GRIDS)]
    g = GridSpec(dim, n)
    f = _nonneg_f(rng, g.n_nodes)
    if not f.any():
        f[0] = 1.0
    return {"grid": g.to_dict(), "f": f.tolist()}


def _eval_weak(inputs, cfg):
    g = _grid(inputs)
    sp = g.space
    f = _arr(inputs["f"])
    rep = weak_type_report(sp, f, family=_grid_family(inputs))
    mf = maximal_function(sp, f)
    l1 = lp_norm(sp, f, 1)
    at_breaks = max((t * distribution_function(sp, mf, t) for t in np.unique(mf) if t > 0), default=0.0) / l1
    values = {"sup_ratio": rep["sup_ratio"], "ratio_at_breakpoints": at_breaks, "C_bound": rep["C_bound"], "doubling_constant": rep["doubling_constant"]}
    return values, {"weak_type": rep["ok"]}, {"ks1_ratio": rep.get("ks1_ratio")}


def _summ_weak(records):
    return {
        "sup_ratio": _dist([r["values"].get("sup_ratio") for r in records]),
        "ks1_ratio": _dist([r["report_only"].get("ks1_ratio") for r in records]),
    }


_STRONG_GRIDS = ((1, 32), (1, 64), (2, 8))


def _make_strong(rng, trial, cfg):
    # grid and exponent cycle independently so every pairing occurs
    dim, n = _STRONG_GRIDS[(trial // 3) % len(_STRONG_GRIDS)]
    g = GridSpec(dim, n)
    f = _nonneg_f(rng, g.n_nodes)
    if not f.any():
        f[0] = 1.0
    return {"grid": g.to_dict(), "f": f.tolist(), "p": (1.5, 2.0, 4.0)[trial % 3]}


def _eval_strong(inputs, cfg):
    rep = strong_type_report(_grid(inputs).space, _grid_family(inputs), _arr(inputs["f"]), inputs["p"])
    values = {k: rep[k] for k in ("lp_ratio", "ks_of_mf", "lp_of_mf", "lp_of_f", "embedding_constant", "C_p")}
    return values, {"lp_chain": rep["lp_chain_ok"]}, {"ks_ratio": rep["ks_ratio"]}


def _summ_strong(records):
    return {"ks_ratio": _dist([r["report_only"].get("ks_ratio") for r in records])}


def _make_ws_maximal(rng, trial, cfg):
    inputs, n = _small_instance(rng, cfg, 2, 6)
    inputs.update(f=_random_f(rng, n, nonneg=True).tolist(), p=(1.5, 2.0, 4.0)[trial % 3])
    return inputs


def _eval_ws_maximal(inputs, cfg):
    rep = ws_maximal_report(_space(inputs), _family(inputs), _arr(inputs["f"]), inputs["p"], cfg.solver)
    return {k: rep[k] for k in ("f_ks", "f_seminorm", "mf_ks", "mf_seminorm")}, {}, {"ws_ratio": rep["ws_ratio"]}


def _summ_ws(records):
    return {"ws_ratio": _dist([r["report_only"].get("ws_ratio") for r in records])}


# ---------------------------------------------------------------------------
# checks: Euclidean grids
# ---------------------------------------------------------------------------


def _make_derivatives(rng, trial, cfg):
    return {
        "cases": [
            {"dim": 1, "n": 17, "a": float(rng.uniform(-3, 3)), "b": float(rng.uniform(-3, 3))},
            {"dim": 2, "n": 9, "a": float(rng.uniform(-3, 3)), "b": float(rng.uniform(-3, 3))},
        ]
    }


def _eval_derivatives(inputs, cfg):
    tol = cfg.tol("identity")
    errs = {}
    c1, c2 = inputs["cases"]
    g1 = GridSpec(1, c1["n"])
    x = g1.nodes[:, 0]
    a, b = c1["a"], c1["b"]
    errs["affine_first"] = np.abs(grid_weak_derivative(g1, a * x + b, (1,)) - a).max()
    errs["affine_second"] = np.abs(grid_weak_derivative(g1, a * x + b, (2,))).max()
    errs["quadratic_first"] = np.abs(grid_weak_derivative(g1, x**2, (1,)) - 2 * x).max()
    errs["quadratic_second"] = np.abs(grid_weak_derivative(g1, x**2, (2,)) - 2.0).max()
    g2 = GridSpec(2, c2["n"])
    X, Y = g2.nodes[:, 0], g2.nodes[:, 1]
    a, b = c2["a"], c2["b"]
    f = a * X + b * Y + X * Y
    errs["plane_x"] = np.abs(grid_weak_derivative(g2, f, (1, 0)) - (a + Y)).max()
    errs["plane_y"] = np.abs(grid_weak_derivative(g2, f, (0, 1)) - (b + X)).max()
    errs["mixed"] = np.abs(grid_weak_derivative(g2, f, (1, 1)) - 1.0).max()
    # the two axis orders of a mixed derivative
    fx = np.gradient(f.reshape(g2.shape), g2.h, axis=0, edge_order=2)
    fyx = np.gradient(np.gradient(f.reshape(g2.shape), g2.h, axis=1, edge_order=2), g2.h, axis=0, edge_order=2)
    errs["axis_order"] = np.abs(np.gradient(fx, g2.h, axis=1, edge_order=2) - fyx).max()
    errs = {k: float(v) for k, v in errs.items()}
    return errs, {k: v <= tol for k, v in errs.items()}, {}


_EUCLID_N = 32


def _make_euclid(rng, trial, cfg):
    a = rng.uniform(0.5, 3.0, 2)
    ph = rng.uniform(0.0, 2.0, 2)
    c = rng.uniform(-1.0, 1.0, 3)
    expr = f"{c[0]:.6f} + {c[1]:.6f}*x1^2 + {c[2]:.6f}*x1*x2 + sin({a[0]:.6f}*x1 + {ph[0]:.6f})*cos({a[1]:.6f}*x2 + {ph[1]:.6f})"
    return {
        "grid": _grid_doc(2, _EUCLID_N),
        "expression": expr,
        "k": trial % 3,
        "q": (1.5, 2.0, 4.0, "inf")[trial % 4],
        "g_expression": f"exp({c[0]:.6f}*x1) - x2^2",
    }


def _eval_euclid(inputs, cfg):
    g = _grid(inputs)
    fam = _grid_family(inputs)
    f = generators.expr.evaluate(inputs["expression"], g.nodes)
    h = generators.expr.evaluate(inputs["g_expression"], g.nodes)
    k, q = inputs["k"], _dec_p(inputs["q"])
    rep = euclid_embedding_report(g, fam, f, k, q)
    inner_ff = wsk2_inner(g, fam, f, f, k)
    ws2 = wskp_norm(g, fam, f, k, 2.0)
    tol = cfg.tol("identity")
    asserted = {
        "embedding": rep["ok"],
        "inner_matches_norm": _rel_close(inner_ff, ws2**2, tol),
        "inner_symmetric": _rel_close(wsk2_inner(g, fam, f, h, k), wsk2_inner(g, fam, h, f, k), tol),
    }
    if k > 0:
        asserted["monotone_in_k"] = _le(wskp_norm(g, fam, f, k - 1, q), rep["ws_norm"], cfg.tol("norm"))
    values = {"ws_norm": rep["ws_norm"], "w_norm": rep["w_norm"], "inner": inner_ff, "ws2_squared": ws2**2}
    return values, asserted, {"measure": rep["measure"]}


# ---------------------------------------------------------------------------
# registry and runner
# ---------------------------------------------------------------------------


def _rate(flags):
    flags = [bool(f) for f in flags if f is not None]
    return None if not flags else sum(flags) / len(flags)


def _dist(values):
    v = np.array([x for x in values if isinstance(x, (int, float))], dtype=float)
    if v.size == 0:
        return None
    return {"count": int(v.size), "min": float(v.min()), "median": float(np.median(v)), "max": float(v.max())}


CHECKS = (
    Check("norm_axioms", 1, 500, _make_norm_axioms, _eval_norm_axioms),
    Check("ks_monotonicity", 2, 200, _make_monotone, _eval_monotone),
    Check("embedding", 3, 200, _make_embedding, _eval_embedding),
    Check("holder", 4, 200, _make_holder, _eval_holder, _summ_holder),
    Check("holder_counterexample", 4, 1, _make_holder_counterexample, _eval_holder_counterexample),
    Check("seminorm_oracle", 5, 50, _make_oracle, _eval_oracle),
    Check("seminorm_worked_example", 5, 1, _make_worked, _eval_worked),
    Check("seminorm_invariance", 6, 100, _make_invariance, _eval_invariance),
    Check("lipschitz_bound", 6, 100, _make_lip_bound, _eval_lip_bound),
    Check("uniqueness", 7, 60, _make_uniqueness, _eval_uniqueness),
    Check("poincare", 8, 200, _make_poincare, _eval_poincare, _summ_poincare),
    Check("layer_cake", 9, 100, _make_layer_cake, _eval_layer_cake),
    Check("covering", 10, 100, _make_covering, _eval_covering),
    Check("weak_type", 11, 100, _make_weak, _eval_weak, _summ_weak),
    Check("strong_type", 12, 100, _make_strong, _eval_strong, _summ_strong),
    Check("ws_maximal", 12, 50, _make_ws_maximal, _eval_ws_maximal, _summ_ws),
    Check("derivative_exactness", 13, 1, _make_derivatives, _eval_derivatives),
    Check("euclid_embedding", 13, 50, _make_euclid, _eval_euclid),
)
CHECKS_BY_NAME = {c.name: c for c in CHECKS}


def trial_rng(seed: int, name: str, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode()), int(trial)]))


def make_inputs(check: Check, cfg: SuiteConfig, trial: int) -> dict:
    return _clean(check.make(trial_rng(cfg.seed, check.name, trial), trial, cfg))


def evaluate(check: Check, cfg: SuiteConfig, trial: int, inputs: dict) -> dict:
    """Run one trial and build its record (failures become data)."""
    record = {
        "id": f"{check.name}/{trial:04d}",
        "check": check.name,
        "criterion": check.criterion,
        "trial": trial,
        "inputs_digest": digest(inputs),
    }
    try:
        values, asserted, report_only = check.evaluate(inputs, cfg)
        error = None
    except (KSError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        values, asserted, report_only = {}, {"completed": False}, {}
        error = f"{type(e).__name__}: {e}"
    asserted = {k: bool(v) for k, v in asserted.items()}
    record.update(values=_clean(values), asserted=asserted, report_only=_clean(report_only))
    record["passed"] = all(asserted.values())
    if error is not None:
        record["error"] = error
    if not record["passed"]:
        record["reproducer"] = inputs
    return record


def selected_checks(cfg: SuiteConfig):
    names = sorted(CHECKS_BY_NAME) if cfg.checks is None else sorted(cfg.checks)
    for n in names:
        if n not in CHECKS_BY_NAME:
            raise ValueError(f"unknown check {n!r}")
    return [CHECKS_BY_NAME[n] for n in names]


def run_suite(cfg: SuiteConfig | None = None, progress: Callable | None = None) -> dict:
    """Run every selected check; the returned report is plain JSON data."""
    cfg = cfg or SuiteConfig()
    records = []
    checks = {}
    measurements = {}
    for check in selected_checks(cfg):
        recs = []
        for t in range(cfg.n_trials(check)):
            recs.append(evaluate(check, cfg, t, make_inputs(check, cfg, t)))
        if progress is not None:
            progress(check.name, recs)
        failed = sum(not r["passed"] for r in recs)
        checks[check.name] = {
            "criterion": check.criterion,
            "trials": len(recs),
            "passed": len(recs) - failed,
            "failed": failed,
            "ok": failed == 0,
        }
        if check.summarize is not None and recs:
            measurements[check.name] = _clean(check.summarize(recs))
        records.extend(recs)
    criteria = {}
    for name, c in checks.items():
        key = str(c["criterion"])
        criteria[key] = criteria.get(key, True) and c["ok"]
    failed = [r["id"] for r in records if not r["passed"]]
    summary = {
        "total": len(records),
        "passed": len(records) - len(failed),
        "failed": len(failed),
        "ok": not failed,
        "checks": checks,
        "criteria": dict(sorted(criteria.items(), key=lambda kv: int(kv[0]))),
        "counterexamples": failed,
        "measurements": measurements,
        "notes": {"euclidean_measure": "grid node measure substitutes for the Lebesgue measure on grids"},
    }
    return {"format_version": 1, "config": cfg.to_dict(), "summary": summary, "records": records}


def find_record(report: dict, record_id: str) -> dict:
    for r in report["records"]:
        if r["id"] == record_id:
            return r
    raise KeyError(f"no record {record_id!r} in report")


def replay(report: dict, record_id: str) -> dict:
    """Re-run one record, from its inline reproducer when present."""
    cfg = SuiteConfig.from_dict(report["config"])
    old = find_record(report, record_id)
    check = CHECKS_BY_NAME[old["check"]]
    inputs = old.get("reproducer") or make_inputs(check, cfg, old["trial"])
    new = evaluate(check, cfg, old["trial"], inputs)
    new["digest_matches"] = new["inputs_digest"] == old["inputs_digest"]
    return new
