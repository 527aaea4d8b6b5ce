"""Report builders behind the command line: verification suites, estimator
tables and convergence ladders.  Everything returns plain dicts/lists with a
fixed key order so the output is reproducible byte for byte."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import bch, invariance, ttm
from .config import ConfigError, ProblemConfig, random_polynomial_field
from .flows import (DEFAULT, IntegratorConfig, Transporter, flow_group_property_check,
                    geodesic_curve, horizontal_flow)
from .flows import covariant_derivative_via_transport, transport_difference_check
from .geometry import (Connection, GeometryError, TangentPoint, VectorField,
                       covariant_derivative)
from .symprod import (Kind, corollary_closed_form, crampin_check, crampin_closed_form,
                      crampin_word, lie_bracket_flow_estimate, second_derivative_estimate,
                      upsilon)

IDENTITY_TOL = 1e-10
SUITES = ("lemmas", "bch", "transport")


class _Check:
    """Running maximum of one residual over the random draws."""

    def __init__(self, suite: str, name: str, tolerance: float, lower: float | None = None):
        self.suite, self.name = suite, name
        self.tolerance, self.lower = tolerance, lower
        self.worst = 0.0 if lower is None else math.inf
        self.draws = 0
        self.error = None

    def add(self, value: float) -> None:
        self.draws += 1
        if self.lower is None:
            self.worst = max(self.worst, value)
        else:
            # two-sided check: keep the value farthest outside [lower, tolerance]
            if math.isinf(self.worst) or _outside(value, self) > _outside(self.worst, self):
                self.worst = value

    def run(self, fn: Callable[[], float]) -> None:
        try:
            self.add(float(fn()))
        except GeometryError as exc:
            self.error = self.error or f"{type(exc).__name__}: {exc}"

    @property
    def passed(self) -> bool:
        if self.error is not None or self.draws == 0:
            return False
        if self.lower is None:
            return self.worst <= self.tolerance
        return self.lower <= self.worst <= self.tolerance

    def as_dict(self) -> dict:
        return {"suite": self.suite, "check": self.name, "draws": self.draws,
                "worst": None if math.isinf(self.worst) else self.worst,
                "bound": ([self.lower, self.tolerance] if self.lower is not None
                          else self.tolerance),
                "passed": self.passed, "error": self.error}


def _outside(v: float, chk: _Check) -> float:
    return max(chk.lower - v, v - chk.tolerance, 0.0)


def _draw_point(rng, box) -> np.ndarray:
    return rng.uniform(box[:, 0], box[:, 1])


def _draw_vec(rng, n: int, scale: float = 1.0) -> np.ndarray:
    return rng.uniform(-scale, scale, n)


# ---------------------------------------------------------------------------
# Verification suites


def lemma_suite(c: Connection, box, rng, draws: int, tol: float = IDENTITY_TOL) -> list[_Check]:
    n = c.dim
    S = "lemmas"
    checks = {k: _Check(S, k, tol) for k in (
        "interchange", "scaling-commute", "complete-lift-involution",
        "involution-projections", "vertical-involution", "bracket-vertical",
        "torsion-lemma", "xc-xh-decomposition", "nested-bracket")}
    for _ in range(draws):
        x = _draw_point(rng, box)
        a1, a2, b1, b2 = (_draw_vec(rng, n) for _ in range(4))
        cs = [_draw_vec(rng, n) for _ in range(4)]
        v, u, z = (_draw_vec(rng, n) for _ in range(3))
        s1, s2 = rng.uniform(-2, 2, 2)
        X = random_polynomial_field(c.domain, rng)
        Y = random_polynomial_field(c.domain, rng)
        w = ttm.TTMPoint(x, a1, b1, cs[0])
        vx = TangentPoint(x, v)

        checks["interchange"].run(lambda: ttm.interchange_check(x, a1, a2, b1, b2, cs))
        checks["scaling-commute"].run(lambda: ttm.scaling_commute_check(s1, s2, w))
        checks["complete-lift-involution"].run(
            lambda: ttm.complete_lift_involution_check(X, vx))
        iw = ttm.involution(w)
        checks["involution-projections"].run(lambda: float(
            np.linalg.norm(ttm.project_primary(iw).as_array()
                           - ttm.project_secondary(w).as_array())
            + np.linalg.norm(ttm.project_secondary(iw).as_array()
                             - ttm.project_primary(w).as_array())
            + ttm.distance(ttm.involution(iw), w)))
        checks["vertical-involution"].run(lambda: ttm.vertical_involution_check(w, z))
        checks["bracket-vertical"].run(lambda: ttm.bracket_vertical_check(X, Y, x))
        checks["torsion-lemma"].run(lambda: ttm.torsion_lemma_check(c, vx, u))
        checks["xc-xh-decomposition"].run(lambda: ttm.xc_xh_identity_check(c, X, vx))
        checks["nested-bracket"].run(lambda: invariance.xvzyv_identity_check(c, X, Y, vx))
    return list(checks.values())


def eight_flow_terms(c: Connection, X1: VectorField, X2: VectorField, t: float):
    """The lifted 8-flow word of the symmetric-product curve, first flow first."""
    H1, H2 = (ttm.horizontal_lift_field(c, X) for X in (X1, X2))
    V1, V2 = (ttm.vertical_lift_field(X) for X in (X1, X2))
    W = bch.WeightedField
    return [W(t, H2), W(t, V1), W(-t, H2), W(-t, V1),
            W(t, H1), W(t, V2), W(-t, H1), W(-t, V2)]


def bch_suite(c: Connection, box, rng, draws: int, cfg: IntegratorConfig = DEFAULT,
              t: float = 0.05) -> list[_Check]:
    n = c.dim
    S = "bch"
    single = _Check(S, "single-field", 1e-9)
    antisym = _Check(S, "bch2-antisymmetry", 1e-12)
    vanish = _Check(S, "bch1-vanishes-on-lifted-word", 1e-10)
    order = _Check(S, "cubic-order-ratio", 10.0, lower=6.0)
    W = bch.WeightedField
    for _ in range(draws):
        x = _draw_point(rng, box)
        X = random_polynomial_field(c.domain, rng)
        Y = random_polynomial_field(c.domain, rng)
        single.run(lambda: bch.asymptotic_check([W(1.0, X)], x, t, cfg))
        antisym.run(lambda: float(np.linalg.norm(
            bch.bch2([W(t, X), W(t, Y)])(x) + bch.bch2([W(t, Y), W(t, X)])(x))))
        vx = np.concatenate([x, _draw_vec(rng, n)])
        vanish.run(lambda: float(np.linalg.norm(bch.bch1(eight_flow_terms(c, X, Y, t))(vx))))

        def ratio():
            terms = [W(1.0, X), W(1.0, Y)]
            return (bch.asymptotic_check(terms, x, t, cfg)
                    / bch.asymptotic_check(terms, x, t / 2, cfg))
        order.run(ratio)
    return [single, antisym, vanish, order]


def transport_suite(c: Connection, box, rng, draws: int,
                    cfg: IntegratorConfig = DEFAULT) -> list[_Check]:
    n = c.dim
    S = "transport"
    torsion_free = c.is_symmetric()
    diff = _Check(S, "transport-difference", 1e-8 if torsion_free else 1e-5)
    roundtrip = _Check(S, "transport-round-trip", 1e-7)
    velocity = _Check(S, "geodesic-velocity-parallel", 1e-7)
    hroundtrip = _Check(S, "horizontal-flow-round-trip", 1e-7)
    group = _Check(S, "flow-group-property", 1e-7)
    covar = _Check(S, "covariant-derivative-via-transport", 1e-6)
    crampin_cf = _Check(S, "crampin-closed-form", 1e-8)
    crampin_est = _Check(S, "crampin-estimate-rel-error", 1e-3)
    corollary = _Check(S, "corollary-closed-form", 1e-8)
    for _ in range(draws):
        x = _draw_point(rng, box)
        v0 = TangentPoint(x, _draw_vec(rng, n))
        V = _draw_vec(rng, n)
        t = float(rng.uniform(0.05, 0.5))
        X = random_polynomial_field(c.domain, rng)
        Y = random_polynomial_field(c.domain, rng)
        diff.run(lambda: transport_difference_check(c, v0, V, t, cfg))

        def transport_checks():
            curve = geodesic_curve(c, v0, 0.0, t, cfg)
            tr = Transporter(c, curve)
            back = tr.transport(tr.transport(V, 0.0, t), t, 0.0)
            roundtrip.add(float(np.linalg.norm(back - V)))
            vel = tr.transport(v0.fiber, 0.0, t) - curve.at(t)[1]
            return float(np.linalg.norm(vel))
        velocity.run(transport_checks)

        def hflow():
            w = horizontal_flow(c, X, horizontal_flow(c, X, v0, t, cfg), -t, cfg)
            return float(np.linalg.norm(w.as_array() - v0.as_array()))
        hroundtrip.run(hflow)
        s = float(rng.uniform(-0.5, 0.5))
        group.run(lambda: flow_group_property_check(X, x, s, t, cfg))
        covar.run(lambda: float(np.linalg.norm(
            covariant_derivative_via_transport(c, X, Y, x, 1e-3, cfg)
            - covariant_derivative(c, X, Y)(x))))
        tc = 0.1
        crampin_cf.run(lambda: float(np.linalg.norm(
            crampin_word(c, X, Y, v0, tc, cfg).as_array()
            - crampin_closed_form(c, X, Y, v0, tc, cfg).as_array())))
        crampin_est.run(lambda: crampin_check(c, X, Y, v0, 1e-2, cfg).rel_error)
        corollary.run(lambda: float(np.linalg.norm(
            upsilon(Kind.U3, c, X, Y, v0, tc, cfg).fiber
            - v0.fiber - corollary_closed_form(c, X, Y, x, tc, cfg).fiber)))
    return [diff, roundtrip, velocity, hroundtrip, group, covar, crampin_cf, crampin_est,
            corollary]


def verify_report(cfg: ProblemConfig, suite: str, seed: int,
                  connection: str | None = None, tolerance: float | None = None) -> dict:
    suites = SUITES if suite == "all" else (suite,)
    results = []
    names = [connection] if connection else list(cfg.connections)
    for name in names:
        cname, c = cfg.connection(name)
        box = cfg.box(c)
        for s in suites:
            rng = np.random.default_rng([seed, SUITES.index(s)])
            if s == "lemmas":
                checks = lemma_suite(c, box, rng, cfg.draws, tolerance or IDENTITY_TOL)
            elif s == "bch":
                checks = bch_suite(c, box, rng, cfg.draws, cfg.integrator)
            else:
                checks = transport_suite(c, box, rng, cfg.draws, cfg.integrator)
            for chk in checks:
                results.append({"connection": cname, **chk.as_dict()})
    return {"command": "verify", "suite": suite, "seed": seed,
            "passed": all(r["passed"] for r in results), "checks": results}


# ---------------------------------------------------------------------------
# Symmetric product tables


def _pair_and_point(cfg: ProblemConfig, c: Connection, fields, point):
    pair = fields or cfg.pair
    if pair is None:
        raise ConfigError("no vector-field pair given (estimator.pair or --fields)")
    if len(pair) != 2:
        raise ConfigError("exactly two field names are needed")
    X1, X2 = (cfg.field(name, c) for name in pair)
    pt = point or cfg.point
    if pt is None:
        raise ConfigError("no tangent point given (estimator.point or --point)")
    try:
        v = TangentPoint(pt[0], pt[1])
    except (TypeError, ValueError, GeometryError, IndexError) as exc:
        raise ConfigError(f"bad point: {exc}") from None
    if v.dim != c.dim:
        raise ConfigError(f"point has dimension {v.dim}, connection {c.dim}")
    return tuple(pair), X1, X2, v


def symprod_report(cfg: ProblemConfig, seed: int, fields=None, point=None, kinds=None,
                   connection: str | None = None, tolerance: float = 1e-3) -> dict:
    cname, c = cfg.connection(connection)
    pair, X1, X2, v = _pair_and_point(cfg, c, fields, point)
    kinds = tuple(Kind(k) for k in kinds) if kinds else cfg.kinds
    t = cfg.t
    rows = []
    for kind in kinds:
        rep = second_derivative_estimate(kind, c, X1, X2, v, t, cfg.integrator, cfg.richardson)
        raw = [second_derivative_estimate(kind, c, X1, X2, v, s, cfg.integrator, False).abs_error
               for s in (t, t / 2, t / 4)]
        ratios = [a / b if b > 0 else None for a, b in zip(raw[:-1], raw[1:])]
        rows.append({
            "kind": kind.value,
            "estimate": rep.estimate.tolist(),
            "reference": rep.reference.tolist(),
            "abs_error": rep.abs_error,
            "rel_error": rep.rel_error,
            "base_drift": float(np.linalg.norm(rep.base_drift)),
            "first_derivative": rep.first_derivative,
            "ratio_t_t2": ratios[0],
            "ratio_t2_t4": ratios[1],
            "passed": rep.rel_error <= tolerance,
        })
    return {"command": "symprod", "connection": cname, "fields": list(pair),
            "point": [v.base.tolist(), v.fiber.tolist()], "t": t,
            "richardson": cfg.richardson, "tolerance": tolerance, "seed": seed,
            "passed": all(r["passed"] for r in rows), "rows": rows}


# ---------------------------------------------------------------------------
# Convergence ladders

TARGETS = ("lie-bracket", "crampin", "bch", "covariant-transport") + tuple(k.value for k in Kind)
EXPECTED_ORDER = {"bch": 3.0}


def _error_fn(target: str, cfg: ProblemConfig, c: Connection, X1, X2, v: TangentPoint):
    """Returns (err(t, richardson) -> (error, scale of the sampled word))."""
    icfg = cfg.integrator
    if target == "lie-bracket":
        return lambda t, r: (lie_bracket_flow_estimate(X1, X2, v.base, t, icfg, r).abs_error,
                             float(np.linalg.norm(v.base)))
    if target == "crampin":
        return lambda t, r: (crampin_check(c, X1, X2, v, t, icfg, r).abs_error,
                             float(np.linalg.norm(v.as_array())))
    if target == "bch":
        W = bch.WeightedField
        terms = [W(1.0, X1), W(1.0, X2)]
        return lambda t, r: (None if r else bch.asymptotic_check(terms, v.base, t, icfg),
                             float(np.linalg.norm(v.base)))
    if target == "covariant-transport":
        ref = covariant_derivative(c, X1, X2)(v.base)

        def cov(t, r):
            if r:
                return None, 0.0
            est = covariant_derivative_via_transport(c, X1, X2, v.base, t, icfg)
            return float(np.linalg.norm(est - ref)), float(np.linalg.norm(X2(v.base)))
        return cov
    kind = Kind(target)
    return lambda t, r: (second_derivative_estimate(kind, c, X1, X2, v, t, icfg, r).abs_error,
                         float(np.linalg.norm(v.as_array())))


def noise_floor(t: float, scale: float) -> float:
    """Round-off level of a second difference of a word of size ``scale``."""
    return 1e3 * np.finfo(float).eps * max(1.0, scale) / t ** 2


def fit_order(ts, errs, floors) -> float | None:
    pts = [(math.log(t), math.log(e)) for t, e, f in zip(ts, errs, floors)
           if e is not None and e > f]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def convergence_report(cfg: ProblemConfig, seed: int, target: str | None = None,
                       fields=None, point=None, connection: str | None = None,
                       levels: int | None = None, t0: float | None = None) -> dict:
    target = target or cfg.target
    if target not in TARGETS:
        raise ConfigError(f"unknown target {target!r}; known: {', '.join(TARGETS)}")
    cname, c = cfg.connection(connection)
    pair, X1, X2, v = _pair_and_point(cfg, c, fields, point)
    levels = cfg.levels if levels is None else levels
    t0 = cfg.t0 if t0 is None else t0
    if levels < 1:
        raise ConfigError("levels must be >= 1")
    err = _error_fn(target, cfg, c, X1, X2, v)
    rows = []
    for i in range(levels):
        t = t0 / 2 ** i
        e, scale = err(t, False)
        er, _ = err(t, True)
        rows.append({"t": t, "abs_error": e, "ratio": None,
                     "richardson_error": er, "richardson_ratio": None,
                     "noise_floor": noise_floor(t, scale)})
    for prev, row in zip(rows[:-1], rows[1:]):
        for key, rk in (("abs_error", "ratio"), ("richardson_error", "richardson_ratio")):
            if prev[key] is not None and row[key]:
                row[rk] = prev[key] / row[key]
    ts = [r["t"] for r in rows]
    floors = [r["noise_floor"] for r in rows]
    order = fit_order(ts, [r["abs_error"] for r in rows], floors)
    rorder = fit_order(ts, [r["richardson_error"] for r in rows], floors)
    expected = EXPECTED_ORDER.get(target, 2.0)
    if order is None:
        status = None
    else:
        ok = abs(order - expected) <= 0.3
        if rorder is not None:
            ok = ok and rorder >= 3.5
        status = ok
    return {"command": "convergence", "target": target, "connection": cname,
            "fields": list(pair), "point": [v.base.tolist(), v.fiber.tolist()],
            "seed": seed, "expected_order": expected, "fitted_order": order,
            "richardson_order": rorder, "passed": status, "rows": rows}


# ---------------------------------------------------------------------------
# Invariance


def invariance_report(cfg: ProblemConfig, seed: int, connection: str | None = None,
                      distribution: str | None = None, threshold: float | None = None) -> dict:
    cname, c = cfg.connection(connection)
    names = [distribution] if distribution else list(cfg.distributions)
    if not names:
        raise ConfigError("config declares no distributions")
    threshold = cfg.threshold if threshold is None else threshold
    rows = []
    for dname in names:
        D = cfg.distribution(dname, c)
        probes = invariance.make_probes(cfg.box(c), len(D.generators), cfg.probe_random, seed)
        verdict = invariance.theorem_equivalence_harness(c, D, probes, cfg.horizon,
                                                         cfg.integrator, threshold)
        rows.append({"connection": cname, "distribution": dname, **verdict.as_dict()})
    return _invariance_summary(rows, seed, threshold)


def catalog_invariance_report(seed: int, threshold: float = 1e-5, horizon: float = 0.5,
                              random_count: int = 20,
                              cfg: IntegratorConfig = DEFAULT) -> dict:
    from .catalog import invariance_cases
    rows = []
    for case in invariance_cases():
        D = invariance.Distribution(case.generators, name=case.name)
        probes = invariance.make_probes(case.probe_box, len(case.generators),
                                        random_count, seed)
        verdict = invariance.theorem_equivalence_harness(case.connection, D, probes,
                                                         horizon, cfg, threshold)
        row = {"connection": case.connection.name, "distribution": case.name,
               **verdict.as_dict()}
        row["expected"] = case.invariant
        rows.append(row)
    return _invariance_summary(rows, seed, threshold)


def _invariance_summary(rows, seed, threshold) -> dict:
    if any(r["indeterminate"] for r in rows):
        status = None
    else:
        status = all(r["agree"] for r in rows)
        status = status and all(r.get("expected", r["geodesic_invariant"])
                                == r["geodesic_invariant"] for r in rows)
    return {"command": "invariance", "seed": seed, "threshold": threshold,
            "passed": status, "rows": rows}
