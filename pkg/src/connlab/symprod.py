"""Flow-composition estimators for the Lie bracket and the symmetric product.

Every estimator evaluates a word of flows W(t) with W(0) known and reports
the symmetric second difference

    D(t) = scale * (W(t) + W(-t) - 2 W(0)) / t^2

together with an optional Richardson combination (4 D(t/2) - D(t)) / 3.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .flows import (DEFAULT, IntegratorConfig, Transporter, flow, geodesic_curve,
                    horizontal_flow, integral_curve, vertical_flow)
from .geometry import (Connection, TangentPoint, VectorField, covariant_derivative,
                       lie_bracket, symmetric_product, torsion_free_part)


class Kind(str, Enum):
    U1 = "U1"
    U2 = "U2"
    U3 = "U3"
    U4 = "U4"
    U3Z = "U3Z"
    U4Z = "U4Z"


ALL_KINDS = tuple(Kind)


@dataclass(frozen=True)
class EstimatorReport:
    estimate: np.ndarray
    base_drift: np.ndarray
    reference: np.ndarray
    abs_error: float
    rel_error: float
    step: float
    richardson: bool
    raw_estimate: np.ndarray
    first_derivative: float
    label: str = ""

    def as_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, np.ndarray):
                d[k] = v.tolist()
        return d


def _report(label, raw, est, drift, ref, step, richardson, first) -> EstimatorReport:
    ref = np.asarray(ref, dtype=float)
    err = float(np.linalg.norm(est - ref))
    return EstimatorReport(
        estimate=np.asarray(est), base_drift=np.asarray(drift), reference=ref,
        abs_error=err, rel_error=err / max(1.0, float(np.linalg.norm(ref))),
        step=step, richardson=richardson, raw_estimate=np.asarray(raw),
        first_derivative=float(first), label=label)


def _second_difference(word: Callable[[float], np.ndarray], y0: np.ndarray,
                       t: float, scale: float):
    wp, wm = word(t), word(-t)
    second = scale * (wp + wm - 2 * y0) / t ** 2
    first = float(np.linalg.norm(wp - wm)) / (2 * t)
    return second, first


def _estimate(label, word, y0, t, scale, reference, richardson, n_fiber):
    """Second-difference estimate; the last ``n_fiber`` entries are the estimate,
    the leading ones (if any) are reported as base drift."""
    d1, first = _second_difference(word, y0, t, scale)
    if richardson:
        d2, _ = _second_difference(word, y0, t / 2, scale)
        d = (4 * d2 - d1) / 3
    else:
        d = d1
    split = len(y0) - n_fiber
    return _report(label, d1[split:], d[split:], d[:split], reference, t,
                   richardson, first)


def _tm_word(fn: Callable[[float], TangentPoint]) -> Callable[[float], np.ndarray]:
    return lambda s: fn(s).as_array()


# ---------------------------------------------------------------------------
# The six curves


def upsilon(kind: Kind | str, c: Connection, X1: VectorField, X2: VectorField,
            v: TangentPoint, t: float, cfg: IntegratorConfig = DEFAULT) -> TangentPoint:
    """Evaluate one of the eight-leg flow words at parameter t.

    Legs are applied right to left as written:
        V2(-t) H1(-t) V2(t) H1(t) V1(-t) H2(-t) V1(t) H2(t) (v)
    where Vi is the flow of Xi^V and Hi is, depending on the kind, the flow of
    the horizontal lift (U1 with c, U2 with its torsion-free part) or
    transport along the integral curve eta_i (U3, U4) or along the geodesic
    gamma_i with initial velocity Xi(x) (U3Z, U4Z).
    """
    kind = Kind(kind)
    if t == 0:
        return v
    conn = c if kind in (Kind.U1, Kind.U3, Kind.U3Z) else torsion_free_part(c)

    if kind in (Kind.U1, Kind.U2):
        def horiz(field, w, s):
            return horizontal_flow(conn, field, w, s, cfg)

        def pair(first: VectorField, second: VectorField, w: TangentPoint):
            # second^V(-t) first^H(-t) second^V(t) first^H(t)
            w = horiz(first, w, t)
            w = vertical_flow(second, w, t)
            w = horiz(first, w, -t)
            return vertical_flow(second, w, -t)
    else:
        x = v.base
        lo, hi = (0.0, t) if t > 0 else (t, 0.0)
        transporters = {}
        for idx, field in ((1, X1), (2, X2)):
            if kind in (Kind.U3, Kind.U4):
                curve = integral_curve(field, x, lo, hi, cfg)
            else:
                # c and its torsion-free part share geodesics
                curve = geodesic_curve(c, TangentPoint(x, field(x)), lo, hi, cfg)
            transporters[idx] = Transporter(conn, curve)

        def pair(first: VectorField, second: VectorField, w: TangentPoint):
            tr = transporters[1 if first is X1 else 2]
            end, _ = tr.curve.at(t)
            fib = tr.transport(w.fiber, 0.0, t)
            fib = fib + t * second(end)
            fib = tr.transport(fib, t, 0.0)
            base = tr.curve.at(0.0)[0]
            return vertical_flow(second, TangentPoint(base, fib), -t)

    w = pair(X2, X1, v)
    return pair(X1, X2, w)


def second_derivative_estimate(kind: Kind | str, c: Connection, X1: VectorField,
                               X2: VectorField, v: TangentPoint, t: float = 1e-2,
                               cfg: IntegratorConfig = DEFAULT,
                               richardson: bool = True) -> EstimatorReport:
    kind = Kind(kind)
    ref = symmetric_product(c, X1, X2)(v.base)
    word = _tm_word(lambda s: upsilon(kind, c, X1, X2, v, s, cfg))
    return _estimate(kind.value, word, v.as_array(), t, 0.5, ref, richardson, v.dim)


def corollary_closed_form(c: Connection, X1: VectorField, X2: VectorField, x,
                          t: float, cfg: IntegratorConfig = DEFAULT) -> TangentPoint:
    """t(tau_eta2^{(0,t)} X1(eta2(t)) - X1(x) + tau_eta1^{(0,t)} X2(eta1(t)) - X2(x)) at x."""
    x = np.asarray(x, dtype=float)
    if t == 0:
        return TangentPoint(x, np.zeros_like(x))
    lo, hi = (0.0, t) if t > 0 else (t, 0.0)
    total = np.zeros_like(x)
    for along, carried in ((X2, X1), (X1, X2)):
        tr = Transporter(c, integral_curve(along, x, lo, hi, cfg))
        end, _ = tr.curve.at(t)
        total += tr.transport(carried(end), t, 0.0) - carried(x)
    return TangentPoint(x, t * total)


# ---------------------------------------------------------------------------
# Lie bracket and the horizontal/vertical bracket


def lie_bracket_word(X: VectorField, Y: VectorField, x, t: float,
                     cfg: IntegratorConfig = DEFAULT) -> np.ndarray:
    """Phi^Y_{-t} Phi^X_{-t} Phi^Y_t Phi^X_t (x)."""
    y = flow(X, x, t, cfg)
    y = flow(Y, y, t, cfg)
    y = flow(X, y, -t, cfg)
    return flow(Y, y, -t, cfg)


def lie_bracket_flow_estimate(X: VectorField, Y: VectorField, x, t: float = 1e-2,
                              cfg: IntegratorConfig = DEFAULT,
                              richardson: bool = True) -> EstimatorReport:
    x = np.asarray(x, dtype=float)
    ref = lie_bracket(X, Y)(x)
    return _estimate("lie-bracket", lambda s: lie_bracket_word(X, Y, x, s, cfg),
                     x, t, 0.5, ref, richardson, X.dim)


def crampin_word(c: Connection, X: VectorField, Y: VectorField, v: TangentPoint,
                 t: float, cfg: IntegratorConfig = DEFAULT) -> TangentPoint:
    """Phi^{X^H}_{-t} Phi^{Y^V}_{-t} Phi^{X^H}_t Phi^{Y^V}_t (v)."""
    w = vertical_flow(Y, v, t)
    w = horizontal_flow(c, X, w, t, cfg)
    w = vertical_flow(Y, w, -t)
    return horizontal_flow(c, X, w, -t, cfg)


def crampin_closed_form(c: Connection, X: VectorField, Y: VectorField, v: TangentPoint,
                        t: float, cfg: IntegratorConfig = DEFAULT) -> TangentPoint:
    """v - t (tau_eta^{(0,t)} Y(eta(t)) - Y(x)) with eta the integral curve of X."""
    if t == 0:
        return v
    x = v.base
    lo, hi = (0.0, t) if t > 0 else (t, 0.0)
    tr = Transporter(c, integral_curve(X, x, lo, hi, cfg))
    end, _ = tr.curve.at(t)
    return TangentPoint(x, v.fiber - t * (tr.transport(Y(end), t, 0.0) - Y(x)))


def crampin_check(c: Connection, X: VectorField, Y: VectorField, v: TangentPoint,
                  t: float = 1e-2, cfg: IntegratorConfig = DEFAULT,
                  richardson: bool = True) -> EstimatorReport:
    """Estimate [X^H, Y^V](v) = -1/2 d^2/dt^2 of the crampin word; reference nabla_X Y(x)."""
    ref = covariant_derivative(c, X, Y)(v.base)
    word = _tm_word(lambda s: crampin_word(c, X, Y, v, s, cfg))
    return _estimate("crampin", word, v.as_array(), t, -0.5, ref, richardson, v.dim)


def convergence_ratios(errors) -> list[float | None]:
    """err[i] / err[i+1] for consecutive entries of a halving ladder."""
    out = []
    for a, b in zip(errors[:-1], errors[1:]):
        out.append(a / b if b > 0 else None)
    return out
