"""Coordinate calculus on TM and TTM.

A point of TTM is stored as ``(x, a, b, c)``: it is the tangent vector with
components ``(b, c)`` at the point ``(x, a)`` of TM.  Hence

    tau_TM(w)   = (x, a)      (primary projection)
    T tau_M(w)  = (x, b)      (secondary projection)

``+1`` adds ``(b, c)`` over a common ``(x, a)``; ``+2`` adds ``(a, c)`` over a
common ``(x, b)``; the canonical involution swaps ``a`` and ``b``.

Lifted vector fields on TM are symbolic fields on the 2n-dimensional chart
with coordinates ``(x1..xn, x(n+1)..x(2n)) = (x, v)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import ScalarExpr, constant, variable
from .geometry import (ChartDomain, Connection, DimensionMismatch, TangentPoint,
                       VectorField, covariant_derivative_at, lie_bracket, torsion_at)

ANCHOR_TOL = 1e-12


class AnchorMismatch(ValueError):
    """The anchor slots required by +1 or +2 do not agree."""


@dataclass(frozen=True)
class TTMPoint:
    base: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        arrs = []
        for name in ("base", "a", "b", "c"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            arrs.append(arr)
            object.__setattr__(self, name, arr)
        if arrs[0].ndim != 1 or any(a.shape != arrs[0].shape for a in arrs):
            raise DimensionMismatch("TTM slots must be vectors of equal length")

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.base, self.a, self.b, self.c])

    def __eq__(self, other):
        return isinstance(other, TTMPoint) and np.array_equal(self.as_array(), other.as_array())

    def __hash__(self):
        return hash(self.as_array().tobytes())


def project_primary(w: TTMPoint) -> TangentPoint:
    return TangentPoint(w.base, w.a)


def project_secondary(w: TTMPoint) -> TangentPoint:
    return TangentPoint(w.base, w.b)


def distance(w1: TTMPoint, w2: TTMPoint) -> float:
    return float(np.linalg.norm(w1.as_array() - w2.as_array()))


def _anchor(p, q, what: str) -> None:
    if np.max(np.abs(p - q), initial=0.0) > ANCHOR_TOL:
        raise AnchorMismatch(f"{what} differ: {p.tolist()} vs {q.tolist()}")


def add_primary(w1: TTMPoint, w2: TTMPoint) -> TTMPoint:
    _anchor(w1.base, w2.base, "base points")
    _anchor(w1.a, w2.a, "primary anchors")
    return TTMPoint(w1.base, w1.a, w1.b + w2.b, w1.c + w2.c)


def add_secondary(w1: TTMPoint, w2: TTMPoint) -> TTMPoint:
    _anchor(w1.base, w2.base, "base points")
    _anchor(w1.b, w2.b, "secondary anchors")
    return TTMPoint(w1.base, w1.a + w2.a, w1.b, w1.c + w2.c)


def scale_primary(s: float, w: TTMPoint) -> TTMPoint:
    return TTMPoint(w.base, w.a, s * w.b, s * w.c)


def scale_secondary(s: float, w: TTMPoint) -> TTMPoint:
    return TTMPoint(w.base, s * w.a, w.b, s * w.c)


def sub_primary(w1: TTMPoint, w2: TTMPoint) -> TTMPoint:
    return add_primary(w1, scale_primary(-1.0, w2))


def sub_secondary(w1: TTMPoint, w2: TTMPoint) -> TTMPoint:
    return add_secondary(w1, scale_secondary(-1.0, w2))


def involution(w: TTMPoint) -> TTMPoint:
    return TTMPoint(w.base, w.b, w.a, w.c)


def vlft(v: TangentPoint, u) -> TTMPoint:
    u = np.asarray(u, dtype=float)
    if u.shape != v.fiber.shape:
        raise DimensionMismatch("vertical lift of a vector of the wrong length")
    return TTMPoint(v.base, v.fiber, np.zeros_like(u), u)


def hlft(c: Connection, v: TangentPoint, u) -> TTMPoint:
    """Horizontal lift of ``u`` to ``v``: (x, v, u, -Gamma(x)(u, v))."""
    u = np.asarray(u, dtype=float)
    if u.shape != v.fiber.shape:
        raise DimensionMismatch("horizontal lift of a vector of the wrong length")
    c.domain.check(v.base)
    return TTMPoint(v.base, v.fiber, u, -c.contract(v.base, u, v.fiber))


def complete_lift_at(X: VectorField, v: TangentPoint) -> TTMPoint:
    x = v.base
    X.domain.check(x)
    return TTMPoint(x, v.fiber, X(x), X.jacobian(x) @ v.fiber)


def tangent_map_at(X: VectorField, u: TangentPoint) -> TTMPoint:
    """TX(u) = (x, X(x), u, DX(x) u)."""
    x = u.base
    X.domain.check(x)
    return TTMPoint(x, X(x), u.fiber, X.jacobian(x) @ u.fiber)


def interchange_check(x, a1, a2, b1, b2, c) -> float:
    """(u +2 v) +1 (w +2 z) vs (u +1 w) +2 (v +1 z) for a compatible quadruple.

    ``c`` holds the four c-slots; u, v share b1, w, z share b2, u, w share a1
    and v, z share a2.
    """
    u = TTMPoint(x, a1, b1, c[0])
    v = TTMPoint(x, a2, b1, c[1])
    w = TTMPoint(x, a1, b2, c[2])
    z = TTMPoint(x, a2, b2, c[3])
    lhs = add_primary(add_secondary(u, v), add_secondary(w, z))
    rhs = add_secondary(add_primary(u, w), add_primary(v, z))
    return distance(lhs, rhs)


def scaling_commute_check(a: float, b: float, w: TTMPoint) -> float:
    return distance(scale_primary(a, scale_secondary(b, w)),
                    scale_secondary(b, scale_primary(a, w)))


def complete_lift_involution_check(X: VectorField, v: TangentPoint) -> float:
    """|| X^C(v) - I_M(TX(v)) ||."""
    return distance(complete_lift_at(X, v), involution(tangent_map_at(X, v)))


def vertical_involution_check(w: TTMPoint, z) -> float:
    """|| w +2 I_M(vlft(u, z)) - w +1 vlft(v, z) || with v, u the two projections of w."""
    lhs = add_secondary(w, involution(vlft(project_secondary(w), z)))
    rhs = add_primary(w, vlft(project_primary(w), z))
    return distance(lhs, rhs)


def bracket_vertical_check(X: VectorField, Y: VectorField, x) -> float:
    """|| TY(X(x)) -1 I_M(TX(Y(x))) - vlft(Y(x), [X, Y](x)) ||."""
    x = np.asarray(x, dtype=float)
    lhs = sub_primary(tangent_map_at(Y, TangentPoint(x, X(x))),
                      involution(tangent_map_at(X, TangentPoint(x, Y(x)))))
    rhs = vlft(TangentPoint(x, Y(x)), lie_bracket(X, Y)(x))
    return distance(lhs, rhs)


def torsion_lemma_check(c: Connection, v: TangentPoint, u) -> float:
    """|| hlft(v,u) -1 I_M hlft(u,v) - vlft(v, T(v,u)) ||."""
    u = np.asarray(u, dtype=float)
    lhs = sub_primary(hlft(c, v, u), involution(hlft(c, TangentPoint(v.base, u), v.fiber)))
    rhs = vlft(v, torsion_at(c, v.base, v.fiber, u))
    return distance(lhs, rhs)


def xc_xh_identity_check(c: Connection, X: VectorField, v: TangentPoint) -> float:
    """|| X^C(v) - (X^H(v) +1 vlft(v, nabla_v X + T(X(x), v))) ||."""
    x = v.base
    lhs = complete_lift_at(X, v)
    Xx = X(x)
    corr = covariant_derivative_at(c, v, X) + torsion_at(c, x, Xx, v.fiber)
    rhs = add_primary(hlft(c, v, Xx), vlft(v, corr))
    return distance(lhs, rhs)


# ---------------------------------------------------------------------------
# Lifted fields on TM (2n-dimensional symbolic vector fields)


def _embed_field(X: VectorField, tm: ChartDomain) -> list[ScalarExpr]:
    return [e.embed(tm.dim) for e in X.components]


def _fiber_vars(n: int) -> list[ScalarExpr]:
    return [variable(n + i, 2 * n) for i in range(n)]


def _contract_sym(c: Connection, u: list[ScalarExpr], w: list[ScalarExpr]) -> list[ScalarExpr]:
    n = c.dim
    out = []
    for k in range(n):
        acc = constant(0.0, 2 * n)
        for i in range(n):
            for j in range(n):
                g = c.gamma[k][i][j]
                if g.is_zero() or u[i].is_zero() or w[j].is_zero():
                    continue
                acc = acc + g.embed(2 * n) * u[i] * w[j]
        out.append(acc)
    return out


def vertical_lift_field(X: VectorField) -> VectorField:
    tm = X.domain.tangent_bundle()
    zero = [constant(0.0, tm.dim)] * X.dim
    return VectorField(tuple(zero + _embed_field(X, tm)), tm)


def horizontal_lift_field(c: Connection, X: VectorField) -> VectorField:
    """X^H(x, v) = (X(x), -Gamma(x)(X(x), v))."""
    tm = X.domain.tangent_bundle()
    n = X.dim
    Xe = _embed_field(X, tm)
    fib = _contract_sym(c, Xe, _fiber_vars(n))
    return VectorField(tuple(Xe + [-f for f in fib]), tm)


def complete_lift_field(X: VectorField) -> VectorField:
    """X^C(x, v) = (X(x), DX(x) v)."""
    tm = X.domain.tangent_bundle()
    n = X.dim
    v = _fiber_vars(n)
    fib = []
    for k in range(n):
        acc = constant(0.0, tm.dim)
        for i in range(n):
            d = X.jacobian_exprs[k][i]
            if not d.is_zero():
                acc = acc + d.embed(tm.dim) * v[i]
        fib.append(acc)
    return VectorField(tuple(_embed_field(X, tm) + fib), tm)


def geodesic_spray(c: Connection) -> VectorField:
    """Z(x, v) = hlft(v, v) = (v, -Gamma(x)(v, v))."""
    tm = c.domain.tangent_bundle()
    v = _fiber_vars(c.dim)
    fib = _contract_sym(c, v, v)
    return VectorField(tuple(v + [-f for f in fib]), tm)


def lift_vector(v: TangentPoint, u) -> np.ndarray:
    """Coordinates on TM of vlft(v, u) viewed as a tangent vector of TM."""
    return np.concatenate([np.zeros(v.dim), np.asarray(u, dtype=float)])
