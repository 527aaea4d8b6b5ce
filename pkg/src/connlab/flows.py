"""Fixed-step RK4 flows on M and TM, geodesics and parallel transport.

Curves used for transport are sampled at half-step nodes so that the
transport ODE can be stepped with classical RK4 using only sampled values.
Inverse transport integrates the same linear ODE backward in time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (ChartDomain, Connection, GeometryError, OutOfBounds,
                       TangentPoint, VectorField, torsion_at, torsion_free_part)


class NonFiniteState(GeometryError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    substeps_per_unit_time: int = 200
    min_steps: int = 10

    def __post_init__(self):
        if self.substeps_per_unit_time < 1 or self.min_steps < 1:
            raise ValueError("substeps must be >= 1")

    def steps(self, t: float) -> int:
        return max(self.min_steps, math.ceil(abs(t) * self.substeps_per_unit_time))


DEFAULT = IntegratorConfig()


def rk4(f: Callable, y0, t0: float, t1: float, n: int,
        check: Callable | None = None, keep: bool = False):
    """Integrate y' = f(t, y) from t0 to t1 in n equal steps.

    ``check(y, t)`` is called after every step.  Returns the final state, or
    ``(times, states)`` when ``keep`` is set.
    """
    y = np.array(y0, dtype=float)
    h = (t1 - t0) / n
    ts, ys = [t0], [y]
    t = t0
    for i in range(n):
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * h
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"non-finite state at t={t:.6g}")
        if check is not None:
            check(y, t)
        if keep:
            ts.append(t)
            ys.append(y)
    if keep:
        return np.array(ts), np.array(ys)
    return y


def _base_check(domain: ChartDomain, n: int):
    def check(y, t):
        if not domain.contains(y[:n]):
            raise OutOfBounds(y[:n], t)
    return check


# ---------------------------------------------------------------------------
# Flows


def flow(X: VectorField, x0, t: float, cfg: IntegratorConfig = DEFAULT) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    X.domain.check(x0, 0.0)
    if t == 0:
        return x0.copy()
    return rk4(lambda s, y: X(y), x0, 0.0, t, cfg.steps(t),
               _base_check(X.domain, X.dim))


def flow_group_property_check(X: VectorField, x0, s: float, t: float,
                              cfg: IntegratorConfig = DEFAULT) -> float:
    lhs = flow(X, flow(X, x0, t, cfg), s, cfg)
    rhs = flow(X, x0, s + t, cfg)
    return float(np.linalg.norm(lhs - rhs))


def vertical_flow(X: VectorField, v: TangentPoint, t: float) -> TangentPoint:
    X.domain.check(v.base)
    return TangentPoint(v.base, v.fiber + t * X(v.base))


def horizontal_flow(c: Connection, X: VectorField, v: TangentPoint, t: float,
                    cfg: IntegratorConfig = DEFAULT) -> TangentPoint:
    """Flow of X^H: base follows X, fiber is parallel transported."""
    n = X.dim
    c.domain.check(v.base, 0.0)
    if t == 0:
        return v

    def f(s, y):
        x, w = y[:n], y[n:]
        Xx = X(x)
        return np.concatenate([Xx, -c.contract(x, Xx, w)])

    y = rk4(f, v.as_array(), 0.0, t, cfg.steps(t), _base_check(c.domain, n))
    return TangentPoint.from_array(y, n)


def complete_flow(X: VectorField, v: TangentPoint, t: float,
                  cfg: IntegratorConfig = DEFAULT) -> TangentPoint:
    """Flow of X^C: the variational equation x' = X(x), w' = DX(x) w."""
    n = X.dim
    X.domain.check(v.base, 0.0)
    if t == 0:
        return v

    def f(s, y):
        x, w = y[:n], y[n:]
        return np.concatenate([X(x), X.jacobian(x) @ w])

    y = rk4(f, v.as_array(), 0.0, t, cfg.steps(t), _base_check(X.domain, n))
    return TangentPoint.from_array(y, n)


def _spray(c: Connection):
    n = c.dim

    def f(s, y):
        x, v = y[:n], y[n:]
        return np.concatenate([v, -c.contract(x, v, v)])
    return f


def geodesic(c: Connection, v0: TangentPoint, t: float,
             cfg: IntegratorConfig = DEFAULT) -> TangentPoint:
    c.domain.check(v0.base, 0.0)
    if t == 0:
        return v0
    y = rk4(_spray(c), v0.as_array(), 0.0, t, cfg.steps(t), _base_check(c.domain, c.dim))
    return TangentPoint.from_array(y, c.dim)


# ---------------------------------------------------------------------------
# Sampled curves


@dataclass(frozen=True)
class CurveSample:
    """A curve sampled at half-step nodes; ``times`` is strictly increasing."""

    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 1 or len(self.points) != len(t) \
                or len(self.velocities) != len(t):
            raise ValueError("times, points and velocities must have equal lengths")
        if np.any(np.diff(t) <= 0):
            raise ValueError("curve times must be strictly increasing")
        for name in ("times", "points", "velocities"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        scale = max(1.0, float(np.max(np.abs(self.times))))
        if abs(self.times[i] - t) > 1e-12 * scale:
            raise ValueError(f"t={t!r} is not a node of this curve sample")
        return i

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        i = self.index(t)
        return self.points[i], self.velocities[i]


def _sample_side(f, y0, t: float, n: int, check):
    """RK4 at half steps from 0 to t (2n half steps); returns nodes after 0."""
    ts, ys = rk4(f, y0, 0.0, t, 2 * n, check, keep=True)
    return ts[1:], ys[1:]


def _assemble(f, y0, t_lo, t_hi, cfg, check):
    if t_lo > 0 or t_hi < 0:
        raise ValueError("curve interval must contain 0")
    parts_t, parts_y = [], []
    if t_lo < 0:
        ts, ys = _sample_side(f, y0, t_lo, cfg.steps(t_lo), check)
        parts_t.append(ts[::-1])
        parts_y.append(ys[::-1])
    parts_t.append(np.array([0.0]))
    parts_y.append(np.asarray(y0, dtype=float)[None, :])
    if t_hi > 0:
        ts, ys = _sample_side(f, y0, t_hi, cfg.steps(t_hi), check)
        parts_t.append(ts)
        parts_y.append(ys)
    times = np.concatenate(parts_t)
    states = np.concatenate(parts_y)
    return times, states


def integral_curve(X: VectorField, x0, t_lo: float, t_hi: float,
                   cfg: IntegratorConfig = DEFAULT) -> CurveSample:
    """Integral curve of X through x0, sampled on [t_lo, t_hi] (which contains 0)."""
    x0 = np.asarray(x0, dtype=float)
    X.domain.check(x0, 0.0)
    times, pts = _assemble(lambda s, y: X(y), x0, t_lo, t_hi, cfg,
                           _base_check(X.domain, X.dim))
    vel = np.array([X(p) for p in pts])
    return CurveSample(times, pts, vel)


def geodesic_curve(c: Connection, v0: TangentPoint, t_lo: float, t_hi: float,
                   cfg: IntegratorConfig = DEFAULT) -> CurveSample:
    c.domain.check(v0.base, 0.0)
    n = c.dim
    times, states = _assemble(_spray(c), v0.as_array(), t_lo, t_hi, cfg,
                              _base_check(c.domain, n))
    return CurveSample(times, states[:, :n], states[:, n:])


def sample_curve(point: Callable, velocity: Callable, t_lo: float, t_hi: float,
                 cfg: IntegratorConfig = DEFAULT) -> CurveSample:
    """Sample an explicitly given curve on the same node layout as the integrators."""
    pieces = []
    if t_lo < 0:
        n = cfg.steps(t_lo)
        pieces.append(np.linspace(t_lo, 0.0, 2 * n + 1)[:-1])
    pieces.append(np.array([0.0]))
    if t_hi > 0:
        n = cfg.steps(t_hi)
        pieces.append(np.linspace(0.0, t_hi, 2 * n + 1)[1:])
    times = np.concatenate(pieces)
    return CurveSample(times, np.array([point(s) for s in times]),
                       np.array([velocity(s) for s in times]))


class Transporter:
    """Parallel transport along a sampled curve for one connection.

    The matrices A(s)[k, j] = Gamma^k_ij(gamma(s)) gamma'(s)^i are computed
    once per node; transport solves V' = -A(s) V with RK4 over node triples.
    """

    def __init__(self, c: Connection, curve: CurveSample):
        self.connection = c
        self.curve = curve
        for i, p in enumerate(curve.points):
            c.domain.check(p, float(curve.times[i]))
        self._A = np.array([np.einsum("kij,i->kj", c.christoffel(p), u)
                            for p, u in zip(curve.points, curve.velocities)])

    def _steps(self, i0: int, i1: int):
        if (i1 - i0) % 2:
            raise ValueError("transport endpoints must be an even number of half-nodes apart")
        d = 1 if i1 > i0 else -1
        return range(i0, i1, 2 * d), d

    def transport(self, V, t_from: float, t_to: float) -> np.ndarray:
        return self.trajectory(V, t_from, t_to)[-1]

    def trajectory(self, V, t_from: float, t_to: float) -> np.ndarray:
        """Transported vectors at every step node from t_from to t_to (inclusive)."""
        i0, i1 = self.curve.index(t_from), self.curve.index(t_to)
        V = np.array(V, dtype=float)
        out = [V]
        if i0 == i1:
            return np.array(out)
        steps, d = self._steps(i0, i1)
        T, A = self.curve.times, self._A
        for i in steps:
            h = T[i + 2 * d] - T[i]
            a0, am, a1 = A[i], A[i + d], A[i + 2 * d]
            k1 = -a0 @ V
            k2 = -am @ (V + h / 2 * k1)
            k3 = -am @ (V + h / 2 * k2)
            k4 = -a1 @ (V + h * k3)
            V = V + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            out.append(V)
        return np.array(out)

    def step_times(self, t_from: float, t_to: float) -> np.ndarray:
        i0, i1 = self.curve.index(t_from), self.curve.index(t_to)
        d = 2 if i1 >= i0 else -2
        return self.curve.times[i0:i1 + (1 if d > 0 else -1):d]


def parallel_transport(c: Connection, curve: CurveSample, V0, t_from: float,
                       t_to: float, cfg: IntegratorConfig = DEFAULT) -> np.ndarray:
    """tau^{(t_to, t_from)} along ``curve``.

    ``cfg`` is accepted for symmetry with the other integrators; the step
    size is fixed by the curve's node layout.
    """
    return Transporter(c, curve).transport(V0, t_from, t_to)


def covariant_derivative_via_transport(c: Connection, X: VectorField, Y: VectorField,
                                       x, t: float = 1e-3,
                                       cfg: IntegratorConfig = DEFAULT) -> np.ndarray:
    """Central difference of s -> tau^{(0,s)} Y(gamma(s)) at s = 0."""
    curve = integral_curve(X, x, -t, t, cfg)
    tr = Transporter(c, curve)
    fwd = tr.transport(Y(curve.at(t)[0]), t, 0.0)
    bwd = tr.transport(Y(curve.at(-t)[0]), -t, 0.0)
    return (fwd - bwd) / (2 * t)


# ---------------------------------------------------------------------------
# Transport along a geodesic for a connection and its torsion-free part


def _simpson(values: np.ndarray, h: float) -> np.ndarray:
    n = len(values) - 1
    if n % 2:
        raise ValueError("Simpson's rule needs an even number of intervals")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return h / 3.0 * np.tensordot(w, values, axes=1)


def transport_difference_sides(c: Connection, v0: TangentPoint, V, t: float,
                               cfg: IntegratorConfig = DEFAULT):
    """Both sides of the transport-difference identity along the geodesic from v0.

    left  = tau(t,0) V - taubar(t,0) V
    right = taubar(t,0)( -1/2 int_0^t taubar(0,s) T(gamma'(s), tau(s,0) V) ds )
    """
    if t == 0:
        z = np.zeros(c.dim)
        return z, z
    # even number of transport steps for Simpson
    steps = cfg.steps(t)
    steps += steps % 2
    cfg2 = IntegratorConfig(substeps_per_unit_time=cfg.substeps_per_unit_time,
                            min_steps=steps)
    lo, hi = (0.0, t) if t > 0 else (t, 0.0)
    curve = geodesic_curve(c, v0, lo, hi, cfg2)
    cbar = torsion_free_part(c)
    tau = Transporter(c, curve)
    taubar = Transporter(cbar, curve)
    V = np.asarray(V, dtype=float)

    W = tau.trajectory(V, 0.0, t)
    s_nodes = tau.step_times(0.0, t)
    integrand = []
    for s, w in zip(s_nodes, W):
        _, vel = curve.at(s)
        Tw = torsion_at(c, curve.at(s)[0], vel, w)
        integrand.append(taubar.transport(Tw, s, 0.0))
    h = t / (len(s_nodes) - 1)
    A = -0.5 * _simpson(np.array(integrand), h)
    left = W[-1] - taubar.transport(V, 0.0, t)
    right = taubar.transport(A, 0.0, t)
    return left, right


def transport_difference_check(c: Connection, v0: TangentPoint, V, t: float,
                               cfg: IntegratorConfig = DEFAULT) -> float:
    left, right = transport_difference_sides(c, v0, V, t, cfg)
    return float(np.linalg.norm(left - right))
