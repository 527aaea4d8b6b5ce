"""Chart domains, vector fields and affine connections in one global chart.

Christoffel symbols are stored as ``gamma[k][i][j]`` so that

    (nabla_X Y)^k = X^i d_i Y^k + Gamma^k_ij X^i Y^j.

All derived objects (covariant derivatives, torsion, brackets, symmetric
products) are built symbolically from the coordinate expressions.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .expr import ScalarExpr, compile_many, constant, parse, variable


class GeometryError(Exception):
    pass


class DimensionMismatch(GeometryError, ValueError):
    pass


class OutOfBounds(GeometryError):
    def __init__(self, point, time: float | None = None):
        where = "" if time is None else f" at t={time:.6g}"
        super().__init__(f"point {np.round(np.asarray(point, float), 12).tolist()} "
                         f"left the chart bounds{where}")
        self.point = point
        self.time = time


class SingularMetric(GeometryError):
    pass


@dataclass(frozen=True)
class ChartDomain:
    """A single chart: R^dim, optionally restricted to an axis-aligned box."""

    dim: int
    bounds: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.bounds is not None:
            b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            if len(b) != self.dim or any(lo >= hi for lo, hi in b):
                raise ValueError(f"bad bounds {self.bounds!r} for dim {self.dim}")
            object.__setattr__(self, "bounds", b)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        if self.bounds is None:
            return True
        return all(lo <= xi <= hi for xi, (lo, hi) in zip(x, self.bounds))

    def check(self, x, time: float | None = None) -> None:
        if not self.contains(x):
            raise OutOfBounds(x, time)

    def tangent_bundle(self) -> "ChartDomain":
        """Chart on TM with coordinates (x, v); fibers are unbounded."""
        if self.bounds is None:
            return ChartDomain(2 * self.dim)
        inf = float("inf")
        return ChartDomain(2 * self.dim, self.bounds + ((-inf, inf),) * self.dim)

    def variables(self) -> list[ScalarExpr]:
        return [variable(i, self.dim) for i in range(self.dim)]


def _check_same(*doms: ChartDomain) -> None:
    dims = {d.dim for d in doms}
    if len(dims) != 1:
        raise DimensionMismatch(f"dimension mismatch: {sorted(dims)}")


def _coerce(e, dim: int) -> ScalarExpr:
    if isinstance(e, ScalarExpr):
        if e.dim != dim:
            raise DimensionMismatch(f"expression has dim {e.dim}, expected {dim}")
        return e
    return parse(e, dim) if isinstance(e, str) else constant(e, dim)


@dataclass(frozen=True)
class VectorField:
    components: tuple[ScalarExpr, ...]
    domain: ChartDomain

    def __post_init__(self):
        comps = tuple(_coerce(c, self.domain.dim) for c in self.components)
        if len(comps) != self.domain.dim:
            raise DimensionMismatch(
                f"{len(comps)} components for a {self.domain.dim}-dimensional chart")
        object.__setattr__(self, "components", comps)

    @classmethod
    def parse(cls, sources: Sequence, domain: ChartDomain) -> "VectorField":
        return cls(tuple(sources), domain)

    @classmethod
    def zero(cls, domain: ChartDomain) -> "VectorField":
        return cls((0.0,) * domain.dim, domain)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @cached_property
    def _fn(self):
        return compile_many(self.components, self.dim)

    @cached_property
    def jacobian_exprs(self) -> tuple[tuple[ScalarExpr, ...], ...]:
        """Row k holds d X^k / d x^i for i = 0..n-1."""
        return tuple(tuple(c.diff(i) for i in range(self.dim))
                     for c in self.components)

    @cached_property
    def _jac_fn(self):
        flat = [e for row in self.jacobian_exprs for e in row]
        return compile_many(flat, self.dim)

    def __call__(self, x) -> np.ndarray:
        return np.array(self._fn(_floats(x, self.dim)))

    def jacobian(self, x) -> np.ndarray:
        n = self.dim
        return np.array(self._jac_fn(_floats(x, n))).reshape(n, n)

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_same(self.domain, other.domain)
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)),
                           self.domain)

    def __sub__(self, other: "VectorField") -> "VectorField":
        _check_same(self.domain, other.domain)
        return VectorField(tuple(a - b for a, b in zip(self.components, other.components)),
                           self.domain)

    def __neg__(self) -> "VectorField":
        return VectorField(tuple(-a for a in self.components), self.domain)

    def scale(self, a) -> "VectorField":
        return VectorField(tuple(a * c for c in self.components), self.domain)

    def __rmul__(self, a) -> "VectorField":
        return self.scale(a)

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.components) + ")"


def _floats(x, n: int) -> list[float]:
    xs = x.tolist() if isinstance(x, np.ndarray) else [float(v) for v in x]
    if len(xs) != n:
        raise DimensionMismatch(f"expected a point of length {n}, got {len(xs)}")
    return xs


@dataclass(frozen=True)
class Connection:
    """Affine connection given by Christoffel symbols ``gamma[k][i][j]``."""

    gamma: tuple
    domain: ChartDomain
    name: str = ""

    def __post_init__(self):
        n = self.domain.dim
        g = self.gamma
        if len(g) != n or any(len(row) != n or any(len(r) != n for r in row) for row in g):
            raise DimensionMismatch(f"Christoffel array must be {n}x{n}x{n}")
        object.__setattr__(self, "gamma", tuple(
            tuple(tuple(_coerce(e, n) for e in r) for r in row) for row in g))

    @classmethod
    def flat(cls, domain: ChartDomain, name: str = "flat") -> "Connection":
        n = domain.dim
        return cls(tuple(tuple((0.0,) * n for _ in range(n)) for _ in range(n)),
                   domain, name)

    @classmethod
    def from_sparse(cls, entries: dict, domain: ChartDomain, name: str = "") -> "Connection":
        """Build from ``{(k, i, j): expr}`` with 0-based indices; the rest are zero."""
        n = domain.dim
        g = [[[0.0] * n for _ in range(n)] for _ in range(n)]
        for (k, i, j), e in entries.items():
            g[k][i][j] = e
        return cls(tuple(tuple(tuple(r) for r in row) for row in g), domain, name)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def symbol(self, k: int, i: int, j: int) -> ScalarExpr:
        return self.gamma[k][i][j]

    @cached_property
    def _fn(self):
        flat = [e for row in self.gamma for r in row for e in r]
        return compile_many(flat, self.dim)

    def christoffel(self, x) -> np.ndarray:
        """Numeric array ``G[k, i, j]`` at ``x``."""
        n = self.dim
        return np.array(self._fn(_floats(x, n))).reshape(n, n, n)

    def contract(self, x, u, v) -> np.ndarray:
        """Gamma^k_ij(x) u^i v^j."""
        return np.einsum("kij,i,j->k", self.christoffel(x), u, v)

    def is_symmetric(self) -> bool:
        n = self.dim
        return all(self.gamma[k][i][j].node == self.gamma[k][j][i].node
                   for k in range(n) for i in range(n) for j in range(i + 1, n))


@dataclass(frozen=True)
class MetricField:
    """Symmetric (0,2)-tensor g_ij given by expressions; used to build Levi-Civita."""

    entries: tuple
    domain: ChartDomain

    def __post_init__(self):
        n = self.domain.dim
        if len(self.entries) != n or any(len(r) != n for r in self.entries):
            raise DimensionMismatch(f"metric must be {n}x{n}")
        g = tuple(tuple(_coerce(e, n) for e in r) for r in self.entries)
        for i in range(n):
            for j in range(i + 1, n):
                if g[i][j].node != g[j][i].node:
                    raise GeometryError(f"metric entry ({i + 1},{j + 1}) is not symmetric")
        object.__setattr__(self, "entries", g)

    @cached_property
    def _fn(self):
        n = self.domain.dim
        return compile_many([e for r in self.entries for e in r], n)

    def __call__(self, x) -> np.ndarray:
        n = self.domain.dim
        return np.array(self._fn(_floats(x, n))).reshape(n, n)

    def check_positive_definite(self, probes) -> None:
        for x in probes:
            eig = np.linalg.eigvalsh(self(x))
            if eig[0] <= 0:
                raise SingularMetric(f"metric not positive definite at {list(x)}")


# ---------------------------------------------------------------------------
# Symbolic operations


def _gamma_contract(c: Connection, X: VectorField, Y: VectorField) -> list[ScalarExpr]:
    n = c.dim
    out = []
    for k in range(n):
        acc = constant(0.0, n)
        for i in range(n):
            for j in range(n):
                g = c.gamma[k][i][j]
                if g.is_zero() or X.components[i].is_zero() or Y.components[j].is_zero():
                    continue
                acc = acc + g * X.components[i] * Y.components[j]
        out.append(acc)
    return out


def directional_derivative(X: VectorField, Y: VectorField) -> VectorField:
    """DY . X, i.e. X^i d_i Y^k."""
    _check_same(X.domain, Y.domain)
    n = X.dim
    comps = []
    for k in range(n):
        acc = constant(0.0, n)
        for i in range(n):
            if X.components[i].is_zero():
                continue
            acc = acc + X.components[i] * Y.jacobian_exprs[k][i]
        comps.append(acc)
    return VectorField(tuple(comps), X.domain)


def covariant_derivative(c: Connection, X: VectorField, Y: VectorField) -> VectorField:
    _check_same(c.domain, X.domain, Y.domain)
    dyx = directional_derivative(X, Y)
    gam = _gamma_contract(c, X, Y)
    return VectorField(tuple(a + b for a, b in zip(dyx.components, gam)), X.domain)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y] = DY.X - DX.Y."""
    return directional_derivative(X, Y) - directional_derivative(Y, X)


def torsion(c: Connection, X: VectorField, Y: VectorField) -> VectorField:
    """T(X,Y)^k = (Gamma^k_ij - Gamma^k_ji) X^i Y^j."""
    _check_same(c.domain, X.domain, Y.domain)
    a = _gamma_contract(c, X, Y)
    b = _gamma_contract(c, Y, X)
    return VectorField(tuple(p - q for p, q in zip(a, b)), X.domain)


def symmetric_product(c: Connection, X: VectorField, Y: VectorField) -> VectorField:
    return covariant_derivative(c, X, Y) + covariant_derivative(c, Y, X)


def torsion_free_part(c: Connection) -> Connection:
    n = c.dim
    g = c.gamma
    sym = tuple(tuple(tuple(
        g[k][i][j] if g[k][i][j].node == g[k][j][i].node
        else (g[k][i][j] + g[k][j][i]) * 0.5
        for j in range(n)) for i in range(n)) for k in range(n))
    name = f"{c.name}-symmetrized" if c.name else ""
    return Connection(sym, c.domain, name)


def christoffel_from_metric(g: MetricField, probes=None, name: str = "") -> Connection:
    """Levi-Civita connection of ``g``, built symbolically.

    The inverse metric uses the adjugate formula; structurally diagonal
    metrics are inverted entrywise to keep the expressions small.
    ``probes`` (points) are checked for a singular metric.
    """
    dom = g.domain
    n = dom.dim
    G = g.entries
    if probes is not None:
        for x in probes:
            if abs(np.linalg.det(g(x))) < 1e-14:
                raise SingularMetric(f"metric is singular at {list(x)}")
    ginv = _symbolic_inverse(G, n)
    dg = [[[G[i][j].diff(l) for l in range(n)] for j in range(n)] for i in range(n)]
    gamma = []
    for k in range(n):
        row = []
        for i in range(n):
            r = []
            for j in range(n):
                acc = constant(0.0, n)
                for l in range(n):
                    if ginv[k][l].is_zero():
                        continue
                    term = dg[j][l][i] + dg[i][l][j] - dg[i][j][l]
                    if term.is_zero():
                        continue
                    acc = acc + ginv[k][l] * term
                r.append(acc * 0.5)
            row.append(tuple(r))
        gamma.append(tuple(row))
    return Connection(tuple(gamma), dom, name)


def _symbolic_det(m, rows: list[int], cols: list[int]) -> ScalarExpr:
    if len(rows) == 1:
        return m[rows[0]][cols[0]]
    n = m[0][0].dim
    acc = constant(0.0, n)
    r0, rest = rows[0], rows[1:]
    for idx, c in enumerate(cols):
        if m[r0][c].is_zero():
            continue
        minor = _symbolic_det(m, rest, cols[:idx] + cols[idx + 1:])
        term = m[r0][c] * minor
        acc = acc + term if idx % 2 == 0 else acc - term
    return acc


def _symbolic_inverse(G, n: int):
    off_diag_zero = all(G[i][j].is_zero() for i in range(n) for j in range(n) if i != j)
    if off_diag_zero:
        return [[(1.0 / G[i][i]) if i == j else constant(0.0, n) for j in range(n)]
                for i in range(n)]
    idx = list(range(n))
    det = _symbolic_det(G, idx, idx)
    inv = [[None] * n for _ in range(n)]
    for i, j in itertools.product(range(n), repeat=2):
        minor = _symbolic_det(G, [r for r in idx if r != j], [c for c in idx if c != i]) \
            if n > 1 else constant(1.0, n)
        cof = minor if (i + j) % 2 == 0 else -minor
        inv[i][j] = cof / det
    return inv


# ---------------------------------------------------------------------------
# Pointwise operations


def covariant_derivative_at(c: Connection, v: "TangentPoint", Y: VectorField) -> np.ndarray:
    """nabla_v Y at the base point of v, computed from v alone."""
    _check_same(c.domain, Y.domain)
    x = v.base
    c.domain.check(x)
    return Y.jacobian(x) @ v.fiber + c.contract(x, v.fiber, Y(x))


def torsion_at(c: Connection, x, u, v) -> np.ndarray:
    G = c.christoffel(x)
    return np.einsum("kij,i,j->k", G - G.transpose(0, 2, 1), u, v)


# TangentPoint lives here so geometry ops can accept it; TTM calculus is in ttm.py.


@dataclass(frozen=True)
class TangentPoint:
    base: np.ndarray
    fiber: np.ndarray

    def __post_init__(self):
        b = np.array(self.base, dtype=float)
        f = np.array(self.fiber, dtype=float)
        if b.ndim != 1 or b.shape != f.shape:
            raise DimensionMismatch("base and fiber must be vectors of equal length")
        b.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "base", b)
        object.__setattr__(self, "fiber", f)

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.base, self.fiber])

    @classmethod
    def from_array(cls, y, n: int) -> "TangentPoint":
        y = np.asarray(y, dtype=float)
        return cls(y[:n], y[n:])

    def __eq__(self, other):
        return (isinstance(other, TangentPoint) and np.array_equal(self.base, other.base)
                and np.array_equal(self.fiber, other.fiber))

    def __hash__(self):
        return hash((self.base.tobytes(), self.fiber.tobytes()))
