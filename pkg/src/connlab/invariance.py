"""Distributions, tangency tests and the geodesic-invariance equivalence harness.

Membership in a distribution is tested by the norm of the component orthogonal
(in the chart's Euclidean inner product) to the span of the generators.  Only
vanishing versus non-vanishing matters, so any complement would do.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .flows import DEFAULT, IntegratorConfig, geodesic_curve
from .geometry import (ChartDomain, Connection, GeometryError, OutOfBounds, TangentPoint,
                       VectorField, covariant_derivative, lie_bracket, symmetric_product)
from .ttm import geodesic_spray, vertical_lift_field, xc_xh_identity_check

__all__ = [
    "Distribution", "RankDropError", "Probe", "make_probes", "membership_residual",
    "vector_field_in_distribution", "geodesic_invariance_scan", "symmetric_closure_scan",
    "self_derivative_scan", "classify", "InvarianceVerdict", "theorem_equivalence_harness",
    "xc_xh_identity_check", "xvzyv_identity_check", "tangent_space_basis",
    "xh_restricted_check",
]

DEFAULT_THRESHOLD = 1e-5
MARGIN = 10.0
FD_STEP = 1e-5


class RankDropError(GeometryError):
    """The generator frame loses rank at a point."""


class Distribution:
    def __init__(self, generators, domain: ChartDomain | None = None,
                 rank_tolerance: float = 1e-8, rank: int | None = None, name: str = ""):
        self.generators = tuple(generators)
        if not self.generators:
            raise ValueError("a distribution needs at least one generator")
        self.domain = domain or self.generators[0].domain
        if any(g.dim != self.domain.dim for g in self.generators):
            raise ValueError("generator dimensions disagree with the chart")
        self.rank_tolerance = rank_tolerance
        self.rank = len(self.generators) if rank is None else rank
        self.name = name

    @property
    def dim(self) -> int:
        return self.domain.dim

    def frame(self, x) -> np.ndarray:
        """n x m matrix whose columns are the generators at x."""
        return np.column_stack([g(x) for g in self.generators])

    def basis(self, x) -> np.ndarray:
        """Orthonormal basis (columns) of D_x; raises RankDropError on rank drop."""
        u, s, _ = np.linalg.svd(self.frame(x), full_matrices=False)
        r = int(np.sum(s > self.rank_tolerance))
        if r != self.rank:
            raise RankDropError(
                f"rank {r} != {self.rank} at {np.asarray(x).tolist()}")
        return u[:, :r]


def _orth_residual(basis: np.ndarray, w: np.ndarray) -> float:
    return float(np.linalg.norm(w - basis @ (basis.T @ w)))


def membership_residual(D: Distribution, v: TangentPoint) -> float:
    D.domain.check(v.base)
    return _orth_residual(D.basis(v.base), v.fiber)


def vector_field_in_distribution(D: Distribution, X: VectorField, probes) -> float:
    worst = 0.0
    for x in probes:
        x = np.asarray(x, dtype=float)
        worst = max(worst, membership_residual(D, TangentPoint(x, X(x))))
    return worst


# ---------------------------------------------------------------------------
# Probes


@dataclass(frozen=True)
class Probe:
    base: np.ndarray
    coefficients: np.ndarray


def make_probes(box, n_generators: int, random_count: int = 20, seed: int = 0,
                grid: int = 3) -> list[Probe]:
    """A grid^dim grid over ``box`` plus uniform random draws; coefficients in [-1, 1]."""
    rng = np.random.default_rng(seed)
    box = np.asarray(box, dtype=float)
    axes = [np.linspace(lo, hi, grid) for lo, hi in box]
    bases = [np.array(p) for p in itertools.product(*axes)]
    bases += list(rng.uniform(box[:, 0], box[:, 1], size=(random_count, len(box))))
    return [Probe(b, rng.uniform(-1.0, 1.0, n_generators)) for b in bases]


def _initial_velocity(D: Distribution, p: Probe) -> np.ndarray:
    return D.frame(p.base) @ p.coefficients


# ---------------------------------------------------------------------------
# The three scans


@dataclass
class ScanResult:
    worst: float
    worst_probe: list | None
    skipped: list = field(default_factory=list)


def geodesic_invariance_scan(c: Connection, D: Distribution, probes, horizon: float = 0.5,
                             cfg: IntegratorConfig = DEFAULT) -> ScanResult:
    """Max membership residual of (gamma, gamma') over [-T, T] at the integrator nodes."""
    worst, where, skipped = 0.0, None, []
    for p in probes:
        v0 = TangentPoint(p.base, _initial_velocity(D, p))
        try:
            curve = geodesic_curve(c, v0, -horizon, horizon, cfg)
        except OutOfBounds as exc:
            skipped.append((p.base.tolist(), str(exc)))
            continue
        for x, vel in zip(curve.points, curve.velocities):
            r = _orth_residual(D.basis(x), vel)
            if r > worst:
                worst, where = r, p.base.tolist()
    return ScanResult(worst, where, skipped)


def symmetric_closure_scan(c: Connection, D: Distribution, probes) -> ScanResult:
    """Worst residual of <X_i : X_j> over all unordered generator pairs (i <= j)."""
    gens = D.generators
    products = [symmetric_product(c, gens[i], gens[j])
                for i in range(len(gens)) for j in range(i, len(gens))]
    worst, where = 0.0, None
    for p in probes:
        basis = D.basis(p.base)
        for P in products:
            r = _orth_residual(basis, P(p.base))
            if r > worst:
                worst, where = r, p.base.tolist()
    return ScanResult(worst, where)


def self_derivative_scan(c: Connection, D: Distribution, probes) -> ScanResult:
    """Worst residual of nabla_X X for X = sum_i a_i X_i with each probe's coefficients."""
    worst, where = 0.0, None
    for p in probes:
        X = VectorField.zero(D.domain)
        for a, g in zip(p.coefficients, D.generators):
            X = X + g.scale(float(a))
        r = _orth_residual(D.basis(p.base), covariant_derivative(c, X, X)(p.base))
        if r > worst:
            worst, where = r, p.base.tolist()
    return ScanResult(worst, where)


def classify(value: float, threshold: float = DEFAULT_THRESHOLD) -> bool | None:
    """True below threshold/10, False above 10*threshold, None in between."""
    if value <= threshold / MARGIN:
        return True
    if value >= threshold * MARGIN:
        return False
    return None


@dataclass
class InvarianceVerdict:
    geodesic_invariant: bool | None
    geodesic_deviation: float
    symprod_closed: bool | None
    symprod_residual: float
    nabla_xx_closed: bool | None
    nabla_xx_residual: float
    probes: str
    counterexample: list | None = None
    skipped: int = 0

    @property
    def verdicts(self) -> tuple:
        return (self.geodesic_invariant, self.symprod_closed, self.nabla_xx_closed)

    @property
    def indeterminate(self) -> bool:
        return any(v is None for v in self.verdicts)

    @property
    def agree(self) -> bool:
        return not self.indeterminate and len(set(self.verdicts)) == 1

    def as_dict(self) -> dict:
        return {
            "geodesic_invariant": self.geodesic_invariant,
            "geodesic_deviation": self.geodesic_deviation,
            "symprod_closed": self.symprod_closed,
            "symprod_residual": self.symprod_residual,
            "nabla_xx_closed": self.nabla_xx_closed,
            "nabla_xx_residual": self.nabla_xx_residual,
            "agree": self.agree,
            "indeterminate": self.indeterminate,
            "counterexample": self.counterexample,
            "skipped": self.skipped,
            "probes": self.probes,
        }


def theorem_equivalence_harness(c: Connection, D: Distribution, probes, horizon: float = 0.5,
                                cfg: IntegratorConfig = DEFAULT,
                                threshold: float = DEFAULT_THRESHOLD) -> InvarianceVerdict:
    probes = list(probes)
    geo = geodesic_invariance_scan(c, D, probes, horizon, cfg)
    sym = symmetric_closure_scan(c, D, probes)
    nxx = self_derivative_scan(c, D, probes)
    counter = None
    for scan in (geo, sym, nxx):
        if classify(scan.worst, threshold) is False:
            counter = scan.worst_probe
            break
    return InvarianceVerdict(
        classify(geo.worst, threshold), geo.worst,
        classify(sym.worst, threshold), sym.worst,
        classify(nxx.worst, threshold), nxx.worst,
        probes=f"{len(probes)} probes, horizon {horizon:g}",
        counterexample=counter, skipped=len(geo.skipped))


# ---------------------------------------------------------------------------
# Identities on TM


def xvzyv_identity_check(c: Connection, X: VectorField, Y: VectorField,
                         v: TangentPoint) -> float:
    """|| [X^V, [Z, Y^V]](v) - <X:Y>^V(v) || with the brackets taken symbolically on TM."""
    c.domain.check(v.base)
    Z = geodesic_spray(c)
    lhs = lie_bracket(vertical_lift_field(X), lie_bracket(Z, vertical_lift_field(Y)))
    val = lhs(v.as_array())
    rhs = np.concatenate([np.zeros(v.dim), symmetric_product(c, X, Y)(v.base)])
    return float(np.linalg.norm(val - rhs))


def tangent_space_basis(D: Distribution, v: TangentPoint, step: float = FD_STEP) -> np.ndarray:
    """Orthonormal basis of T_v D inside R^{2n}, D seen as a submanifold of TM.

    D is parametrized by (y, beta) -> (y, sum_i beta_i X_i(y)); the y-directions
    are central differences with the given step, the beta-directions are exact.
    """
    x = v.base
    F = D.frame(x)
    D.basis(x)  # rank check
    beta, *_ = np.linalg.lstsq(F, v.fiber, rcond=None)
    n = D.dim
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        dF = (D.frame(x + e) - D.frame(x - e)) / (2 * step)
        cols.append(np.concatenate([np.eye(n)[k], dF @ beta]))
    for i in range(F.shape[1]):
        cols.append(np.concatenate([np.zeros(n), F[:, i]]))
    u, s, _ = np.linalg.svd(np.column_stack(cols), full_matrices=False)
    r = n + D.rank
    return u[:, :r]


def xh_restricted_check(c: Connection, D: Distribution, X: VectorField, alpha: float,
                        x) -> float:
    """Distance of X^H(v) from T_v D at v = alpha X(x), for a D-valued field X."""
    x = np.asarray(x, dtype=float)
    D.domain.check(x)
    Xx = X(x)
    v = TangentPoint(x, alpha * Xx)
    xh = np.concatenate([Xx, -c.contract(x, Xx, v.fiber)])
    return _orth_residual(tangent_space_basis(D, v), xh)
