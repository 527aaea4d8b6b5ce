"""Shipped example connections and distributions."""
from __future__ import annotations

from dataclasses import dataclass

from .geometry import (ChartDomain, Connection, MetricField, VectorField,
                       christoffel_from_metric)


def flat(dim: int = 3, box: float = 10.0) -> Connection:
    dom = ChartDomain(dim, tuple((-box, box) for _ in range(dim)))
    return Connection.flat(dom, name=f"flat-R{dim}")


def half_plane_metric() -> MetricField:
    dom = ChartDomain(2, ((-20.0, 20.0), (0.05, 20.0)))
    return MetricField((("1/x2^2", 0.0), (0.0, "1/x2^2")), dom)


def hyperbolic_half_plane() -> Connection:
    g = half_plane_metric()
    return christoffel_from_metric(g, probes=[(0.0, 0.5), (1.0, 2.0)],
                                   name="hyperbolic-half-plane")


def sphere_metric() -> MetricField:
    # chart (theta, phi) away from the poles
    dom = ChartDomain(2, ((0.5, 2.6), (-10.0, 10.0)))
    return MetricField(((1.0, 0.0), (0.0, "sin(x1)^2")), dom)


def sphere_chart() -> Connection:
    g = sphere_metric()
    return christoffel_from_metric(g, probes=[(0.5, 0.0), (1.5, 1.0)],
                                   name="sphere-chart")


def constant_torsion(lam: float = 1.0, box: float = 10.0) -> Connection:
    """R^3 with Gamma^k_ij = lam * eps_ijk (purely antisymmetric, so pure torsion)."""
    dom = ChartDomain(3, tuple((-box, box) for _ in range(3)))
    entries = {}
    for (i, j, k), sign in _levi_civita_3().items():
        entries[(k, i, j)] = lam * sign
    return Connection.from_sparse(entries, dom, name=f"eps-torsion-R3(lambda={lam:g})")


def _levi_civita_3() -> dict:
    return {(0, 1, 2): 1.0, (1, 2, 0): 1.0, (2, 0, 1): 1.0,
            (1, 0, 2): -1.0, (0, 2, 1): -1.0, (2, 1, 0): -1.0}


CONNECTIONS = {
    "flat": lambda **kw: flat(kw.get("dim", 3)),
    "flat-r2": lambda **kw: flat(2),
    "flat-r3": lambda **kw: flat(3),
    "hyperbolic": lambda **kw: hyperbolic_half_plane(),
    "sphere": lambda **kw: sphere_chart(),
    "torsion": lambda **kw: constant_torsion(kw.get("lambda", 1.0)),
}


# probe boxes well inside each chart, used when a config gives none
PROBE_BOXES = {
    "flat": None, "flat-r2": None, "flat-r3": None, "torsion": None,
    "hyperbolic": ((-1.0, 1.0), (1.0, 3.0)),
    "sphere": ((1.0, 2.0), (-1.0, 1.0)),
}


def probe_box(name: str, dim: int) -> tuple:
    box = PROBE_BOXES.get(name)
    return box if box is not None else ((-1.0, 1.0),) * dim


def connection(name: str, **params) -> Connection:
    try:
        factory = CONNECTIONS[name]
    except KeyError:
        raise KeyError(f"unknown catalog connection {name!r}; "
                       f"known: {', '.join(sorted(CONNECTIONS))}") from None
    return factory(**params)


@dataclass(frozen=True)
class InvarianceCase:
    """A (connection, distribution) pair with its expected geodesic-invariance verdict."""

    name: str
    connection: Connection
    generators: tuple[VectorField, ...]
    probe_box: tuple[tuple[float, float], ...]
    invariant: bool


def invariance_cases() -> list[InvarianceCase]:
    r3 = flat(3)
    tor = constant_torsion()
    hyp = hyperbolic_half_plane()
    sph = sphere_chart()

    def vf(conn, *comps):
        return VectorField(tuple(comps), conn.domain)

    box3 = ((-1.0, 1.0),) * 3
    return [
        InvarianceCase("flat-coordinate-plane", r3,
                       (vf(r3, 1, 0, 0), vf(r3, 0, 1, 0)), box3, True),
        InvarianceCase("flat-twisted-plane", r3,
                       (vf(r3, 1, 0, 0), vf(r3, 0, 1, "x1")), box3, False),
        InvarianceCase("torsion-coordinate-plane", tor,
                       (vf(tor, 1, 0, 0), vf(tor, 0, 1, 0)), box3, True),
        InvarianceCase("torsion-twisted-plane", tor,
                       (vf(tor, 1, 0, 0), vf(tor, 0, 1, "x1")), box3, False),
        InvarianceCase("hyperbolic-vertical", hyp,
                       (vf(hyp, 0, 1),), ((-1.0, 1.0), (1.0, 3.0)), True),
        InvarianceCase("hyperbolic-horizontal", hyp,
                       (vf(hyp, 1, 0),), ((-1.0, 1.0), (1.0, 3.0)), False),
        InvarianceCase("sphere-meridians", sph,
                       (vf(sph, 1, 0),), ((1.0, 2.0), (-1.0, 1.0)), True),
        InvarianceCase("sphere-parallels", sph,
                       (vf(sph, 0, 1),), ((1.0, 2.0), (-1.0, 1.0)), False),
    ]
