"""JSON problem definitions.

Keys (all optional except a connection):

    dim, bounds                chart; taken from the catalog when omitted
    connection | connections   {"catalog": name, "params": {...}}
                               {"christoffel": {"k,i,j": expr, ...}}   (1-based)
                               {"metric": [[expr, ...], ...]}
    fields                     {name: [expr, ...]}
    distributions              {name: [field name, ...]}
    probes                     {"box": [[lo, hi], ...], "random": 20, "seed": 0}
    integrator                 {"substeps_per_unit_time": 200, "min_steps": 10}
    estimator                  {"t": 0.01, "richardson": true, "kinds": [...],
                                "pair": [name, name], "point": [[x...], [v...]]}
    invariance                 {"horizon": 0.5, "threshold": 1e-5}
    verify                     {"draws": 20}
    convergence                {"target": "lie-bracket", "t0": 0.1, "levels": 8}
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import catalog
from .expr import ExprError
from .flows import IntegratorConfig
from .geometry import (ChartDomain, Connection, GeometryError, MetricField, VectorField,
                       christoffel_from_metric)
from .invariance import Distribution
from .symprod import ALL_KINDS, Kind


class ConfigError(ValueError):
    pass


def _section(raw: dict, key: str) -> dict:
    val = raw.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"'{key}' must be an object")
    return val


def _bounds(raw, dim: int):
    try:
        b = tuple((float(lo), float(hi)) for lo, hi in raw)
    except (TypeError, ValueError):
        raise ConfigError("bounds must be a list of [lo, hi] pairs") from None
    if len(b) != dim:
        raise ConfigError(f"{len(b)} bounds for dimension {dim}")
    return b


def _parse_key(key: str, dim: int) -> tuple[int, int, int]:
    try:
        k, i, j = (int(s) - 1 for s in key.replace(" ", "").split(","))
    except ValueError:
        raise ConfigError(f"christoffel key {key!r} is not 'k,i,j'") from None
    if not all(0 <= a < dim for a in (k, i, j)):
        raise ConfigError(f"christoffel key {key!r} out of range 1..{dim}")
    return k, i, j


def build_connection(name: str, entry: dict, dim: int | None, bounds) -> Connection:
    if not isinstance(entry, dict):
        raise ConfigError(f"connection {name!r} must be an object")
    try:
        if "catalog" in entry:
            c = catalog.connection(entry["catalog"], **entry.get("params", {}))
            if dim is not None and c.dim != dim:
                raise ConfigError(f"catalog connection {entry['catalog']!r} has dimension "
                                  f"{c.dim}, config says {dim}")
            if bounds is not None:
                c = Connection(c.gamma, ChartDomain(c.dim, _bounds(bounds, c.dim)), c.name)
            return c
        if dim is None or bounds is None:
            raise ConfigError(f"connection {name!r} needs 'dim' and 'bounds'")
        dom = ChartDomain(dim, _bounds(bounds, dim))
        if "christoffel" in entry:
            entries = {_parse_key(k, dim): v for k, v in entry["christoffel"].items()}
            return Connection.from_sparse(entries, dom, name=name)
        if "metric" in entry:
            g = MetricField(tuple(tuple(row) for row in entry["metric"]), dom)
            return christoffel_from_metric(g, name=name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    except (ExprError, GeometryError, TypeError) as exc:
        raise ConfigError(f"connection {name!r}: {exc}") from None
    raise ConfigError(f"connection {name!r} needs one of catalog, christoffel, metric")


@dataclass
class ProblemConfig:
    connections: dict[str, Connection]
    fields: dict[str, list]
    distributions: dict[str, list[str]]
    default_boxes: dict = field(default_factory=dict)
    probe_box: list | None = None
    probe_random: int = 20
    seed: int = 0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    t: float = 1e-2
    richardson: bool = True
    kinds: tuple[Kind, ...] = ALL_KINDS
    pair: tuple[str, str] | None = None
    point: tuple[list, list] | None = None
    horizon: float = 0.5
    threshold: float = 1e-5
    draws: int = 20
    target: str = "lie-bracket"
    t0: float = 0.1
    levels: int = 8

    # -- lookups ---------------------------------------------------------

    def connection(self, name: str | None = None) -> tuple[str, Connection]:
        if name is None:
            name = next(iter(self.connections))
        try:
            return name, self.connections[name]
        except KeyError:
            raise ConfigError(f"unknown connection {name!r}") from None

    def field(self, name: str, c: Connection) -> VectorField:
        try:
            comps = self.fields[name]
        except KeyError:
            raise ConfigError(f"unknown field {name!r}") from None
        try:
            return VectorField(tuple(comps), c.domain)
        except (ExprError, GeometryError) as exc:
            raise ConfigError(f"field {name!r}: {exc}") from None

    def distribution(self, name: str, c: Connection) -> Distribution:
        try:
            gens = self.distributions[name]
        except KeyError:
            raise ConfigError(f"unknown distribution {name!r}") from None
        return Distribution([self.field(g, c) for g in gens], c.domain, name=name)

    def box(self, c: Connection) -> np.ndarray:
        if self.probe_box is not None:
            b = np.asarray(self.probe_box, dtype=float)
            if b.shape != (c.dim, 2):
                raise ConfigError(f"probe box must have {c.dim} [lo, hi] rows")
            return b
        for name, conn in self.connections.items():
            if conn is c and name in self.default_boxes:
                return np.asarray(self.default_boxes[name], dtype=float)
        # shrink the chart to keep probes and short flows inside it
        b = np.asarray(c.domain.bounds, dtype=float)
        mid, half = b.mean(axis=1), (b[:, 1] - b[:, 0]) / 2
        half = np.minimum(half / 2, 1.0)
        return np.column_stack([mid - half, mid + half])


def _kinds(raw) -> tuple[Kind, ...]:
    try:
        return tuple(Kind(k) for k in raw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def from_dict(raw: dict) -> ProblemConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    dim = raw.get("dim")
    bounds = raw.get("bounds")
    defs = raw.get("connections")
    if defs is None:
        if "connection" not in raw:
            raise ConfigError("config needs 'connection' or 'connections'")
        defs = {"main": raw["connection"]}
    if not isinstance(defs, dict) or not defs:
        raise ConfigError("'connections' must be a nonempty object")
    conns = {name: build_connection(name, entry, dim, bounds) for name, entry in defs.items()}
    boxes = {name: catalog.probe_box(entry["catalog"], conns[name].dim)
             for name, entry in defs.items() if "catalog" in entry and bounds is None}

    fields = raw.get("fields", {})
    if not isinstance(fields, dict):
        raise ConfigError("'fields' must be an object")
    dists = raw.get("distributions", {})
    for dname, gens in dists.items():
        for g in gens:
            if g not in fields:
                raise ConfigError(f"distribution {dname!r} refers to unknown field {g!r}")

    probes = _section(raw, "probes")
    est = _section(raw, "estimator")
    inv = _section(raw, "invariance")
    ver = _section(raw, "verify")
    conv = _section(raw, "convergence")
    try:
        cfg = ProblemConfig(
            connections=conns, fields=fields, distributions=dists, default_boxes=boxes,
            probe_box=probes.get("box"), probe_random=int(probes.get("random", 20)),
            seed=int(probes.get("seed", 0)),
            integrator=IntegratorConfig(**_section(raw, "integrator")),
            t=float(est.get("t", 1e-2)), richardson=bool(est.get("richardson", True)),
            kinds=_kinds(est.get("kinds", [k.value for k in ALL_KINDS])),
            pair=tuple(est["pair"]) if "pair" in est else None,
            point=tuple(est["point"]) if "point" in est else None,
            horizon=float(inv.get("horizon", 0.5)),
            threshold=float(inv.get("threshold", 1e-5)),
            draws=int(ver.get("draws", 20)),
            target=str(conv.get("target", "lie-bracket")),
            t0=float(conv.get("t0", 0.1)), levels=int(conv.get("levels", 8)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.pair is not None:
        for name in cfg.pair:
            if name not in fields:
                raise ConfigError(f"estimator pair refers to unknown field {name!r}")
    if cfg.levels < 1:
        raise ConfigError("convergence levels must be >= 1")
    return cfg


def load(path) -> ProblemConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    return from_dict(raw)


# ---------------------------------------------------------------------------
# Random draws


def random_polynomial_field(domain: ChartDomain, rng: np.random.Generator,
                            degree: int = 2, scale: float = 1.0) -> VectorField:
    """Polynomial field of total degree <= ``degree`` with coefficients in [-s, s].

    ``s`` is ``scale`` divided by the number of monomials so the field stays
    moderate on a unit box.
    """
    n = domain.dim
    monos = [m for m in itertools.product(range(degree + 1), repeat=n) if sum(m) <= degree]
    s = scale / len(monos)
    comps = []
    for _ in range(n):
        terms = []
        for m in monos:
            a = rng.uniform(-s, s)
            factors = [f"x{i + 1}^{p}" for i, p in enumerate(m) if p > 0]
            terms.append("*".join([f"({a!r})"] + factors))
        comps.append(" + ".join(terms))
    return VectorField(tuple(comps), domain)
