"""Degree <= 2 Baker-Campbell-Hausdorff terms for vector fields."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .flows import DEFAULT, IntegratorConfig, flow
from .geometry import DimensionMismatch, VectorField, lie_bracket


@dataclass(frozen=True)
class WeightedField:
    coefficient: float
    field: VectorField


def _check(terms: Sequence[WeightedField]) -> None:
    if not terms:
        raise ValueError("BCH terms need a nonempty list")
    dom = terms[0].field.domain
    for term in terms[1:]:
        if term.field.dim != dom.dim:
            raise DimensionMismatch("BCH terms live on charts of different dimension")


def bch1(terms: Sequence[WeightedField]) -> VectorField:
    """sum_i t_i X_i."""
    _check(terms)
    out = VectorField.zero(terms[0].field.domain)
    for term in terms:
        out = out + term.field.scale(term.coefficient)
    return out


def bch2(terms: Sequence[WeightedField]) -> VectorField:
    """1/2 sum_{a<b} t_a t_b [X_a, X_b]."""
    _check(terms)
    out = VectorField.zero(terms[0].field.domain)
    for a in range(len(terms)):
        for b in range(a + 1, len(terms)):
            w = 0.5 * terms[a].coefficient * terms[b].coefficient
            if w != 0.0:
                out = out + lie_bracket(terms[a].field, terms[b].field).scale(w)
    return out


def compose_flows(terms: Sequence[WeightedField], x,
                  cfg: IntegratorConfig = DEFAULT) -> np.ndarray:
    """Phi^{X_k}_{t_k} o ... o Phi^{X_1}_{t_1}(x); the first term acts first."""
    y = np.asarray(x, dtype=float)
    for term in terms:
        y = flow(term.field, y, term.coefficient, cfg)
    return y


def asymptotic_check(terms: Sequence[WeightedField], x, t: float = 1.0,
                     cfg: IntegratorConfig = DEFAULT) -> float:
    """Residual of the degree-2 truncation for the word with coefficients scaled by t.

    Each coefficient is multiplied by ``t``; the composed flows are compared with
    the time-one flow of bch1 + bch2.  The residual is O(t^3).
    """
    scaled = [WeightedField(t * term.coefficient, term.field) for term in terms]
    lhs = compose_flows(scaled, x, cfg)
    rhs = flow(bch1(scaled) + bch2(scaled), x, 1.0, cfg)
    return float(np.linalg.norm(lhs - rhs))
