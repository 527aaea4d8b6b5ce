import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from connlab import catalog
from connlab.geometry import TangentPoint, VectorField, covariant_derivative_at
from connlab.ttm import (AnchorMismatch, TTMPoint, add_primary, add_secondary,
                         bracket_vertical_check, complete_lift_at,
                         complete_lift_involution_check, hlft, interchange_check,
                         involution, project_primary, project_secondary,
                         scaling_commute_check, sub_primary, tangent_map_at,
                         torsion_lemma_check, vertical_involution_check, vlft)

R1 = catalog.flat(1)
R3 = catalog.flat(3)
EPS = catalog.constant_torsion()

vec3 = st.lists(st.floats(-2, 2, allow_nan=False), min_size=3, max_size=3).map(np.array)


def test_vlft():
    v = TangentPoint((1, 2), (3, 4))
    w = vlft(v, (0, 0))
    assert w == TTMPoint((1, 2), (3, 4), (0, 0), (0, 0))
    w = vlft(v, (5, 6))
    assert project_primary(w) == v
    assert project_secondary(w) == TangentPoint((1, 2), (0, 0))
    assert add_primary(vlft(v, (1, 0)), vlft(v, (0, 2))) == vlft(v, (1, 2))


def test_hlft():
    v = TangentPoint((0.1, 0.2, 0.3), (1, 2, 3))
    assert hlft(R3, v, (4, 5, 6)) == TTMPoint(v.base, v.fiber, (4, 5, 6), (0, 0, 0))
    dom = R1.domain
    from connlab.geometry import Connection
    c = Connection.from_sparse({(0, 0, 0): 1.0}, dom)
    assert hlft(c, TangentPoint((0,), (2,)), (3,)).c[0] == -6


def test_hlft_from_extension():
    # hlft(v, u) = TX(u) -1 vlft(v, nabla_u X) for any X with X(x) = v
    c = catalog.hyperbolic_half_plane()
    x = np.array([0.2, 1.4])
    X = VectorField(("0.5 + (x1 - 0.2)*x2", "-1 + x1^2 - 0.04"), c.domain)
    u = np.array([0.3, -0.7])
    vx = TangentPoint(x, X(x))
    rhs = sub_primary(tangent_map_at(X, TangentPoint(x, u)),
                      vlft(vx, covariant_derivative_at(c, TangentPoint(x, u), X)))
    assert np.allclose(hlft(c, vx, u).as_array(), rhs.as_array(), atol=1e-12)


def test_complete_lift_and_tangent_map():
    X = VectorField(("x1",), R1.domain)
    assert complete_lift_at(X, TangentPoint((2,), (5,))) == TTMPoint((2,), (5,), (2,), (5,))
    Xc = VectorField((3, -1, 2), R3.domain)
    assert np.all(complete_lift_at(Xc, TangentPoint((0, 0, 0), (1, 1, 1))).c == 0)
    Xs = VectorField(("x1^2",), R1.domain)
    assert tangent_map_at(Xs, TangentPoint((1,), (3,))) == TTMPoint((1,), (1,), (3,), (6,))
    z = tangent_map_at(Xs, TangentPoint((1,), (0,)))
    assert z.b[0] == 0 and z.c[0] == 0


def test_anchor_mismatch():
    w1 = TTMPoint((0,), (1,), (2,), (3,))
    w2 = TTMPoint((0,), (1.1,), (2,), (3,))
    with pytest.raises(AnchorMismatch):
        add_primary(w1, w2)
    assert add_secondary(w1, w2) == TTMPoint((0,), (2.1,), (2,), (6,))


def test_involution():
    w = TTMPoint((1, 2), (3, 4), (5, 6), (7, 8))
    assert involution(involution(w)) == w
    assert project_primary(involution(w)) == project_secondary(w)
    fixed = TTMPoint((1, 2), (3, 4), (3, 4), (7, 8))
    assert involution(fixed) == fixed


@settings(max_examples=50, deadline=None)
@given(vec3, vec3, vec3, vec3, vec3, st.lists(vec3, min_size=4, max_size=4))
def test_interchange_law(x, a1, a2, b1, b2, cs):
    assert interchange_check(x, a1, a2, b1, b2, cs) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), vec3, vec3, vec3, vec3)
def test_scalings_commute(a, b, x, p, q, r):
    assert scaling_commute_check(a, b, TTMPoint(x, p, q, r)) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(vec3, vec3, vec3, vec3, vec3)
def test_vertical_involution(x, a, b, c, z):
    assert vertical_involution_check(TTMPoint(x, a, b, c), z) <= 1e-12


def test_complete_lift_is_involution_of_tangent_map():
    rng = np.random.default_rng(3)
    X = VectorField(("x2*x3", "sin(x1)", "x1^2 - x3"), R3.domain)
    for _ in range(10):
        v = TangentPoint(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
        assert complete_lift_involution_check(X, v) == 0


def test_bracket_vertical():
    X = VectorField(("x2", 0), catalog.flat(2).domain)
    Y = VectorField((0, "x1"), X.domain)
    assert bracket_vertical_check(X, Y, (1, 2)) <= 1e-14


def test_torsion_lemma():
    rng = np.random.default_rng(1)
    for c in (R3, EPS):
        for _ in range(10):
            v = TangentPoint(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
            assert torsion_lemma_check(c, v, rng.uniform(-1, 1, 3)) <= 1e-12
    # torsion-free: hlft(v,u) = I_M hlft(u,v) exactly
    h = catalog.hyperbolic_half_plane()
    v = TangentPoint((0.1, 1.2), (0.3, 0.4))
    u = np.array([-0.5, 0.2])
    assert hlft(h, v, u) == involution(hlft(h, TangentPoint(v.base, u), v.fiber))
