import numpy as np
import pytest

from connlab import catalog
from connlab.geometry import (ChartDomain, Connection, MetricField, OutOfBounds,
                              SingularMetric, TangentPoint, VectorField,
                              christoffel_from_metric, covariant_derivative,
                              covariant_derivative_at, lie_bracket, symmetric_product,
                              torsion, torsion_free_part)

R2 = catalog.flat(2)
R3 = catalog.flat(3)
EPS = catalog.constant_torsion()


def vf(c, *comps):
    return VectorField(tuple(comps), c.domain)


def rand_points(c, k, seed=0, box=1.0):
    return np.random.default_rng(seed).uniform(-box, box, (k, c.dim))


def test_flat_constant_fields():
    assert np.all(covariant_derivative(R2, vf(R2, 1, 0), vf(R2, 0, 1))((0.3, 0.7)) == 0)


def test_flat_covariant_derivative_matches_finite_differences():
    X, Y = vf(R2, "x2", 0), vf(R2, 0, "x1")
    nab = covariant_derivative(R2, X, Y)
    h = 1e-6
    for x in rand_points(R2, 10):
        fd = (Y(x + h * X(x)) - Y(x - h * X(x))) / (2 * h)
        assert np.allclose(nab(x), fd, atol=1e-8)
        assert np.allclose(nab(x), (0, x[1]))


def test_zero_second_argument():
    X = vf(EPS, "x1*x2", "sin(x3)", 1)
    assert np.all(covariant_derivative(EPS, X, VectorField.zero(EPS.domain))((0.1, 0.2, 0.3)) == 0)


def test_covariant_derivative_at():
    v = TangentPoint((0, 0), (1, 0))
    assert np.allclose(covariant_derivative_at(R2, v, vf(R2, 0, "x1")), (0, 1))
    assert np.all(covariant_derivative_at(R2, TangentPoint((1, 1), (0, 0)), vf(R2, 0, "x1")) == 0)
    dom = ChartDomain(1, ((-5, 5),))
    c = Connection.from_sparse({(0, 0, 0): 1.0}, dom)
    out = covariant_derivative_at(c, TangentPoint((0,), (2,)), VectorField(("x1",), dom))
    assert np.allclose(out, (2,))


def test_tensoriality_three_extensions():
    c = catalog.hyperbolic_half_plane()
    Y = vf(c, "x1*x2", "x1^2 - x2")
    x = np.array([0.4, 1.3])
    v = np.array([0.7, -0.2])
    exts = [vf(c, 0.7, -0.2),
            vf(c, "0.7 + (x1 - 0.4)*x2", "-0.2 + (x2 - 1.3)^2"),
            vf(c, "0.7*x2/1.3", "-0.2*cos(x1 - 0.4)")]
    direct = covariant_derivative_at(c, TangentPoint(x, v), Y)
    for X in exts:
        assert np.allclose(covariant_derivative(c, X, Y)(x), direct, atol=1e-10)


def test_torsion_examples():
    assert np.all(torsion(R3, vf(R3, "x2", 1, 0), vf(R3, 0, "x3", 1))((1, 2, 3)) == 0)
    T = torsion(EPS, vf(EPS, 1, 0, 0), vf(EPS, 0, 1, 0))
    assert np.allclose(T((0.1, 0.2, 0.3)), (0, 0, 2))
    X, Y = vf(EPS, "x2", "x3^2", "x1"), vf(EPS, 1, "x1*x2", "sin(x2)")
    for x in rand_points(EPS, 10):
        assert np.allclose(torsion(EPS, X, Y)(x), -torsion(EPS, Y, X)(x))


def test_torsion_free_part():
    assert torsion_free_part(EPS).is_symmetric()
    bar = torsion_free_part(EPS)
    assert np.all(bar.christoffel((0.2, 0.1, -0.3)) == 0)
    h = catalog.hyperbolic_half_plane()
    x = (0.3, 1.7)
    assert np.allclose(torsion_free_part(h).christoffel(x), h.christoffel(x))
    X, Y = vf(EPS, "x2", 1, "x1*x3"), vf(EPS, "x3", "x1^2", 2)
    for x in rand_points(EPS, 5):
        lhs = covariant_derivative(bar, X, Y)(x)
        rhs = covariant_derivative(EPS, X, Y)(x) - 0.5 * torsion(EPS, X, Y)(x)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_lie_bracket():
    assert np.all(lie_bracket(vf(R2, 1, 2), vf(R2, 3, 4))((1, 1)) == 0)
    X, Y = vf(R2, "x2", 0), vf(R2, 0, "x1")
    br = lie_bracket(X, Y)
    h = 1e-6
    for x in rand_points(R2, 5):
        assert np.allclose(br(x), (-x[0], x[1]))
        DX = np.column_stack([(X(x + h * e) - X(x - h * e)) / (2 * h) for e in np.eye(2)])
        DY = np.column_stack([(Y(x + h * e) - Y(x - h * e)) / (2 * h) for e in np.eye(2)])
        assert np.allclose(br(x), DY @ X(x) - DX @ Y(x), atol=1e-8)
    Z = vf(R2, "sin(x1)*x2", "exp(x2)")
    assert np.all(lie_bracket(Z, Z)((0.3, 0.2)) == 0)


def test_symmetric_product():
    X, Y = vf(R2, "x2", 0), vf(R2, 0, "x1")
    assert np.allclose(symmetric_product(R2, X, Y)((1, 2)), (1, 2))
    c = catalog.sphere_chart()
    A, B = vf(c, "x2", "cos(x1)"), vf(c, 1, "x1*x2")
    for x in ([1.2, 0.3], [1.8, -0.5]):
        assert np.allclose(symmetric_product(c, A, B)(x), symmetric_product(c, B, A)(x))
        assert np.allclose(symmetric_product(c, A, A)(x), 2 * covariant_derivative(c, A, A)(x))


def test_christoffel_from_metric(oracles):
    dom = ChartDomain(2, ((-1, 1), (-1, 1)))
    flat = christoffel_from_metric(MetricField(((1, 0), (0, 1)), dom))
    assert np.all(flat.christoffel((0.1, 0.2)) == 0)
    h = catalog.hyperbolic_half_plane()
    assert oracles["hyperbolic_gamma_1_12"] == "-1/x2"
    for y in (0.5, 1.0, 3.0):
        assert h.christoffel((0.0, y))[0, 0, 1] == pytest.approx(-1 / y)
    assert h.is_symmetric()
    s = catalog.sphere_chart()
    th = 1.1
    G = s.christoffel((th, 0.0))
    assert G[0, 1, 1] == pytest.approx(-np.sin(2 * th) / 2)
    assert G[1, 0, 1] == pytest.approx(1 / np.tan(th))


def test_singular_metric():
    dom = ChartDomain(2, ((-1, 1), (-1, 1)))
    g = MetricField((("x1", 0), (0, 1)), dom)
    with pytest.raises(SingularMetric):
        christoffel_from_metric(g, probes=[(0.0, 0.0)])


def test_out_of_bounds():
    with pytest.raises(OutOfBounds):
        covariant_derivative_at(R2, TangentPoint((20, 0), (1, 0)), vf(R2, 0, "x1"))


def test_tangent_point_immutable():
    v = TangentPoint((1, 2), (3, 4))
    with pytest.raises(ValueError):
        v.base[0] = 5
    assert v == TangentPoint.from_array(v.as_array(), 2)
