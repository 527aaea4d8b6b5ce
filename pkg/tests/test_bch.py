import numpy as np
import pytest

from connlab import catalog
from connlab.bch import WeightedField as W
from connlab.bch import asymptotic_check, bch1, bch2
from connlab.geometry import DimensionMismatch, VectorField, lie_bracket
from connlab.suites import eight_flow_terms

R2 = catalog.flat(2)
X = VectorField(("x2", 0), R2.domain)
Y = VectorField((0, "x1"), R2.domain)
PTS = np.random.default_rng(5).uniform(-1, 1, (10, 2))


def same(F, G):
    return all(np.allclose(F(p), G(p), atol=1e-14) for p in PTS)


def test_bch1():
    assert same(bch1([W(1.0, X)]), X)
    assert same(bch1([W(0.3, X), W(-0.3, X)]), VectorField.zero(R2.domain))
    assert same(bch1([W(1.0, X), W(1.0, Y)]), X + Y)


def test_bch2():
    assert same(bch2([W(1.0, X), W(1.0, Y)]), lie_bracket(X, Y).scale(0.5))
    E1, E2 = VectorField((1, 0), R2.domain), VectorField((0, 1), R2.domain)
    assert same(bch2([W(1.0, E1), W(1.0, E2)]), VectorField.zero(R2.domain))
    t = 0.3
    four = bch2([W(t, Y), W(t, X), W(-t, Y), W(-t, X)])
    assert same(four, lie_bracket(Y, X).scale(t * t))
    assert same(bch2([W(t, X), W(t, Y)]), -bch2([W(t, Y), W(t, X)]))


def test_errors():
    with pytest.raises(ValueError):
        bch1([])
    with pytest.raises(DimensionMismatch):
        bch2([W(1.0, X), W(1.0, VectorField((1, 0, 0), catalog.flat(3).domain))])


def test_asymptotic_check(oracles):
    assert asymptotic_check([W(1.0, VectorField(("x1*x2", "sin(x1)"), R2.domain))],
                            (0.2, 0.3), 0.1) <= 1e-9
    E1, E2 = VectorField((1, 0), R2.domain), VectorField((0, 1), R2.domain)
    for t in (0.1, 0.05):
        assert asymptotic_check([W(1.0, E1), W(2.0, E2)], (0.2, 0.3), t) <= 1e-9
    lw = oracles["linear_words"]
    r1 = asymptotic_check([W(1.0, X), W(1.0, Y)], (1, 2), 0.1)
    r2 = asymptotic_check([W(1.0, X), W(1.0, Y)], (1, 2), 0.05)
    assert r1 == pytest.approx(lw["bch_residual_0.1"], rel=1e-8)
    assert r2 == pytest.approx(lw["bch_residual_0.05"], rel=1e-8)
    assert 6 <= r1 / r2 <= 10


def test_bch1_vanishes_on_lifted_word():
    rng = np.random.default_rng(2)
    for c in (catalog.hyperbolic_half_plane(), catalog.constant_torsion()):
        n = c.dim
        X1 = VectorField(tuple(f"x{(i + 1) % n + 1}" for i in range(n)), c.domain)
        X2 = VectorField(tuple(f"x{i + 1}^2" for i in range(n)), c.domain)
        F = bch1(eight_flow_terms(c, X1, X2, 0.1))
        for _ in range(50):
            base = rng.uniform(-1, 1, n)
            if n == 2:
                base[1] = rng.uniform(1, 3)
            v = np.concatenate([base, rng.uniform(-1, 1, n)])
            assert np.linalg.norm(F(v)) <= 1e-10
