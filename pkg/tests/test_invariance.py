import numpy as np
import pytest

from connlab import catalog
from connlab.geometry import TangentPoint, VectorField
from connlab.invariance import (Distribution, Probe, RankDropError, classify,
                                geodesic_invariance_scan, make_probes, membership_residual,
                                symmetric_closure_scan, theorem_equivalence_harness,
                                vector_field_in_distribution, xc_xh_identity_check,
                                xh_restricted_check, xvzyv_identity_check)

R2 = catalog.flat(2)
R3 = catalog.flat(3)
EPS = catalog.constant_torsion()


def vf(c, *comps):
    return VectorField(tuple(comps), c.domain)


def twisted(c=R3):
    return Distribution((vf(c, 1, 0, 0), vf(c, 0, 1, "x1")))


def plane(c=R3):
    return Distribution((vf(c, 1, 0, 0), vf(c, 0, 1, 0)))


PROBES = make_probes(((-1, 1),) * 3, 2, 20, seed=0)


def test_membership():
    D = twisted()
    x = np.array([1.0, 0.0, 0.0])
    assert membership_residual(D, TangentPoint(x, D.generators[1](x))) <= 1e-15
    assert membership_residual(D, TangentPoint(x, (0, 0, 1))) == pytest.approx(1 / np.sqrt(2))
    assert membership_residual(D, TangentPoint(x, (0, 0, 0))) == 0


def test_rank_drop():
    D = Distribution((vf(R2, "x1", 0), vf(R2, 0, 1)))
    with pytest.raises(RankDropError):
        membership_residual(D, TangentPoint((0, 0), (1, 0)))


def test_vector_field_in_distribution():
    D = twisted()
    pts = [p.base for p in PROBES]
    assert vector_field_in_distribution(D, D.generators[0], pts) <= 1e-10
    assert vector_field_in_distribution(D, D.generators[0] + D.generators[1], pts) <= 1e-10
    assert vector_field_in_distribution(D, vf(R3, 0, 0, 1), [(1, 0, 0)]) == pytest.approx(1 / np.sqrt(2))


def test_rescaling_and_redundant_generator():
    D = twisted()
    D2 = Distribution((D.generators[0].scale(3.0), D.generators[1].scale(-0.5)))
    D3 = Distribution(D.generators + (D.generators[0] + D.generators[1],), rank=2)
    rng = np.random.default_rng(0)
    for _ in range(10):
        v = TangentPoint(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
        r = membership_residual(D, v)
        assert membership_residual(D2, v) == pytest.approx(r, rel=1e-10, abs=1e-14)
        assert membership_residual(D3, v) == pytest.approx(r, abs=1e-8)


def test_geodesic_scan():
    assert geodesic_invariance_scan(R3, plane(), PROBES, 0.5).worst <= 1e-9
    one = [Probe(np.array([1.0, 0.0, 0.0]), np.array([1.0, 1.0]))]
    assert geodesic_invariance_scan(R3, twisted(), one, 0.5).worst > 1e-2
    zero = [Probe(p.base, np.zeros(2)) for p in PROBES]
    assert geodesic_invariance_scan(R3, twisted(), zero, 0.5).worst == 0


def test_geodesic_scan_skips_escaping_probes():
    D = Distribution((vf(R2, 1, 0),))
    far = [Probe(np.array([9.9, 0.0]), np.array([1.0])), Probe(np.array([0.0, 0.0]), np.array([1.0]))]
    res = geodesic_invariance_scan(R2, D, far, 0.5)
    assert len(res.skipped) == 1 and res.worst == 0


def test_symmetric_closure():
    assert symmetric_closure_scan(R3, plane(), PROBES).worst == 0
    one = [Probe(np.array([1.0, 0.0, 0.0]), np.array([1.0, 1.0]))]
    assert symmetric_closure_scan(R3, twisted(), one).worst == pytest.approx(1 / np.sqrt(2))
    full = Distribution((vf(R3, 1, 0, 0), vf(R3, 0, 1, 0), vf(R3, 0, 0, 1)))
    probes3 = make_probes(((-1, 1),) * 3, 3, 5, seed=1)
    assert symmetric_closure_scan(EPS, full, probes3).worst <= 1e-15


def test_harness():
    v = theorem_equivalence_harness(R3, plane(), PROBES, 0.5)
    assert v.verdicts == (True, True, True) and v.agree
    v = theorem_equivalence_harness(R3, twisted(), PROBES, 0.5)
    assert v.verdicts == (False, False, False) and v.counterexample is not None
    v = theorem_equivalence_harness(EPS, plane(EPS), PROBES, 0.5)
    assert v.agree


def test_classify_band():
    assert classify(1e-7) is True
    assert classify(1e-5) is None
    assert classify(1e-3) is False


def test_catalog_cases_agree():
    for case in catalog.invariance_cases():
        D = Distribution(case.generators)
        probes = make_probes(case.probe_box, len(case.generators), 20, seed=0)
        v = theorem_equivalence_harness(case.connection, D, probes, 0.5)
        assert v.agree and v.geodesic_invariant is case.invariant, case.name


def test_xc_xh():
    rng = np.random.default_rng(4)
    assert xc_xh_identity_check(R3, vf(R3, 1, 2, 3), TangentPoint((0, 0, 0), (1, 1, 1))) == 0
    for c in (catalog.hyperbolic_half_plane(), catalog.sphere_chart(), EPS):
        X = vf(c, *[f"x{(i + 1) % c.dim + 1}^2 + 0.3" for i in range(c.dim)])
        for _ in range(5):
            base = np.array([1.5] * c.dim) + rng.uniform(-0.3, 0.3, c.dim)
            v = TangentPoint(base, rng.uniform(-1, 1, c.dim))
            assert xc_xh_identity_check(c, X, v) <= 1e-10


def test_xvzyv():
    assert xvzyv_identity_check(R2, vf(R2, 1, 0), vf(R2, 2, 3), TangentPoint((0, 0), (1, 1))) == 0
    X, Y = vf(R2, "x2", 0), vf(R2, 0, "x1")
    assert xvzyv_identity_check(R2, X, Y, TangentPoint((1, 2), (3, 4))) <= 1e-14
    assert xvzyv_identity_check(R2, VectorField.zero(R2.domain), Y, TangentPoint((1, 2), (3, 4))) == 0
    h = catalog.hyperbolic_half_plane()
    v = TangentPoint((0.3, 1.2), (0.5, -0.4))
    assert xvzyv_identity_check(h, vf(h, "x1*x2", 1), vf(h, "sin(x1)", "x2^2"), v) <= 1e-9


def test_xh_restricted():
    D = plane()
    assert xh_restricted_check(R3, D, D.generators[0], 1.0, (1, 0, 0)) <= 1e-9
    T = twisted()
    X = T.generators[0] + T.generators[1]
    assert xh_restricted_check(R3, T, X, 1.0, (1, 0, 0)) > 1e-2
    # degenerate frame: the check refuses rather than guessing a tangent space
    Z = Distribution((vf(R2, "x1", 0), vf(R2, 0, 1)))
    with pytest.raises(RankDropError):
        xh_restricted_check(R2, Z, Z.generators[0], 0.0, (0.0, 0.5))


def test_xh_restricted_zero_field():
    D = Distribution((vf(R2, 1, 0),))
    X = vf(R2, "x1", 0)
    assert xh_restricted_check(R2, D, X, 0.0, (0.0, 0.3)) == 0
