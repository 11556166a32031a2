from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given

from carnot.dnc import (Dnc2Cone, Dnc2Normal, Dnc2Off, DncFiber, DncOff, TubularData, chart_curve,
                        chart_transition, chart_transition_test, curve_class, dnc2_chart, dnc_chart,
                        dnc_lambda, dnc_map, dnc_smooth_fn, lambda0, lambda1, lambda_relation_test, pi01,
                        product_tubular, quotient_fiber_check, weighted_chart, CurveClass, curve_pushforward,
                        dnc_chart_inverse, trivialize_dnc)
from carnot.convergence import EXACT, is_passing
from conftest import rationals
from errors import CurveMembershipError, DimensionMismatchError, TubularDataError, VanishingConditionError
from symexpr import Expr

F = Fraction
XN = ("x", "n")
IDENTITY = TubularData.identity(XN, 1)
QUADRATIC = TubularData.parse(XN, 1, ["x", "n + x*n^2"])
PROBES = [((F(2),), (F(1),)), ((F(-1, 2),), (F(3, 2),)), ((F(1),), (F(-1),))]


# ---------------- 管狀資料 ----------------
@pytest.mark.parametrize("phi", [["x", "n + 1"], ["x + n", "n"], ["x", "x*n"], ["x", "n^2"]],
                         ids=["not-on-zero-section", "v-row", "non-constant-L", "singular-L"])
def test_invalid_tubular_data(phi):
    with pytest.raises(TubularDataError):
        TubularData.parse(XN, 1, phi)


def test_tubular_invert_round_trip():
    m = QUADRATIC.apply((0.5,), (0.2,))
    x, Y = QUADRATIC.invert(m)
    assert np.allclose(x + Y, (0.5, 0.2), atol=1e-12)


# ---------------- 座標圖 ----------------
def test_dnc_chart_examples():
    x, X = (F(3),), (F(5),)
    assert dnc_chart(IDENTITY, x, X, 1) == DncOff((3, 5), 1)
    assert dnc_chart(IDENTITY, x, X, 0) == DncFiber(x, X)
    assert dnc_chart(IDENTITY, x, X, F(1, 2)) == DncOff((3, F(5, 2)), F(1, 2))


@pytest.mark.parametrize("tub", [IDENTITY, QUADRATIC], ids=["identity", "quadratic"])
@pytest.mark.parametrize("t", [F(0), F(1, 3), F(-2)])
def test_dnc_chart_lambda_equivariance(tub, t):
    x, X = (F(1, 2),), (F(-3, 4),)
    for u in (F(2), F(-1, 5)):
        assert dnc_chart(tub, x, tuple(c / u for c in X), u * t) == dnc_lambda(u, dnc_chart(tub, x, X, t))


def test_product_chart_is_pair_of_factor_charts():
    other = TubularData.identity(("y", "m"), 1)
    prod = product_tubular(QUADRATIC, other)
    assert prod.coords == ("x", "y", "n", "m")
    x1, X1, x2, X2, t = (F(1, 3),), (F(2),), (F(-1),), (F(1, 2),), F(1, 4)
    p = dnc_chart(prod, x1 + x2, X1 + X2, t)
    a = dnc_chart(QUADRATIC, x1, X1, t)
    b = dnc_chart(other, x2, X2, t)
    assert p.m == (a.m[0], b.m[0], a.m[1], b.m[1])
    assert p.t == a.t == b.t


def test_dnc_chart_inverse():
    p = dnc_chart(QUADRATIC, (0.5,), (0.4,), 0.25)
    x, X, t = dnc_chart_inverse(QUADRATIC, p)
    assert np.allclose(x + X, (0.5, 0.4), atol=1e-10)
    assert t == 0.25
    assert dnc_chart_inverse(QUADRATIC, DncFiber((F(1),), (F(2),))) == ((F(1),), (F(2),), 0)


def test_trivialize_coordinate_subspace():
    assert trivialize_dnc(DncOff((3, F(5, 2)), F(1, 2)), 1) == (3, 5, F(1, 2))
    assert trivialize_dnc(DncFiber((3,), (5,)), 1) == (3, 5, 0)
    # t → 0 時與纖維點接上
    x, X = (F(3),), (F(5),)
    assert trivialize_dnc(dnc_chart(IDENTITY, x, X, F(1, 8)), 1) == x + X + (F(1, 8),)


# ---------------- dnc(f) ----------------
def test_linear_function_exact_at_all_t():
    fn = dnc_smooth_fn(IDENTITY, "n")
    assert fn(dnc_chart(IDENTITY, (F(1),), (F(7),), F(1, 8))) == 7
    report = fn.limit_test(PROBES)
    assert report.status == EXACT


def test_quadratic_function_vanishes_on_fiber():
    fn = dnc_smooth_fn(IDENTITY, "n^2")
    assert fn(dnc_chart(IDENTITY, (F(4),), (F(9),), 0)) == 0
    report = fn.limit_test(PROBES)
    assert is_passing(report.status)
    assert report.order >= 0.9


def test_mixed_function_limit_order():
    fn = dnc_smooth_fn(QUADRATIC, "x*n")
    assert fn(DncFiber((F(2),), (F(3),))) == 6
    report = fn.limit_test([((F(2),), (F(1),))])
    assert is_passing(report.status)
    assert report.order >= 0.9


def test_function_must_vanish_on_v():
    with pytest.raises(VanishingConditionError):
        dnc_smooth_fn(IDENTITY, "x")


# ---------------- 座標變換 ----------------
def test_transition_identity_is_exact():
    report = chart_transition_test(QUADRATIC, QUADRATIC, PROBES)
    assert report.status == EXACT
    assert list(report.table.columns) == ["probe", "t", "err"]


def test_transition_quadratic_perturbation_order():
    report = chart_transition_test(IDENTITY, QUADRATIC, PROBES)
    assert is_passing(report.status)
    assert report.order >= 0.9
    assert len(report.per_probe) == 3


def test_linear_change_of_splitting():
    scaled = TubularData.parse(XN, 1, ["x", "2*n"])
    for t in (0.5, 0.125, 0.0):
        x2, X2 = chart_transition(IDENTITY, scaled, (F(1),), (F(3),), t)
        assert np.allclose([float(c) for c in x2 + X2], [1.0, 1.5], atol=1e-12)


# ---------------- 函子性 ----------------
def test_dnc_map_identity():
    f = dnc_map(["x", "n"], IDENTITY, IDENTITY)
    p = dnc_chart(IDENTITY, (F(2),), (F(1),), F(1, 2))
    assert f(p) == p
    q = DncFiber((F(2),), (F(5),))
    assert f(q) == q


def test_dnc_map_linear_block_diagonal_exact():
    f = dnc_map(["2*x", "3*n"], IDENTITY, IDENTITY)
    assert f(DncFiber((F(1),), (F(2),))) == DncFiber((F(2),), (F(6),))
    assert f.continuity_test(PROBES).status == EXACT


def test_dnc_map_linear_induced_quotient_block():
    f = dnc_map(["2*x + n", "3*n"], IDENTITY, IDENTITY)
    assert f(DncFiber((F(1),), (F(2),))) == DncFiber((F(2),), (F(6),))
    report = f.continuity_test(PROBES)
    assert is_passing(report.status)
    assert report.order >= 0.9


def test_dnc_map_quadratic_continuity():
    f = dnc_map(["x", "n + n^2"], IDENTITY, IDENTITY)
    assert f(DncFiber((F(1),), (F(4),))) == DncFiber((F(1),), (F(4),))
    report = f.continuity_test(PROBES)
    assert is_passing(report.status)
    assert report.order >= 0.9
    assert f.classify((F(0),)) == {"submersion": True, "immersion": True}


def test_dnc_map_requires_v_preserved():
    with pytest.raises(VanishingConditionError):
        dnc_map(["x", "x + n"], IDENTITY, IDENTITY)


def test_projection_is_submersion_not_immersion():
    plane = TubularData.identity(("x", "y", "n"), 2)
    f = dnc_map(["x", "n"], plane, IDENTITY)
    assert f.classify((F(0), F(0))) == {"submersion": True, "immersion": False}


# ---------------- dnc² ----------------
XHN = ("x", "h", "n")
WEIGHTED = TubularData.identity(XHN, 1, 1)


def test_dnc2_chart_strata():
    x, h, n = (F(1),), (F(2),), (F(3),)
    assert dnc2_chart(WEIGHTED, x, h, n, 1, 1) == Dnc2Off((1, 2, 3), 1, 1)
    assert dnc2_chart(WEIGHTED, x, h, n, 0, 2) == Dnc2Normal(x, (2, 6), 2)
    assert dnc2_chart(WEIGHTED, x, h, n, F(5), 0) == Dnc2Cone(x, h, n, 5)


def test_lambda_relations_hold():
    assert lambda_relation_test().ok
    assert lambda_relation_test(tub=WEIGHTED).ok


def test_diagonal_action_example():
    p = dnc2_chart(WEIGHTED, (F(0),), (F(1),), (F(1),), 1, 1)
    assert pi01(p) == (1, 1)
    assert pi01(lambda1(F(2), lambda0(F(2), p))) == (1, 2)


# ---------------- 曲線模型 ----------------
BENT = TubularData.parse(XHN, 1, ["x", "h", "n + x*h^2"], h=1)


@pytest.mark.parametrize("tub", [WEIGHTED, BENT], ids=["identity", "bent"])
@given(x=rationals(), h=rationals(), n=rationals())
def test_chart_curve_classifies_back(tub, x, h, n):
    assert curve_class(chart_curve(tub, (x,), (h,), (n,)), tub) == CurveClass((x,), (h,), (n,))
    report = chart_transition_test(tub, tub, [((x,), (h, n))])
    assert report.status == EXACT


def test_constant_and_cubic_curves():
    assert curve_class(["1/2", "0", "0"], WEIGHTED) == CurveClass((F(1, 2),), (0,), (0,))
    assert curve_class(["2", "3*s", "s^3"], WEIGHTED) == CurveClass((2,), (3,), (0,))


@pytest.mark.parametrize("curve", [["0", "1", "0"], ["0", "0", "s"]], ids=["off-v", "off-h"])
def test_curve_membership_violations(curve):
    with pytest.raises(CurveMembershipError):
        curve_class(curve, WEIGHTED)


def test_weighted_chart_zero_fiber():
    assert weighted_chart(WEIGHTED, (F(1),), (F(2),), (F(3),), 0) == CurveClass((1,), (2,), (3,))
    assert weighted_chart(WEIGHTED, (F(1),), (F(2),), (F(3),), F(1, 2)) == DncOff((1, 1, F(3, 4)), F(1, 2))


# ---------------- 商空間 ----------------
@pytest.mark.parametrize("d,v", [(2, 1), (3, 1), (3, 0), (4, 2)])
def test_quotient_fiber(d, v):
    report = quotient_fiber_check(d, v)
    assert report["ok"]
    assert report["quotient_dim"] == d - v


def test_quotient_orbit_size():
    report = quotient_fiber_check(3, 1, samples=3)
    assert report["orbit_size"] == 3
    assert report["orbits_disjoint"]


def test_quotient_same_point_orbits_overlap():
    point = quotient_fiber_check(3, 1)["point"]
    report = quotient_fiber_check(3, 1, other=point)
    assert report["orbit_ok"]
    assert not report["orbits_disjoint"]
    assert not report["ok"]


def test_quotient_other_point_dimension():
    with pytest.raises(DimensionMismatchError):
        quotient_fiber_check(3, 1, other=(F(1), F(2)))


def test_curve_pushforward_under_dilation():
    g = [Expr.parse(e, ("x", "h", "n")) for e in ("x", "2*h", "4*n")]
    curve = ["1", "2*s", "3*s^2"]
    assert curve_class(curve, WEIGHTED) == CurveClass((1,), (2,), (3,))
    assert curve_pushforward(g, curve, WEIGHTED) == CurveClass((1,), (4,), (12,))
