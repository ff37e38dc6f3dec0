import math

import numpy as np
import pytest

import fieldbridge as fb
from fieldbridge.errors import UnsupportedDegreeError
from fieldbridge.quadrature import composite_rule, quadrature_for


def reference_monomial_integral(a, b):
    # int over {x,y>=0, x+y<=1} of x^a y^b = a! b! / (a+b+2)!
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def rule_integral(rule, a, b):
    # unit right triangle (0,0),(1,0),(0,1): x = b1, y = b2
    x = rule.points[:, 1]
    y = rule.points[:, 2]
    return 0.5 * np.dot(rule.weights, x**a * y**b)


@pytest.mark.parametrize("degree", [0, 1, 2, 3, 4])
def test_exactness_up_to_degree(degree):
    rule = quadrature_for(degree)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            want = reference_monomial_integral(a, b)
            assert rule_integral(rule, a, b) == pytest.approx(want, abs=1e-15), \
                f"x^{a} y^{b} with degree-{degree} rule"


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_fails_beyond_degree(degree):
    rule = quadrature_for(degree)
    worst = 0.0
    for a in range(degree + 2):
        b = degree + 1 - a
        got = rule_integral(rule, a, b)
        worst = max(worst, abs(got - reference_monomial_integral(a, b)))
    assert worst > 1e-6, "rule should not be exact one degree higher"


def test_degree2_on_x_squared():
    # symbolic: int x^2 over unit right triangle = 1/12
    assert rule_integral(quadrature_for(2), 2, 0) == pytest.approx(1 / 12, rel=1e-15)


def test_degree1_constant_is_area():
    assert rule_integral(quadrature_for(1), 0, 0) == pytest.approx(0.5, abs=0)


def test_unsupported_degree():
    with pytest.raises(UnsupportedDegreeError) as exc:
        quadrature_for(5)
    assert "user" in str(exc.value).lower()
    with pytest.raises(UnsupportedDegreeError):
        quadrature_for(-1)


def test_point_counts():
    assert quadrature_for(1).npoints == 1
    assert quadrature_for(2).npoints == 3
    assert quadrature_for(3).npoints == 4
    assert quadrature_for(4).npoints == 6


def test_composite_rule_keeps_exactness_and_tightens_error():
    base = quadrature_for(4)
    comp = composite_rule(base, 2)
    assert comp.weights.sum() == pytest.approx(1.0, abs=1e-14)
    for a in range(5):
        for b in range(5 - a):
            assert rule_integral(comp, a, b) == pytest.approx(
                reference_monomial_integral(a, b), abs=1e-14)
    # smooth non-polynomial: composite error must shrink markedly
    def smooth(rule):
        x = rule.points[:, 1]
        y = rule.points[:, 2]
        return 0.5 * np.dot(rule.weights, np.sin(3 * x) * np.cos(2 * y))
    from oracles import duffy_integrate_triangles
    ref = duffy_integrate_triangles(
        np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]]),
        lambda px, py: np.sin(3 * px) * np.cos(2 * py), order=20)[0]
    err_base = abs(smooth(base) - ref)
    err_comp = abs(smooth(comp) - ref)
    assert err_comp < err_base / 100
