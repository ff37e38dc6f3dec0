import math

import pytest

from fieldbridge import CartesianPoint3, CylindricalPoint, cart_to_cyl, cyl_to_cart


def test_unit_x_axis():
    c = cart_to_cyl(CartesianPoint3(1, 0, 0))
    assert (c.r, c.phi, c.z) == (1.0, 0.0, 0.0)


def test_unit_y_axis():
    c = cart_to_cyl(CartesianPoint3(0, 1, 5))
    assert c.r == pytest.approx(1.0, abs=0)
    assert c.phi == pytest.approx(math.pi / 2, rel=1e-15)
    assert c.z == 5.0


def test_origin_convention():
    c = cart_to_cyl(CartesianPoint3(0, 0, 3.5))
    assert (c.r, c.phi, c.z) == (0.0, 0.0, 3.5)


def test_cyl_to_cart():
    p = cyl_to_cart(CylindricalPoint(2.0, math.pi, 0.0))
    assert p.x == pytest.approx(-2.0, rel=1e-15)
    assert p.y == pytest.approx(0.0, abs=1e-15)


def test_round_trip_identity():
    for x, y, z in [(1, 2, 3), (-0.5, 0.25, -7), (1e-3, -1e-3, 0), (3, -4, 2)]:
        p = CartesianPoint3(x, y, z)
        q = cyl_to_cart(cart_to_cyl(p))
        assert q.x == pytest.approx(p.x, rel=1e-14, abs=1e-14)
        assert q.y == pytest.approx(p.y, rel=1e-14, abs=1e-14)
        assert q.z == p.z


def test_phi_normalized():
    c = cart_to_cyl(CartesianPoint3(1.0, -1e-300, 0.0))
    assert 0.0 <= c.phi < 2 * math.pi


def test_invariants_rejected():
    with pytest.raises(ValueError):
        CylindricalPoint(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        CylindricalPoint(1.0, 7.0, 0.0)  # phi outside [0, 2*pi)
    with pytest.raises(ValueError):
        CartesianPoint3(float("nan"), 0.0, 0.0)


def test_strong_typing_rejects_wrong_system():
    with pytest.raises(TypeError):
        cart_to_cyl(CylindricalPoint(1.0, 0.0, 0.0))
    with pytest.raises(TypeError):
        cyl_to_cart(CartesianPoint3(1.0, 0.0, 0.0))
    with pytest.raises(TypeError):
        cyl_to_cart((1.0, 0.0, 0.0))
