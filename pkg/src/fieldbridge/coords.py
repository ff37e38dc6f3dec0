"""Coordinate-system strong types and their transformations.

Cartesian and cylindrical points are distinct types, so passing one where
the other is required fails before any arithmetic happens. Transformations
are single-step; no Jacobian chaining.
"""

import math
from dataclasses import dataclass

__all__ = ["CartesianPoint3", "CylindricalPoint", "cart_to_cyl", "cyl_to_cart"]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CartesianPoint3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x, self.y, self.z))):
            raise ValueError(f"non-finite point ({self.x}, {self.y}, {self.z})")


@dataclass(frozen=True)
class CylindricalPoint:
    """r >= 0, phi in [0, 2*pi)."""

    r: float
    phi: float
    z: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.r, self.phi, self.z))):
            raise ValueError(f"non-finite point ({self.r}, {self.phi}, {self.z})")
        if self.r < 0:
            raise ValueError(f"radius must be >= 0, got {self.r}")
        if not 0.0 <= self.phi < TWO_PI:
            raise ValueError(f"phi must lie in [0, 2*pi), got {self.phi}")


def cart_to_cyl(p):
    """r = hypot(x, y); phi = atan2 normalized to [0, 2*pi); the origin maps
    to phi = 0 by convention."""
    if not isinstance(p, CartesianPoint3):
        raise TypeError(f"cart_to_cyl needs a CartesianPoint3, got {type(p).__name__}")
    r = math.hypot(p.x, p.y)
    if r == 0.0:
        return CylindricalPoint(0.0, 0.0, p.z)
    phi = math.atan2(p.y, p.x)
    if phi < 0.0:
        phi += TWO_PI
    if phi >= TWO_PI:  # atan2 of tiny negative y can round up
        phi = 0.0
    return CylindricalPoint(r, phi, p.z)


def cyl_to_cart(p):
    if not isinstance(p, CylindricalPoint):
        raise TypeError(f"cyl_to_cart needs a CylindricalPoint, got {type(p).__name__}")
    return CartesianPoint3(p.r * math.cos(p.phi), p.r * math.sin(p.phi), p.z)
