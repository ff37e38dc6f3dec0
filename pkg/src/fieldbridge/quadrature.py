"""Symmetric Gauss quadrature rules on the reference triangle.

Rules are tabulated in barycentric coordinates with weights normalized to
sum to one, so an integral over a physical triangle is

    area * sum_q w_q * f(x_q).
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedDegreeError

__all__ = ["QuadratureRule", "quadrature_for", "composite_rule"]


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric point/weight table exact up to ``degree``."""

    degree: int
    points: np.ndarray  # (q, 3) barycentric triples
    weights: np.ndarray  # (q,), sum to 1

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        wts = np.ascontiguousarray(self.weights, dtype=np.float64)
        pts.flags.writeable = False
        wts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @property
    def npoints(self):
        return self.points.shape[0]


def _rule(degree, points, weights):
    return QuadratureRule(degree, np.asarray(points, float), np.asarray(weights, float))

_CENTROID = _rule(1, [[1 / 3, 1 / 3, 1 / 3]], [1.0])

# Interior 3-point rule, exact to degree 2.
_P2 = _rule(
    2,
    [[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]],
    [1 / 3, 1 / 3, 1 / 3],
)

# Classic 4-point rule with a negative centroid weight, exact to degree 3.
_P3 = _rule(
    3,
    [
        [1 / 3, 1 / 3, 1 / 3],
        [0.6, 0.2, 0.2],
        [0.2, 0.6, 0.2],
        [0.2, 0.2, 0.6],
    ],
    [-27 / 48, 25 / 48, 25 / 48, 25 / 48],
)

# Two symmetric orbits of 3 points each, exact to degree 4. The orbit
# weights satisfy 3*(w1 + w2) = 1; w2 is derived so the sum is exact.
_A1, _W1 = 0.44594849091596489, 0.22338158967801147
_A2 = 0.091576213509770743
_W2 = 1.0 / 3.0 - _W1
_B1 = 1.0 - 2.0 * _A1
_B2 = 1.0 - 2.0 * _A2
_P4 = _rule(
    4,
    [
        [_B1, _A1, _A1],
        [_A1, _B1, _A1],
        [_A1, _A1, _B1],
        [_B2, _A2, _A2],
        [_A2, _B2, _A2],
        [_A2, _A2, _B2],
    ],
    [_W1, _W1, _W1, _W2, _W2, _W2],
)

_TABLE = {0: _CENTROID, 1: _CENTROID, 2: _P2, 3: _P3, 4: _P4}


def quadrature_for(degree):
    """Return the tabulated rule exact for polynomials up to ``degree``.

    Degrees 0..4 are tabulated. Anything else raises
    :class:`UnsupportedDegreeError`; callers needing more accuracy can pass
    their own :class:`QuadratureRule` (e.g. from :func:`composite_rule`).
    """
    if not isinstance(degree, (int, np.integer)) or isinstance(degree, bool):
        raise UnsupportedDegreeError(f"quadrature degree must be an integer, got {degree!r}")
    if degree not in _TABLE:
        raise UnsupportedDegreeError(
            f"no tabulated rule of degree {degree}; supply a user-defined "
            "QuadratureRule instead"
        )
    return _TABLE[degree]


def composite_rule(base, levels):
    """Refine ``base`` over 4**levels uniform subtriangles of the reference
    triangle.

    The composite rule has the same polynomial exactness degree as ``base``
    but a much smaller error constant on smooth integrands; it is the
    measurement rule used by the test oracles.
    """
    if levels < 0:
        raise ValueError("levels must be >= 0")
    corners = np.eye(3)
    tris = [corners]
    for _ in range(levels):
        finer = []
        for t in tris:
            m01 = 0.5 * (t[0] + t[1])
            m12 = 0.5 * (t[1] + t[2])
            m20 = 0.5 * (t[2] + t[0])
            finer.append(np.array([t[0], m01, m20]))
            finer.append(np.array([m01, t[1], m12]))
            finer.append(np.array([m20, m12, t[2]]))
            finer.append(np.array([m01, m12, m20]))
        tris = finer
    scale = 1.0 / len(tris)
    pts = []
    wts = []
    for t in tris:
        # base point (b0,b1,b2) inside subtriangle with barycentric corners t
        pts.append(base.points @ t)
        wts.append(base.weights * scale)
    return QuadratureRule(base.degree, np.vstack(pts), np.concatenate(wts))
