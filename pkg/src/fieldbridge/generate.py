"""Deterministic synthetic mesh generators and uniform refinement.

Disk meshes use concentric rings with 6*i vertices on ring i, giving
6*n_rings^2 elements; the graded variant remaps ring radii by a power law
while keeping the boundary polygon identical to the uniform disk of the
same ring count. Element classification tags record the ring (disk,
annulus) so classification-based partitioning has something to chew on.
"""

import math
import re

import numpy as np

from .errors import ConfigError
from .mesh import Mesh, build_mesh

__all__ = [
    "square",
    "disk",
    "disk_graded",
    "annulus",
    "refine4",
    "generate_mesh",
]


def square(n):
    """Unit square [0,1]^2 with n x n cells split into 2n^2 triangles."""
    if n < 1:
        raise ConfigError("square(n) needs n >= 1")
    side = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(side, side)
    coords = np.column_stack([xx.reshape(-1), yy.reshape(-1)])
    tris = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10 = v00 + 1
            v01 = v00 + (n + 1)
            v11 = v01 + 1
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return build_mesh(coords, np.array(tris, dtype=np.int64))


def _disk_rings(radius, n_rings, ring_radius):
    k = n_rings
    coords = [(0.0, 0.0)]
    ring_start = [0]
    for i in range(1, k + 1):
        ring_start.append(len(coords))
        r = ring_radius(i)
        m = 6 * i
        for j in range(m):
            a = 2.0 * math.pi * j / m
            coords.append((r * math.cos(a), r * math.sin(a)))
    tris = []
    ring_of = []
    for i in range(1, k + 1):
        outer = ring_start[i]
        mo = 6 * i
        inner = ring_start[i - 1]
        mi = 6 * (i - 1)
        for s in range(6):
            for t in range(i):
                o0 = outer + (s * i + t) % mo
                o1 = outer + (s * i + t + 1) % mo
                n0 = inner if i == 1 else inner + (s * (i - 1) + t) % mi
                tris.append((o0, o1, n0))
                ring_of.append(i)
                if t < i - 1:
                    n1 = inner + (s * (i - 1) + t + 1) % mi
                    tris.append((n0, o1, n1))
                    ring_of.append(i)
    classification = np.column_stack([
        np.full(len(tris), 2, dtype=np.int64),
        np.asarray(ring_of, dtype=np.int64)])
    return build_mesh(np.asarray(coords), np.asarray(tris, dtype=np.int64),
                      classification=classification)


def disk(radius=1.0, n_rings=4):
    """Disk of concentric rings: 6*n_rings^2 elements, ring ids as model
    face tags."""
    if radius <= 0 or n_rings < 1:
        raise ConfigError("disk(radius, n_rings) needs radius > 0, n_rings >= 1")
    return _disk_rings(radius, n_rings, lambda i: radius * i / n_rings)


def disk_graded(radius=1.0, n_rings=4, exponent=0.6):
    """Disk with ring radii radius*(i/n)^exponent.

    exponent < 1 crowds rings toward the boundary (edge-refined, in the
    style of field-following meshes); the boundary polygon matches
    disk(radius, n_rings) exactly, so the two overlap the same domain.
    """
    if radius <= 0 or n_rings < 1 or exponent <= 0:
        raise ConfigError("disk_graded needs radius > 0, n_rings >= 1, exponent > 0")
    return _disk_rings(radius, n_rings,
                       lambda i: radius * (i / n_rings) ** exponent)


def annulus(r_in, r_out, n_rings):
    """Annulus of quad strips split into triangles; layer ids as tags."""
    if not 0 < r_in < r_out or n_rings < 1:
        raise ConfigError("annulus(r_in, r_out, n_rings) needs 0 < r_in < r_out")
    k = n_rings
    h = (r_out - r_in) / k
    m = max(8, int(round(math.pi * (r_in + r_out) / h)))
    coords = []
    for i in range(k + 1):
        r = r_in + i * h
        for j in range(m):
            a = 2.0 * math.pi * j / m
            coords.append((r * math.cos(a), r * math.sin(a)))
    tris = []
    layer = []
    for i in range(k):
        ring0 = i * m
        ring1 = (i + 1) * m
        for j in range(m):
            j1 = (j + 1) % m
            tris.append((ring0 + j, ring1 + j, ring1 + j1))
            tris.append((ring0 + j, ring1 + j1, ring0 + j1))
            layer.extend((i + 1, i + 1))
    classification = np.column_stack([
        np.full(len(tris), 2, dtype=np.int64),
        np.asarray(layer, dtype=np.int64)])
    return build_mesh(np.asarray(coords), np.asarray(tris, dtype=np.int64),
                      classification=classification)


def refine4(mesh):
    """Uniform refinement: each triangle splits into 4 via edge midpoints.

    Child elements of parent p are exactly 4p .. 4p+3 and inherit its
    classification; midpoint vertex of edge e gets id nverts + e.
    """
    nv = mesh.nverts
    mids = 0.5 * (mesh.coords[mesh.edges[:, 0]] + mesh.coords[mesh.edges[:, 1]])
    coords = np.vstack([mesh.coords, mids])
    ne = mesh.nelems
    tris = np.empty((4 * ne, 3), dtype=np.int64)
    a = mesh.tris[:, 0]
    b = mesh.tris[:, 1]
    c = mesh.tris[:, 2]
    ma = nv + mesh.tri_edges[:, 0]  # midpoint of edge (b, c)
    mb = nv + mesh.tri_edges[:, 1]  # midpoint of edge (c, a)
    mc = nv + mesh.tri_edges[:, 2]  # midpoint of edge (a, b)
    tris[0::4] = np.column_stack([a, mc, mb])
    tris[1::4] = np.column_stack([mc, b, ma])
    tris[2::4] = np.column_stack([mb, ma, c])
    tris[3::4] = np.column_stack([ma, mb, mc])
    classification = np.repeat(mesh.tri_class, 4, axis=0)
    return build_mesh(coords, tris, classification=classification)


_SPEC_RE = re.compile(r"^\s*([a-z_0-9]+)\s*\(([^)]*)\)\s*$")

_GENERATORS = {
    "square": (square, (int,)),
    "disk": (disk, (float, int)),
    "disk_graded": (disk_graded, (float, int, float)),
    "annulus": (annulus, (float, float, int)),
}


def generate_mesh(spec):
    """Build a mesh from a generator spec string like ``disk(1.0, 8)``.

    Known generators: square(n), disk(radius, n_rings),
    disk_graded(radius, n_rings, exponent), annulus(r_in, r_out, n_rings).
    """
    if isinstance(spec, Mesh):
        return spec
    m = _SPEC_RE.match(spec)
    if not m:
        raise ConfigError(f"cannot parse mesh spec {spec!r}")
    name, arg_text = m.group(1), m.group(2)
    if name not in _GENERATORS:
        known = ", ".join(sorted(_GENERATORS))
        raise ConfigError(f"unknown mesh generator {name!r} (known: {known})")
    fn, types = _GENERATORS[name]
    parts = [p.strip() for p in arg_text.split(",") if p.strip()]
    if len(parts) != len(types):
        raise ConfigError(
            f"{name} takes {len(types)} arguments, got {len(parts)}")
    try:
        args = [t(p) for t, p in zip(types, parts)]
    except ValueError:
        raise ConfigError(f"bad argument in mesh spec {spec!r}") from None
    return fn(*args)
