"""Immutable 2D triangle mesh with topology, classification and fields.

The mesh is the intermediate representation every other module consumes:
vertex coordinates, CCW triangles, derived unique edges with incidence,
per-entity geometric classification (model_dim, model_id), and stable
global ids (defaulting to entity index, which is also the dof ordering).
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import FieldError, MeshBuildError
from .quadrature import quadrature_for

__all__ = [
    "Point2",
    "Mesh",
    "Field",
    "build_mesh",
    "element_area",
    "centroids",
    "eval_field",
    "integrate_field",
    "sample_field",
]

DEGENERATE_AREA_REL = 1e-14  # of the coordinate bounding-box area


@dataclass(frozen=True)
class Point2:
    """A finite 2D point."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y


def _as_coords(points):
    """Accept an (n, 2) array-like or a sequence of Point2."""
    if isinstance(points, np.ndarray) and points.ndim == 2 and points.shape[1] == 2:
        return np.ascontiguousarray(points, dtype=np.float64)
    seq = list(points)
    if seq and isinstance(seq[0], Point2):
        return np.array([[p.x, p.y] for p in seq], dtype=np.float64)
    arr = np.asarray(seq, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise MeshBuildError(f"expected (n, 2) coordinates, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


def _freeze(*arrays):
    for a in arrays:
        a.flags.writeable = False


class Mesh:
    """Immutable simplicial complex; construct through :func:`build_mesh`."""

    def __init__(self, coords, tris, edges, edge_tris, tri_edges,
                 vert_class, edge_class, tri_class, vert_gid, tri_gid):
        self.coords = coords
        self.tris = tris
        self.edges = edges
        self.edge_tris = edge_tris
        self.tri_edges = tri_edges
        self.vert_class = vert_class
        self.edge_class = edge_class
        self.tri_class = tri_class
        self.vert_gid = vert_gid
        self.tri_gid = tri_gid
        _freeze(coords, tris, edges, edge_tris, tri_edges,
                vert_class, edge_class, tri_class, vert_gid, tri_gid)
        # geometric caches
        p0 = coords[tris[:, 0]]
        p1 = coords[tris[:, 1]]
        p2 = coords[tris[:, 2]]
        self.tri_xy = np.ascontiguousarray(np.stack([p0, p1, p2], axis=1))
        self.areas = 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                            - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0]))
        self._centroids = np.ascontiguousarray((p0 + p1 + p2) / 3.0)
        # edge length opposite each local vertex
        e0 = np.linalg.norm(p2 - p1, axis=1)
        e1 = np.linalg.norm(p0 - p2, axis=1)
        e2 = np.linalg.norm(p1 - p0, axis=1)
        self.opp_edge_len = np.stack([e0, e1, e2], axis=1)
        self.diameters = self.opp_edge_len.max(axis=1)
        # barycentric/classification helpers: eps_i = tol * diam * L_i / (2A)
        inv2a = 1.0 / (2.0 * self.areas)
        self.inv2a = inv2a
        self.epsfac = self.opp_edge_len * (self.diameters * inv2a)[:, None]
        self.bbox = np.array([coords.min(axis=0), coords.max(axis=0)])
        _freeze(self.tri_xy, self.areas, self._centroids, self.opp_edge_len,
                self.diameters, self.inv2a, self.epsfac, self.bbox)

    @property
    def nverts(self):
        return self.coords.shape[0]

    @property
    def nelems(self):
        return self.tris.shape[0]

    @property
    def nedges(self):
        return self.edges.shape[0]

    @property
    def edge_gid(self):
        return np.arange(self.nedges, dtype=np.int64)

    @property
    def boundary_edges(self):
        return np.nonzero(self.edge_tris[:, 1] < 0)[0]

    @property
    def total_area(self):
        return float(self.areas.sum())

    @property
    def mean_edge_length(self):
        p = self.coords[self.edges]
        return float(np.linalg.norm(p[:, 1] - p[:, 0], axis=1).mean())

    def centroids(self):
        return self._centroids

    def with_classification(self, vertices=None, edges=None, triangles=None):
        """Return a copy with replaced classification tables."""
        vc = self.vert_class if vertices is None else _check_class(vertices, 0, self.nverts)
        ec = self.edge_class if edges is None else _check_class(edges, 1, self.nedges)
        tc = self.tri_class if triangles is None else _check_class(triangles, 2, self.nelems)
        return Mesh(self.coords, self.tris, self.edges, self.edge_tris,
                    self.tri_edges, vc, ec, tc, self.vert_gid, self.tri_gid)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (np.array_equal(self.coords, other.coords)
                and np.array_equal(self.tris, other.tris)
                and np.array_equal(self.tri_class, other.tri_class))

    def __repr__(self):
        return f"Mesh({self.nverts} vertices, {self.nelems} triangles)"


def _check_class(table, entity_dim, n):
    arr = np.ascontiguousarray(table, dtype=np.int64)
    if arr.shape != (n, 2):
        raise MeshBuildError(
            f"classification for dim-{entity_dim} entities must be ({n}, 2), "
            f"got {arr.shape}")
    if (arr[:, 0] < entity_dim).any():
        bad = int(np.nonzero(arr[:, 0] < entity_dim)[0][0])
        raise MeshBuildError(
            f"classification model_dim {arr[bad, 0]} < entity dim "
            f"{entity_dim} for entity {bad}")
    return arr


def build_mesh(coords, connectivity, classification=None):
    """Build an immutable mesh from coordinates and vertex-index triples.

    Clockwise triangles are reoriented to CCW. ``classification`` is an
    optional (nelems, 2) table of per-element (model_dim, model_id) tags;
    lower-dimension entities default to (dim, 0) and can be replaced later
    via :meth:`Mesh.with_classification`.
    """
    xy = _as_coords(coords)
    if not np.isfinite(xy).all():
        raise MeshBuildError("non-finite vertex coordinate")
    tris = np.ascontiguousarray(connectivity, dtype=np.int64)
    if tris.ndim != 2 or tris.shape[1] != 3:
        raise MeshBuildError(f"connectivity must be (n, 3), got {tris.shape}")
    nv = xy.shape[0]
    ne = tris.shape[0]
    if ne == 0:
        raise MeshBuildError("mesh has no triangles")
    if tris.min() < 0 or tris.max() >= nv:
        bad = int(np.nonzero((tris < 0) | (tris >= nv))[0][0])
        raise MeshBuildError(f"triangle {bad} references an out-of-range vertex")
    if (np.sort(tris, axis=1)[:, :-1] == np.sort(tris, axis=1)[:, 1:]).any():
        raise MeshBuildError("triangle with a repeated vertex")

    tris = tris.copy()
    p0, p1, p2 = (xy[tris[:, k]] for k in range(3))
    signed = 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                    - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0]))
    cw = signed < 0
    if cw.any():
        tris[cw] = tris[cw][:, [0, 2, 1]]
        signed = np.abs(signed)

    lo, hi = xy.min(axis=0), xy.max(axis=0)
    bbox_area = float((hi[0] - lo[0]) * (hi[1] - lo[1]))
    if bbox_area == 0.0:
        raise MeshBuildError("all vertices are collinear")
    tiny = signed < DEGENERATE_AREA_REL * bbox_area
    if tiny.any():
        bad = int(np.nonzero(tiny)[0][0])
        raise MeshBuildError(
            f"triangle {bad} is degenerate (area {signed[bad]:.3e} below "
            f"{DEGENERATE_AREA_REL:g} of bbox area)")

    key = np.sort(tris, axis=1)
    _, first = np.unique(key, axis=0, return_index=True)
    if first.size != ne:
        dup = np.setdiff1d(np.arange(ne), first)[0]
        raise MeshBuildError(f"duplicate triangle {int(dup)}")

    # unique edges in lexicographic order; tri_edges[t, i] = edge opposite
    # local vertex i
    raw = np.concatenate([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]])
    raw = np.sort(raw, axis=1)
    edges, inv = np.unique(raw, axis=0, return_inverse=True)
    tri_edges = np.ascontiguousarray(inv.reshape(3, ne).T)
    nedge = edges.shape[0]
    counts = np.bincount(tri_edges.reshape(-1), minlength=nedge)
    if counts.max() > 2:
        e = int(np.argmax(counts))
        raise MeshBuildError(
            f"edge {e} ({edges[e, 0]},{edges[e, 1]}) is incident to more "
            "than two triangles")
    # fill incidence slots in ascending triangle order
    es = tri_edges.reshape(-1)
    ts = np.repeat(np.arange(ne, dtype=np.int64), 3)
    order = np.argsort(es, kind="stable")
    es_s, ts_s = es[order], ts[order]
    first = np.ones(es_s.size, dtype=bool)
    first[1:] = es_s[1:] != es_s[:-1]
    edge_tris = np.full((nedge, 2), -1, dtype=np.int64)
    edge_tris[es_s[first], 0] = ts_s[first]
    edge_tris[es_s[~first], 1] = ts_s[~first]

    if classification is None:
        tri_class = np.tile(np.array([2, 0], dtype=np.int64), (ne, 1))
    else:
        tri_class = _check_class(classification, 2, ne)
    vert_class = np.tile(np.array([0, 0], dtype=np.int64), (nv, 1))
    edge_class = np.tile(np.array([1, 0], dtype=np.int64), (nedge, 1))
    vert_gid = np.arange(nv, dtype=np.int64)
    tri_gid = np.arange(ne, dtype=np.int64)
    return Mesh(xy, tris, np.ascontiguousarray(edges), edge_tris, tri_edges,
                vert_class, edge_class, tri_class, vert_gid, tri_gid)


def element_area(mesh, elem_id):
    """Positive area of one element."""
    if not 0 <= elem_id < mesh.nelems:
        raise IndexError(f"element {elem_id} out of range")
    return float(mesh.areas[elem_id])


def centroids(mesh):
    """Arithmetic mean of each element's vertices, one point per element."""
    return mesh.centroids()


@dataclass(frozen=True)
class Field:
    """Degrees of freedom attached to vertices or centroids of a mesh.

    degree 0 is piecewise constant; degree 1 is linear Lagrange and
    requires vertex dofs. Dof index equals entity index.
    """

    mesh: Mesh
    location: str  # "vertices" | "centroids"
    degree: int
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.location not in ("vertices", "centroids"):
            raise FieldError(f"unknown dof location {self.location!r}")
        if self.degree not in (0, 1):
            raise FieldError(f"unsupported field degree {self.degree}")
        if self.degree == 1 and self.location != "vertices":
            raise FieldError("degree-1 fields require vertex dofs")
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        n = self.mesh.nverts if self.location == "vertices" else self.mesh.nelems
        if vals.shape != (n,):
            raise FieldError(
                f"{self.location} field needs {n} values, got {vals.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def ndofs(self):
        return self.values.shape[0]

    def dof_points(self):
        """Coordinates carrying the dofs."""
        if self.location == "vertices":
            return self.mesh.coords
        return self.mesh.centroids()

    def with_values(self, values, name=None):
        return Field(self.mesh, self.location, self.degree, values,
                     self.name if name is None else name)


def sample_field(mesh, fn, location="vertices", degree=1, name=""):
    """Sample a callable f(x, y) at the dof points of a new field."""
    pts = mesh.coords if location == "vertices" else mesh.centroids()
    vals = np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=np.float64)
    return Field(mesh, location, degree, vals, name)


def eval_field(field, elem_id, barycentric, mesh=None):
    """Evaluate a field inside an element at barycentric coordinates."""
    if mesh is not None and mesh is not field.mesh:
        raise FieldError("field does not live on the supplied mesh")
    m = field.mesh
    if not 0 <= elem_id < m.nelems:
        raise IndexError(f"element {elem_id} out of range")
    b = np.asarray(barycentric, dtype=np.float64)
    if b.shape != (3,):
        raise FieldError(f"barycentric coordinates must be 3 reals, got {b.shape}")
    if (b < -1e-12).any() or abs(b.sum() - 1.0) > 1e-12:
        raise FieldError(f"invalid barycentric coordinates {b.tolist()}")
    if field.degree == 0:
        if field.location != "centroids":
            raise FieldError("degree-0 vertex field has no element value")
        return float(field.values[elem_id])
    return float(np.dot(field.values[m.tris[elem_id]], b))


def integrate_field(field, quadrature_degree=2, rule=None):
    """Integrate a field over its mesh with a fixed quadrature rule.

    Exact for polynomial fields up to the rule degree; ``rule`` overrides
    the tabulated rule when callers need more accuracy.
    """
    if rule is None:
        if quadrature_degree < field.degree:
            raise FieldError(
                f"quadrature degree {quadrature_degree} below field degree "
                f"{field.degree}")
        rule = quadrature_for(quadrature_degree)
    m = field.mesh
    if field.location == "centroids":
        return float(np.dot(m.areas, field.values))
    if field.degree == 0:
        raise FieldError("degree-0 vertex field has no element values to integrate")
    # vertex dofs: f at quadrature points = B @ bary per element
    vals = field.values[m.tris]  # (ne, 3)
    fq = vals @ rule.points.T  # (ne, q)
    return float(np.dot(m.areas, fq @ rule.weights))
