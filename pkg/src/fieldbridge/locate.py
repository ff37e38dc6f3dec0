"""Uniform-grid point localization with topological classification.

A query returns the containing element plus the lowest-dimension mesh
entity (vertex / edge / element interior) the point can be classified on,
so repeated queries through different incident elements agree. Candidate
elements are always tested in ascending id order, which makes the result
independent of grid resolution.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import MeshBuildError

__all__ = [
    "UniformGrid",
    "PointGrid",
    "LocalizationResult",
    "build_grid",
    "build_point_grid",
    "locate",
    "locate_many",
    "locate_arrays",
]

DEFAULT_TOL = 1e-10
# elements are entered into every cell their bbox (plus this halo, relative
# to element diameter) overlaps, so tol-halo containment never misses a cell
BBOX_PAD_REL = 1e-9


def _grid_shape(bbox, n_items, per_item):
    lo, hi = bbox
    w = max(hi[0] - lo[0], 0.0)
    h = max(hi[1] - lo[1], 0.0)
    target = max(1.0, per_item * n_items)
    if w <= 0.0 and h <= 0.0:
        return 1, 1
    if w <= 0.0:
        return 1, max(1, int(round(target)))
    if h <= 0.0:
        return max(1, int(round(target))), 1
    nx = max(1, int(round(np.sqrt(target * w / h))))
    ny = max(1, int(round(target / nx)))
    return nx, ny


def _pad_bbox(bbox):
    lo = bbox[0].astype(float).copy()
    hi = bbox[1].astype(float).copy()
    span = max(hi[0] - lo[0], hi[1] - lo[1], 1.0)
    pad = 1e-12 * span
    for k in range(2):
        if hi[k] - lo[k] <= 0.0:
            lo[k] -= 0.5 * max(span, 1.0)
            hi[k] += 0.5 * max(span, 1.0)
        else:
            lo[k] -= pad
            hi[k] += pad
    return lo, hi


class _CsrGrid:
    """Shared CSR bucket layout for element and point grids."""

    __slots__ = ("lo", "hi", "nx", "ny", "dx", "dy", "cell_offsets", "cell_items")

    def __init__(self, lo, hi, nx, ny, cell_of_items):
        self.lo = lo
        self.hi = hi
        self.nx = nx
        self.ny = ny
        self.dx = (hi[0] - lo[0]) / nx
        self.dy = (hi[1] - lo[1]) / ny
        ncell = nx * ny
        cells, items = cell_of_items(self.dx, self.dy)
        order = np.lexsort((items, cells))
        cells = cells[order]
        items = items[order]
        self.cell_offsets = np.zeros(ncell + 1, dtype=np.int64)
        np.add.at(self.cell_offsets, cells + 1, 1)
        np.cumsum(self.cell_offsets, out=self.cell_offsets)
        self.cell_items = np.ascontiguousarray(items)
        self.cell_offsets.flags.writeable = False
        self.cell_items.flags.writeable = False

    @property
    def bbox(self):
        return np.array([self.lo, self.hi])

    def cell_range(self, vmin, vmax, axis):
        lo = self.lo[axis]
        d = self.dx if axis == 0 else self.dy
        n = self.nx if axis == 0 else self.ny
        c0 = int((vmin - lo) / d)
        c1 = int((vmax - lo) / d)
        return max(c0, 0), min(c1, n - 1)


@dataclass(frozen=True)
class LocalizationResult:
    found: bool
    elem_id: int
    entity_dim: int
    entity_id: int
    barycentric: tuple


class UniformGrid(_CsrGrid):
    """Cell lists of candidate element ids (bbox overlap, ascending)."""

    def __init__(self, mesh, cells_per_element=1.0):
        if cells_per_element <= 0:
            raise ValueError("cells_per_element must be > 0")
        lo, hi = _pad_bbox(mesh.bbox)
        nx, ny = _grid_shape((lo, hi), mesh.nelems, cells_per_element)

        def entries(dx, dy):
            t = mesh.tri_xy
            pad = BBOX_PAD_REL * mesh.diameters
            ex0 = np.clip(((t[:, :, 0].min(axis=1) - pad - lo[0]) / dx).astype(np.int64), 0, nx - 1)
            ex1 = np.clip(((t[:, :, 0].max(axis=1) + pad - lo[0]) / dx).astype(np.int64), 0, nx - 1)
            ey0 = np.clip(((t[:, :, 1].min(axis=1) - pad - lo[1]) / dy).astype(np.int64), 0, ny - 1)
            ey1 = np.clip(((t[:, :, 1].max(axis=1) + pad - lo[1]) / dy).astype(np.int64), 0, ny - 1)
            counts = (ex1 - ex0 + 1) * (ey1 - ey0 + 1)
            cells = np.empty(int(counts.sum()), dtype=np.int64)
            items = np.empty(cells.size, dtype=np.int64)
            pos = 0
            for e in range(mesh.nelems):
                for iy in range(ey0[e], ey1[e] + 1):
                    base = iy * nx
                    for ix in range(ex0[e], ex1[e] + 1):
                        cells[pos] = base + ix
                        items[pos] = e
                        pos += 1
            return cells, items

        super().__init__(lo, hi, nx, ny, entries)
        self.mesh = mesh


class PointGrid(_CsrGrid):
    """Bucket grid over a point cloud for radius queries."""

    def __init__(self, points, cells_per_point=1.0):
        points = np.ascontiguousarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] == 0:
            raise ValueError("points must be a nonempty (n, 2) array")
        bbox = np.array([points.min(axis=0), points.max(axis=0)])
        lo, hi = _pad_bbox(bbox)
        nx, ny = _grid_shape((lo, hi), points.shape[0], cells_per_point)

        def entries(dx, dy):
            ix = np.clip(((points[:, 0] - lo[0]) / dx).astype(np.int64), 0, nx - 1)
            iy = np.clip(((points[:, 1] - lo[1]) / dy).astype(np.int64), 0, ny - 1)
            return iy * nx + ix, np.arange(points.shape[0], dtype=np.int64)

        super().__init__(lo, hi, nx, ny, entries)
        self.points = points


def build_grid(mesh, cells_per_element=1.0):
    """Uniform acceleration grid sized to ~cells_per_element cells/element."""
    if mesh.nelems == 0:
        raise MeshBuildError("cannot build a grid over an empty mesh")
    return UniformGrid(mesh, cells_per_element)


def build_point_grid(points, cells_per_point=1.0):
    return PointGrid(points, cells_per_point)


def locate_arrays(grid, mesh, points, tol=DEFAULT_TOL):
    """Batch localization returning raw arrays (found, elem, dim, ent, bary)."""
    if grid.mesh is not mesh:
        raise ValueError("grid was built for a different mesh")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    return _kernels.locate_batch(
        pts, mesh.tri_xy, mesh.tris, mesh.tri_edges, mesh.vert_gid,
        mesh.tri_gid, mesh.inv2a, mesh.epsfac,
        float(grid.lo[0]), float(grid.lo[1]), grid.dx, grid.dy,
        grid.nx, grid.ny, grid.cell_offsets, grid.cell_items, float(tol))


def _wrap(found, elem, dim, ent, bary, i):
    return LocalizationResult(bool(found[i]), int(elem[i]), int(dim[i]),
                              int(ent[i]), tuple(bary[i]))


def locate(grid, mesh, point, tol=DEFAULT_TOL):
    """Locate one point; found=False when it lies outside every element."""
    arrs = locate_arrays(grid, mesh, np.asarray(tuple(point), float)[None, :], tol)
    return _wrap(*arrs, 0)


def locate_many(grid, mesh, points, tol=DEFAULT_TOL):
    """Elementwise :func:`locate`, order preserving."""
    pts = np.asarray([tuple(p) for p in points], dtype=np.float64).reshape(-1, 2)
    arrs = locate_arrays(grid, mesh, pts, tol)
    return [_wrap(*arrs, i) for i in range(pts.shape[0])]
