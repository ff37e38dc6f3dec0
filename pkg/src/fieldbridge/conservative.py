"""Conservative field transfer by L2 projection over a supermesh.

Source and target triangulations are intersected into convex cells on
which both fields are smooth; the target field solves M f = b with the
consistent mass matrix M and right-hand side assembled by exact quadrature
over the intersection cells, which makes the transfer a Galerkin
projection and conserves the field integral over the overlap.

The clipping and assembly cores work on raw coordinate/value arrays so the
distributed simulation can run the identical operation sequence on
per-rank subsets.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import ConsistencyError, FieldError, SolverError
from .locate import UniformGrid, build_grid
from .mesh import Field
from .quadrature import quadrature_for

__all__ = [
    "ConvexPolygon",
    "SuperMeshCell",
    "SuperMesh",
    "ConservativeReport",
    "clip_triangles",
    "build_supermesh",
    "assemble_mass",
    "assemble_overlap_mass",
    "assemble_rhs",
    "solve_spd",
    "transfer_conservative",
]

MERGE_TOL_REL = 1e-12  # collinear/duplicate vertex merge, relative to diameter
SLIVER_REL = 1e-12  # discard cells below this fraction of mean element area


@dataclass(frozen=True)
class ConvexPolygon:
    """CCW convex polygon; empty when it has no vertices."""

    vertices: np.ndarray
    area: float

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 2)
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @property
    def is_empty(self):
        return self.vertices.shape[0] == 0

    def fan_triangles(self):
        """Subdivision triangles (m-2, 3, 2) fanned from vertex 0."""
        v = self.vertices
        m = v.shape[0]
        if m < 3:
            return np.empty((0, 3, 2))
        out = np.empty((m - 2, 3, 2))
        out[:, 0] = v[0]
        out[:, 1] = v[1:m - 1]
        out[:, 2] = v[2:m]
        return out


_EMPTY_POLYGON = ConvexPolygon(np.empty((0, 2)), 0.0)


def clip_triangles(tri_a, tri_b):
    """Convex intersection polygon of two CCW triangles (possibly empty)."""
    a = np.ascontiguousarray(tri_a, dtype=np.float64).reshape(1, 3, 2)
    b = np.ascontiguousarray(tri_b, dtype=np.float64).reshape(1, 3, 2)
    off, verts, areas = _kernels.clip_batch(a, b, MERGE_TOL_REL)
    if off[1] == 0:
        return _EMPTY_POLYGON
    return ConvexPolygon(verts[:off[1]], float(areas[0]))


def sliver_threshold(total_area_source, nelems_source, total_area_target,
                     nelems_target):
    """Minimum intersection-cell area kept, from the combined mean element
    area of the two meshes."""
    mean = (total_area_source + total_area_target) / (nelems_source + nelems_target)
    return SLIVER_REL * mean


def clip_pairs(src_tri_xy, tgt_tri_xy, pair_s, pair_t, key_s, key_t, thresh):
    """Clip candidate pairs ordered by (target key, source key) ascending.

    pair_s / pair_t index the local triangle arrays; the keys are the
    global ids used for ordering, so per-rank subsets reproduce the serial
    cell sequence. Returns kept (pair_s, pair_t, offsets, verts, areas).
    """
    order = np.lexsort((key_s, key_t))
    pair_s = np.asarray(pair_s, dtype=np.int64)[order]
    pair_t = np.asarray(pair_t, dtype=np.int64)[order]
    off, verts, areas = _kernels.clip_batch(
        src_tri_xy[pair_s], tgt_tri_xy[pair_t], MERGE_TOL_REL)
    counts = np.diff(off)
    keep = (areas >= thresh) & (counts >= 3)
    kept_counts = counts[keep]
    new_off = np.zeros(int(keep.sum()) + 1, dtype=np.int64)
    np.cumsum(kept_counts, out=new_off[1:])
    vert_mask = np.repeat(keep, counts)
    return (pair_s[keep], pair_t[keep], new_off, verts[vert_mask], areas[keep])


def fan_subdivision(offsets, verts):
    """Fan-triangulate packed polygons from vertex 0.

    Returns (sub_corners (N,3,2), sub_cell (N,)) where sub_cell maps each
    subdivision triangle back to its polygon index.
    """
    counts = np.diff(offsets)
    ncell = counts.shape[0]
    fans = np.maximum(counts - 2, 0)
    total = int(fans.sum())
    sub_corners = np.empty((total, 3, 2))
    sub_cell = np.repeat(np.arange(ncell, dtype=np.int64), fans)
    pos = 0
    for i in range(ncell):
        lo = offsets[i]
        m = counts[i]
        for j in range(1, m - 1):
            sub_corners[pos, 0] = verts[lo]
            sub_corners[pos, 1] = verts[lo + j]
            sub_corners[pos, 2] = verts[lo + j + 1]
            pos += 1
    return sub_corners, sub_cell


def _tri_signed_areas(corners):
    return 0.5 * ((corners[:, 1, 0] - corners[:, 0, 0])
                  * (corners[:, 2, 1] - corners[:, 0, 1])
                  - (corners[:, 1, 1] - corners[:, 0, 1])
                  * (corners[:, 2, 0] - corners[:, 0, 0]))


def _bary_raw(xy3, pts):
    """Barycentric coordinates of pts (n, q, 2) in triangles xy3 (n, 3, 2)."""
    p0 = xy3[:, 0][:, None, :]
    d = pts - p0
    ax = xy3[:, 1, 0] - xy3[:, 0, 0]
    ay = xy3[:, 1, 1] - xy3[:, 0, 1]
    bx = xy3[:, 2, 0] - xy3[:, 0, 0]
    by = xy3[:, 2, 1] - xy3[:, 0, 1]
    det = (ax * by - ay * bx)[:, None]
    b1 = (d[..., 0] * by[:, None] - d[..., 1] * bx[:, None]) / det
    b2 = (d[..., 1] * ax[:, None] - d[..., 0] * ay[:, None]) / det
    b0 = 1.0 - b1 - b2
    return np.stack([b0, b1, b2], axis=-1)  # (n, q, 3)


def assemble_from_subdivision(sub_corners, src_xy3, src_fvals, tgt_xy3,
                              tgt_dofs, rule, ndofs):
    """Quadrature-assemble b_A and per-dof coverage from gathered arrays.

    src_fvals is (n, 3) vertex values for a degree-1 source or (n,) element
    values for degree 0; tgt_dofs is (n, 3) global dof ids. Serial and
    distributed paths both call this on identically ordered inputs, so the
    floating-point accumulation sequence is reproducible.
    """
    b = np.zeros(ndofs)
    coverage = np.zeros(ndofs)
    if sub_corners.shape[0] == 0:
        return b, coverage
    sub_areas = _tri_signed_areas(sub_corners)
    pts = np.einsum("qk,nkd->nqd", rule.points, sub_corners)
    bary_s = _bary_raw(src_xy3, pts)
    bary_t = _bary_raw(tgt_xy3, pts)
    slack = 1e-8
    for name, bar in (("source", bary_s), ("target", bary_t)):
        if (bar < -slack).any() or (bar > 1 + slack).any():
            raise ConsistencyError(
                f"supermesh quadrature point failed to localize in its "
                f"{name} parent element")
    if src_fvals.ndim == 1:
        fs = np.broadcast_to(src_fvals[:, None], bary_s.shape[:2])
    else:
        fs = np.einsum("nqk,nk->nq", bary_s, src_fvals)
    scaled = sub_areas[:, None] * rule.weights[None, :]  # (n, q)
    contrib = np.einsum("nq,nqk->nk", scaled * fs, bary_t)
    cov_contrib = np.einsum("nq,nqk->nk", scaled, bary_t)
    np.add.at(b, tgt_dofs.reshape(-1), contrib.reshape(-1))
    np.add.at(coverage, tgt_dofs.reshape(-1), cov_contrib.reshape(-1))
    return b, coverage


@dataclass(frozen=True)
class SuperMeshCell:
    source_elem: int
    target_elem: int
    polygon: ConvexPolygon


class SuperMesh:
    """Intersection cells ordered by (target element, source element)."""

    def __init__(self, source_mesh, target_mesh, pair_s, pair_t, offsets,
                 verts, areas):
        self.source_mesh = source_mesh
        self.target_mesh = target_mesh
        self.cell_source = pair_s
        self.cell_target = pair_t
        self.cell_offsets = offsets
        self.cell_verts = verts
        self.cell_areas = areas
        self.total_area = float(areas.sum())
        self.sub_corners, sub_cell = fan_subdivision(offsets, verts)
        self.sub_source = pair_s[sub_cell]
        self.sub_target = pair_t[sub_cell]

    @property
    def ncells(self):
        return self.cell_source.shape[0]

    @property
    def cells(self):
        out = []
        for i in range(self.ncells):
            lo, hi = self.cell_offsets[i], self.cell_offsets[i + 1]
            poly = ConvexPolygon(self.cell_verts[lo:hi], float(self.cell_areas[i]))
            out.append(SuperMeshCell(int(self.cell_source[i]),
                                     int(self.cell_target[i]), poly))
        return out

    def area_per_target(self):
        out = np.zeros(self.target_mesh.nelems)
        np.add.at(out, self.cell_target, self.cell_areas)
        return out


def candidate_pairs(source_mesh, target_mesh, grid):
    """(source, target) element index pairs whose bounding boxes overlap."""
    t_xy = target_mesh.tri_xy
    s_xy = source_mesh.tri_xy
    s_lo = s_xy.min(axis=1)
    s_hi = s_xy.max(axis=1)
    pairs_s = []
    pairs_t = []
    for t in range(target_mesh.nelems):
        txy = t_xy[t]
        lo = txy.min(axis=0)
        hi = txy.max(axis=0)
        ix0, ix1 = grid.cell_range(lo[0], hi[0], 0)
        iy0, iy1 = grid.cell_range(lo[1], hi[1], 1)
        if ix0 > ix1 or iy0 > iy1:
            continue
        chunks = []
        for iy in range(iy0, iy1 + 1):
            for ix in range(ix0, ix1 + 1):
                c = iy * grid.nx + ix
                chunk = grid.cell_items[grid.cell_offsets[c]:grid.cell_offsets[c + 1]]
                if chunk.size:
                    chunks.append(chunk)
        if not chunks:
            continue
        cand = np.unique(np.concatenate(chunks))
        ok = ((s_lo[cand, 0] <= hi[0]) & (s_hi[cand, 0] >= lo[0])
              & (s_lo[cand, 1] <= hi[1]) & (s_hi[cand, 1] >= lo[1]))
        cand = cand[ok]
        pairs_s.append(cand)
        pairs_t.append(np.full(cand.size, t, dtype=np.int64))
    if not pairs_s:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(pairs_s), np.concatenate(pairs_t)


def build_supermesh(source_mesh, target_mesh, grid=None):
    """Intersect two meshes; empty overlap yields an empty supermesh."""
    if grid is None:
        grid = build_grid(source_mesh)
    elif not isinstance(grid, UniformGrid) or grid.mesh is not source_mesh:
        raise ValueError("grid must be a UniformGrid over the source mesh")
    ps, pt = candidate_pairs(source_mesh, target_mesh, grid)
    thresh = sliver_threshold(source_mesh.total_area, source_mesh.nelems,
                              target_mesh.total_area, target_mesh.nelems)
    kept = clip_pairs(source_mesh.tri_xy, target_mesh.tri_xy, ps, pt,
                      ps, pt, thresh)
    return SuperMesh(source_mesh, target_mesh, *kept)


def assemble_mass(target_mesh, degree=1):
    """Consistent mass matrix of degree-1 vertex shape functions (CSR)."""
    if degree != 1:
        raise FieldError("mass assembly supports degree-1 vertex fields only")
    tris = target_mesh.tris
    local = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    data = (target_mesh.areas[:, None, None] * local).reshape(-1)
    rows = np.repeat(tris, 3, axis=1).reshape(-1)
    cols = np.tile(tris, (1, 3)).reshape(-1)
    n = target_mesh.nverts
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def assemble_rhs(supermesh, source_field, target_mesh, quadrature_degree=None,
                 rule=None, return_coverage=False):
    """Right-hand side b_A = integral of N_A * f_source over the supermesh.

    The quadrature degree defaults to source degree + target degree, which
    integrates the product of the two piecewise-polynomial fields exactly
    on each intersection cell.
    """
    if source_field.mesh is not supermesh.source_mesh:
        raise FieldError("source field does not live on the supermesh source")
    if target_mesh is not supermesh.target_mesh:
        raise FieldError("target mesh does not match the supermesh")
    if rule is None:
        if quadrature_degree is None:
            quadrature_degree = source_field.degree + 1
        rule = quadrature_for(quadrature_degree)
    src_mesh = supermesh.source_mesh
    src_xy3 = src_mesh.tri_xy[supermesh.sub_source]
    tgt_xy3 = target_mesh.tri_xy[supermesh.sub_target]
    tgt_dofs = target_mesh.tris[supermesh.sub_target]
    if source_field.degree == 0:
        src_fvals = source_field.values[supermesh.sub_source]
    else:
        src_fvals = source_field.values[src_mesh.tris[supermesh.sub_source]]
    b, coverage = assemble_from_subdivision(
        supermesh.sub_corners, src_xy3, src_fvals, tgt_xy3, tgt_dofs,
        rule, target_mesh.nverts)
    if return_coverage:
        return b, coverage
    return b


def assemble_overlap_mass(supermesh, target_mesh):
    """Mass matrix of target shape functions restricted to the supermesh.

    Equals :func:`assemble_mass` when the source domain covers the target;
    for partial overlap it is the Gram matrix of the L2 projection on the
    covered region.
    """
    rule = quadrature_for(2)  # product of two linears per cell
    corners = supermesh.sub_corners
    n = target_mesh.nverts
    if corners.shape[0] == 0:
        return sp.csr_matrix((n, n))
    sub_areas = _tri_signed_areas(corners)
    pts = np.einsum("qk,nkd->nqd", rule.points, corners)
    tgt_xy3 = target_mesh.tri_xy[supermesh.sub_target]
    bary_t = _bary_raw(tgt_xy3, pts)  # (m, q, 3)
    scaled = sub_areas[:, None] * rule.weights[None, :]
    blocks = np.einsum("nq,nqa,nqb->nab", scaled, bary_t, bary_t)
    dofs = target_mesh.tris[supermesh.sub_target]  # (m, 3)
    rows = np.repeat(dofs, 3, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, 3)).reshape(-1)
    return sp.coo_matrix((blocks.reshape(-1), (rows, cols)),
                         shape=(n, n)).tocsr()


def solve_spd(M, b, rel_tol=1e-12, max_iter=None, return_info=False):
    """Jacobi-preconditioned conjugate gradients on an SPD sparse matrix."""
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        x = np.zeros(n)
        return (x, 0, 0.0) if return_info else x
    diag = M.diagonal()
    if (diag <= 0).any():
        raise SolverError("matrix has a non-positive diagonal entry")
    inv_diag = 1.0 / diag
    x = np.zeros(n)
    r = b.copy()
    z = r * inv_diag
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iter + 1):
        q = M @ p
        alpha = rz / float(p @ q)
        x += alpha * p
        r -= alpha * q
        if np.linalg.norm(r) <= rel_tol * bnorm:
            true_res = float(np.linalg.norm(b - M @ x)) / bnorm
            if true_res <= rel_tol:
                return (x, it, true_res) if return_info else x
        z = r * inv_diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    final = float(np.linalg.norm(b - M @ x)) / bnorm
    raise SolverError(
        f"conjugate gradients did not reach rel_tol={rel_tol:g} within "
        f"{max_iter} iterations (residual {final:.3e})")


@dataclass
class ConservativeReport:
    uncovered_dofs: np.ndarray
    iterations: int
    relative_residual: float


def coverage_cutoff(target_mesh):
    """Coverage below this is treated as an uncovered dof (aligned with the
    sliver-cell cutoff: contributions this small are geometric noise)."""
    return SLIVER_REL * target_mesh.total_area / max(target_mesh.nelems, 1)


def solve_projection(mass, b, coverage, target_mesh, rel_tol,
                     overlap_mass=None):
    """Solve the projection system; restrict to covered dofs when the
    source domain does not cover the target.

    With full coverage this is M f = b on the whole dof set. With holes,
    the Gram matrix of the covered region (``overlap_mass``) replaces the
    full mass so values near the coverage boundary are not biased by basis
    support outside the source domain; uncovered dofs get 0.
    """
    cov_eps = coverage_cutoff(target_mesh)
    covered = coverage > cov_eps
    if covered.all():
        x, iters, res = solve_spd(mass, b, rel_tol, return_info=True)
        uncovered = np.empty(0, dtype=np.int64)
    else:
        if overlap_mass is None:
            raise FieldError(
                "target dofs are not covered by the source domain and no "
                "overlap mass is available for the restricted projection")
        idx = np.nonzero(covered)[0]
        x = np.zeros(target_mesh.nverts)
        if idx.size:
            sub = overlap_mass[idx][:, idx]
            xs, iters, res = solve_spd(sub.tocsr(), b[idx], rel_tol,
                                       return_info=True)
            x[idx] = xs
        else:
            iters, res = 0, 0.0
        uncovered = np.nonzero(~covered)[0].astype(np.int64)
    return x, ConservativeReport(uncovered, iters, res)


def transfer_conservative(source_field, target_mesh, rel_tol=1e-12,
                          quadrature_degree=None, grid=None, supermesh=None,
                          mass=None, return_report=False):
    """L2-project a source field onto degree-1 vertex dofs of target_mesh.

    Target dofs whose basis support misses the source domain get value 0
    and are listed in the report. ``supermesh`` and ``mass`` can be passed
    in to amortize repeated transfers over the same mesh pair.
    """
    if source_field.degree not in (0, 1):
        raise FieldError(f"unsupported source degree {source_field.degree}")
    if source_field.degree == 0 and source_field.location != "centroids":
        raise FieldError("degree-0 source must carry element (centroid) values")
    if supermesh is None:
        supermesh = build_supermesh(source_field.mesh, target_mesh, grid)
    if mass is None:
        mass = assemble_mass(target_mesh)
    b, coverage = assemble_rhs(supermesh, source_field, target_mesh,
                               quadrature_degree, return_coverage=True)
    covered = coverage > coverage_cutoff(target_mesh)
    overlap_mass = None
    if not covered.all():
        overlap_mass = assemble_overlap_mass(supermesh, target_mesh)
    x, report = solve_projection(mass, b, coverage, target_mesh, rel_tol,
                                 overlap_mass=overlap_mass)
    out = Field(target_mesh, "vertices", 1, x, name=source_field.name)
    if return_report:
        return out, report
    return out
