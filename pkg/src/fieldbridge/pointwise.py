"""Local weighted polynomial fitting over scattered source points.

Each target value comes from a ridge-regularized weighted least-squares fit
of a low-degree polynomial to nearby source values, with radial weights and
one of three support-selection rules (fixed radius, adaptive radius,
element patch). The work per target is independent, so transfers can run
on several threads with identical results.
"""

import enum
import numbers
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    ExtrinsicEvaluationError,
    FieldError,
    InsufficientSourcesError,
    SingularFitError,
    UnderdeterminedError,
)
from .locate import PointGrid, UniformGrid, build_grid, build_point_grid, locate_arrays

__all__ = [
    "RbfKind",
    "RadialBasisSpec",
    "FixedRadius",
    "AdaptiveRadius",
    "ElementPatch",
    "FitSpec",
    "n_monomials",
    "eval_rbf",
    "select_support",
    "fit_local",
    "transfer_pointwise",
    "transfer_extrinsic",
    "fit_point_cloud",
    "PreparedTransfer",
]

MONOMIALS = ("1", "x", "y", "x^2", "xy", "y^2")


class RbfKind(enum.Enum):
    GAUSSIAN = "gaussian"
    C4 = "c4"
    CONST = "const"
    IDENTITY = "identity"
    MULTIQUADRIC = "multiquadric"
    INVERSE_MULTIQUADRIC = "inverse_multiquadric"
    THIN_PLATE_SPLINE = "thin_plate_spline"
    CUBIC_SPLINE = "cubic_spline"


_KIND_CODE = {
    RbfKind.GAUSSIAN: _kernels.RBF_GAUSSIAN,
    RbfKind.C4: _kernels.RBF_C4,
    RbfKind.CONST: _kernels.RBF_CONST,
    RbfKind.IDENTITY: _kernels.RBF_IDENTITY,
    RbfKind.MULTIQUADRIC: _kernels.RBF_MULTIQUADRIC,
    RbfKind.INVERSE_MULTIQUADRIC: _kernels.RBF_INVERSE_MULTIQUADRIC,
    RbfKind.THIN_PLATE_SPLINE: _kernels.RBF_THIN_PLATE_SPLINE,
    RbfKind.CUBIC_SPLINE: _kernels.RBF_CUBIC_SPLINE,
}


def n_monomials(degree):
    """Monomial count of a bivariate polynomial basis of given degree."""
    return (degree + 1) * (degree + 2) // 2


@dataclass(frozen=True)
class RadialBasisSpec:
    """Radial weight kind with shape parameter and cutoff radius.

    ``r_c`` may stay None when the fit's selection rule supplies the
    effective radius; Identity ignores it entirely.
    """

    kind: RbfKind
    a: float = 2.0
    r_c: float | None = None

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("shape parameter a must be > 0")
        if self.r_c is not None and self.r_c <= 0:
            raise ValueError("cutoff radius r_c must be > 0")


@dataclass(frozen=True)
class FixedRadius:
    """All sources with distance < r_c."""

    r_c: float

    def __post_init__(self):
        if self.r_c <= 0:
            raise ValueError("r_c must be > 0")


@dataclass(frozen=True)
class AdaptiveRadius:
    """Radius grown geometrically from r0 until min_points sources fit."""

    min_points: int
    r0: float
    growth: float = 1.5

    def __post_init__(self):
        if self.min_points < 1:
            raise ValueError("min_points must be >= 1")
        if self.r0 <= 0:
            raise ValueError("r0 must be > 0")
        if self.growth <= 1:
            raise ValueError("growth must be > 1")


@dataclass(frozen=True)
class ElementPatch:
    """Dofs of elements within `layers` edge-adjacency hops of the target's
    element, with unit weights (patch-recovery style)."""

    layers: int = 1

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")


@dataclass(frozen=True)
class FitSpec:
    """Degree, radial weight, selection rule, and regularization of a fit.

    Monomial ordering is fixed as [1, x, y, x^2, xy, y^2] truncated to the
    degree. With centering enabled, coefficient 0 is the fitted value at
    the target point.
    """

    degree: int
    rbf: RadialBasisSpec
    selection: object
    lam: float = 0.0
    centering: bool = True

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise ValueError(f"fit degree must be 0, 1 or 2, got {self.degree}")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if not isinstance(self.selection, (FixedRadius, AdaptiveRadius, ElementPatch)):
            raise TypeError(f"unknown selection rule {self.selection!r}")
        if isinstance(self.selection, AdaptiveRadius):
            need = n_monomials(self.degree)
            if self.selection.min_points < need:
                raise ValueError(
                    f"min_points {self.selection.min_points} below monomial "
                    f"count {need} for degree {self.degree}")


def eval_rbf(spec, r):
    """Radial weight at distance r (array or scalar); 0 beyond the cutoff
    for every kind except Identity."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=np.float64))
    if (r_arr < 0).any():
        raise ValueError("distance must be >= 0")
    if spec.kind is RbfKind.IDENTITY:
        w = np.ones_like(r_arr)
    else:
        if spec.r_c is None:
            raise ValueError(f"{spec.kind.value} requires a cutoff radius r_c")
        w = _kernels.rbf_weights(_KIND_CODE[spec.kind], spec.a, spec.r_c, r_arr)
    return w if np.ndim(r) else float(w[0])


def _weights_for(rbf, radius, dist):
    """Weights at the effective cutoff ``radius`` (Identity stays 1)."""
    if rbf.kind is RbfKind.IDENTITY:
        return np.ones_like(dist)
    return _kernels.rbf_weights(_KIND_CODE[rbf.kind], rbf.a, radius, dist)


def _point_label(points, i):
    return f"target {i} at ({points[i, 0]:.6g}, {points[i, 1]:.6g})"


class _PatchTopology:
    """Element adjacency + dof lookup for element-patch selection."""

    def __init__(self, mesh, source_location):
        self.mesh = mesh
        self.source_location = source_location
        et = mesh.edge_tris
        interior = et[:, 1] >= 0
        a, b = et[interior, 0], et[interior, 1]
        order_a = np.argsort(a, kind="stable")
        order_b = np.argsort(b, kind="stable")
        self._nbr_of = (a[order_a], b[order_a], b[order_b], a[order_b])

    def neighbors(self, t):
        a_sorted, nb_a, b_sorted, nb_b = self._nbr_of
        out = []
        i = np.searchsorted(a_sorted, t)
        while i < a_sorted.size and a_sorted[i] == t:
            out.append(int(nb_a[i]))
            i += 1
        i = np.searchsorted(b_sorted, t)
        while i < b_sorted.size and b_sorted[i] == t:
            out.append(int(nb_b[i]))
            i += 1
        return out

    def patch_dofs(self, seed_elem, layers):
        seen = {seed_elem}
        frontier = [seed_elem]
        for _ in range(layers):
            nxt = []
            for t in frontier:
                for nb in self.neighbors(t):
                    if nb not in seen:
                        seen.add(nb)
                        nxt.append(nb)
            frontier = nxt
        elems = np.array(sorted(seen), dtype=np.int64)
        if self.source_location == "centroids":
            return elems
        return np.unique(self.mesh.tris[elems].reshape(-1))


def _select_batch(targets, src_pts, fitspec, pgrid, patch=None, elem_grid=None,
                  base_index=0):
    """Support CSR (offsets, idx, raw weights) for a block of targets."""
    sel = fitspec.selection
    need = n_monomials(fitspec.degree)
    g = pgrid
    if isinstance(sel, FixedRadius):
        off, idx, dist = _kernels.fixed_radius_supports(
            targets, g.points, float(g.lo[0]), float(g.lo[1]), g.dx, g.dy,
            g.nx, g.ny, g.cell_offsets, g.cell_items, float(sel.r_c))
        counts = np.diff(off)
        if (counts < need).any():
            i = int(np.argmax(counts < need))
            raise UnderdeterminedError(
                f"{_point_label(targets, i + 0)} (index {base_index + i}) has "
                f"{counts[i]} support points inside radius {sel.r_c:g}; a "
                f"degree-{fitspec.degree} fit needs at least {need}")
        w = _weights_for(fitspec.rbf, sel.r_c, dist)
        return off, idx, w
    if isinstance(sel, AdaptiveRadius):
        span = np.vstack([g.points, targets])
        lo, hi = span.min(axis=0), span.max(axis=0)
        r_max = 1.0000001 * float(np.hypot(hi[0] - lo[0], hi[1] - lo[1])) + 1e-300
        off, idx, dist, radii, status = _kernels.adaptive_radius_supports(
            targets, g.points, float(g.lo[0]), float(g.lo[1]), g.dx, g.dy,
            g.nx, g.ny, g.cell_offsets, g.cell_items,
            int(sel.min_points), float(sel.r0), float(sel.growth), r_max)
        if status.any():
            i = int(np.argmax(status))
            raise InsufficientSourcesError(
                f"{_point_label(targets, i)} (index {base_index + i}): only "
                f"{off[i + 1] - off[i]} sources in the whole domain, "
                f"min_points is {sel.min_points}")
        w = np.empty(idx.shape[0], dtype=np.float64)
        for i in range(targets.shape[0]):
            lo_i, hi_i = off[i], off[i + 1]
            w[lo_i:hi_i] = _weights_for(fitspec.rbf, float(radii[i]), dist[lo_i:hi_i])
        return off, idx, w
    # element patch
    if patch is None:
        raise FieldError(
            "element-patch selection needs mesh-backed source dofs, not a "
            "bare point cloud")
    found, elem, _, _, _ = locate_arrays(elem_grid, patch.mesh, targets)
    if not found.all():
        i = int(np.argmax(~found))
        raise InsufficientSourcesError(
            f"{_point_label(targets, i)} (index {base_index + i}) lies "
            "outside the source mesh; element-patch selection needs a "
            "containing element")
    nt = targets.shape[0]
    offsets = np.zeros(nt + 1, dtype=np.int64)
    parts = []
    for i in range(nt):
        dofs = patch.patch_dofs(int(elem[i]), sel.layers)
        if dofs.size < need:
            raise UnderdeterminedError(
                f"{_point_label(targets, i)} (index {base_index + i}) patch "
                f"has {dofs.size} dofs; a degree-{fitspec.degree} fit needs "
                f"at least {need}")
        offsets[i + 1] = offsets[i] + dofs.size
        parts.append(dofs)
    idx = np.concatenate(parts) if parts else np.empty(0, np.int64)
    return offsets, idx, np.ones(idx.shape[0], dtype=np.float64)


def _fit_batch(targets, off, idx, w_raw, src_xy, src_vals, fitspec, base_index=0):
    # the objective squares the weights, so only their magnitude matters
    w = np.abs(w_raw)
    values, coeffs, status = _kernels.fit_many(
        targets, off, idx, w, src_xy, src_vals,
        fitspec.degree, float(fitspec.lam), bool(fitspec.centering))
    if (status != _kernels.FIT_OK).any():
        i = int(np.argmax(status != _kernels.FIT_OK))
        if status[i] == _kernels.FIT_EMPTY:
            raise SingularFitError(
                f"{_point_label(targets, i)} (index {base_index + i}) has no "
                "support points with nonzero weight")
        raise SingularFitError(
            f"{_point_label(targets, i)} (index {base_index + i}): "
            f"rank-deficient degree-{fitspec.degree} fit with lambda=0")
    return values, coeffs


def select_support(target, source_points, selection, rbf=None, grid=None,
                   fit_degree=0, mesh=None, source_location="vertices"):
    """Support indices and raw radial weights for one target point."""
    src = np.ascontiguousarray(source_points, dtype=np.float64)
    if src.shape[0] == 0:
        raise InsufficientSourcesError("no source points")
    t = np.asarray(tuple(target), dtype=np.float64)[None, :]
    rbf = rbf if rbf is not None else RadialBasisSpec(RbfKind.CONST, r_c=None)
    spec = FitSpec(fit_degree, rbf, selection)
    pgrid = grid if isinstance(grid, PointGrid) else build_point_grid(src)
    patch = elem_grid = None
    if isinstance(selection, ElementPatch):
        if mesh is None:
            raise FieldError(
                "element-patch selection needs mesh-backed source dofs, not "
                "a bare point cloud")
        patch = _PatchTopology(mesh, source_location)
        elem_grid = grid if isinstance(grid, UniformGrid) else build_grid(mesh)
    off, idx, w = _select_batch(t, src, spec, pgrid, patch, elem_grid)
    return idx[off[0]:off[1]], w[off[0]:off[1]]


def fit_local(target, support_points, support_values, weights, degree,
              lam=0.0, centering=True):
    """Weighted ridge polynomial fit at one target point.

    Returns the monomial coefficients in the fixed ordering; with centering
    the coordinates are shifted so coefficient 0 is the value at ``target``.
    """
    pts = np.ascontiguousarray(support_points, dtype=np.float64)
    vals = np.ascontiguousarray(support_values, dtype=np.float64)
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if pts.shape[0] < 1:
        raise SingularFitError("empty support")
    t = np.asarray(tuple(target), dtype=np.float64)[None, :]
    off = np.array([0, pts.shape[0]], dtype=np.int64)
    idx = np.arange(pts.shape[0], dtype=np.int64)
    spec = FitSpec(degree, RadialBasisSpec(RbfKind.CONST, r_c=None),
                   FixedRadius(1.0), lam=lam, centering=centering)
    _, coeffs = _fit_batch(t, off, idx, w, pts, vals, spec)
    return coeffs[0]


def _resolve_grids(src_xy, fitspec, grid, mesh, source_location):
    pgrid = grid if isinstance(grid, PointGrid) else build_point_grid(src_xy)
    patch = elem_grid = None
    if isinstance(fitspec.selection, ElementPatch):
        if mesh is None:
            raise FieldError(
                "element-patch selection needs mesh-backed source dofs, not "
                "a bare point cloud")
        patch = _PatchTopology(mesh, source_location)
        elem_grid = grid if isinstance(grid, UniformGrid) else build_grid(mesh)
    return pgrid, patch, elem_grid


def _transfer_chunk(targets, src_xy, src_vals, fitspec, pgrid, patch,
                    elem_grid, base_index):
    off, idx, w = _select_batch(targets, src_xy, fitspec, pgrid, patch,
                                elem_grid, base_index)
    values, _ = _fit_batch(targets, off, idx, w, src_xy, src_vals, fitspec,
                           base_index)
    return values


def _run_chunks(targets, threads, worker):
    nt = targets.shape[0]
    out = np.empty(nt, dtype=np.float64)
    if threads <= 1 or nt < 64:
        out[:] = worker(targets, 0)
        return out
    bounds = np.linspace(0, nt, threads * 4 + 1).astype(np.int64)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = []
        for b0, b1 in zip(bounds[:-1], bounds[1:]):
            if b1 > b0:
                futs.append((b0, b1, pool.submit(worker, targets[b0:b1], int(b0))))
        for b0, b1, fut in futs:
            out[b0:b1] = fut.result()
    return out


class PreparedTransfer:
    """Support sets frozen for fixed source/target geometry.

    Selection depends only on coordinates, so repeated transfers of
    different values over the same points (e.g. the iterated mapping
    experiment) can reuse it; ``apply`` runs only the per-target fits.
    """

    def __init__(self, source_points, target_points, fitspec, grid=None,
                 mesh=None, source_location="vertices"):
        self.src_xy = np.ascontiguousarray(source_points, dtype=np.float64)
        self.targets = np.ascontiguousarray(target_points,
                                            dtype=np.float64).reshape(-1, 2)
        self.fitspec = fitspec
        pgrid, patch, elem_grid = _resolve_grids(self.src_xy, fitspec, grid,
                                                 mesh, source_location)
        self.support = _select_batch(self.targets, self.src_xy, fitspec,
                                     pgrid, patch, elem_grid)

    def apply(self, source_values, threads=1):
        vals = np.ascontiguousarray(source_values, dtype=np.float64)
        if vals.shape[0] != self.src_xy.shape[0]:
            raise FieldError("source values disagree with prepared points")
        off, idx, w = self.support

        def worker(chunk, base):
            lo, hi = off[base], off[base + chunk.shape[0]]
            coff = off[base:base + chunk.shape[0] + 1] - off[base]
            values, _ = _fit_batch(chunk, coff, idx[lo:hi], w[lo:hi],
                                   self.src_xy, vals, self.fitspec, base)
            return values

        return _run_chunks(self.targets, threads, worker)


def fit_point_cloud(source_points, source_values, target_points, fitspec,
                    grid=None, mesh=None, source_location="vertices", threads=1):
    """Fit a value at each target from a scattered source point cloud."""
    src_xy = np.ascontiguousarray(source_points, dtype=np.float64)
    src_vals = np.ascontiguousarray(source_values, dtype=np.float64)
    if src_xy.shape[0] == 0:
        raise InsufficientSourcesError("no source points")
    if src_xy.shape[0] != src_vals.shape[0]:
        raise FieldError("source points and values disagree in length")
    targets = np.ascontiguousarray(target_points, dtype=np.float64).reshape(-1, 2)
    pgrid, patch, elem_grid = _resolve_grids(src_xy, fitspec, grid, mesh,
                                             source_location)

    def worker(chunk, base):
        return _transfer_chunk(chunk, src_xy, src_vals, fitspec, pgrid,
                               patch, elem_grid, base)

    return _run_chunks(targets, threads, worker)


def transfer_pointwise(source_field, target_points, fitspec, grid=None,
                       threads=1):
    """Transfer a discrete field to arbitrary target points.

    Source dof locations are taken from the field (vertices or centroids).
    Deterministic: results do not depend on threads or grid resolution.
    """
    return fit_point_cloud(
        source_field.dof_points(), source_field.values, target_points,
        fitspec, grid=grid, mesh=source_field.mesh,
        source_location=source_field.location, threads=threads)


def transfer_extrinsic(evaluate_callback, target_points, fitspec,
                       source_points, batch_size=1024, mesh=None,
                       source_location="vertices"):
    """Transfer through remote evaluation of the source field.

    The caller knows the source discretization (its dof coordinates) but
    not the values; ``evaluate_callback(points)`` returns one value per
    requested point. Targets are processed in ceil(n/batch_size) batches
    with one callback invocation each; a callback wrapping the source
    field's own dof values reproduces the intrinsic path bitwise.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    src_xy = np.ascontiguousarray(source_points, dtype=np.float64)
    if src_xy.shape[0] == 0:
        raise InsufficientSourcesError("no source points")
    targets = np.ascontiguousarray(target_points, dtype=np.float64).reshape(-1, 2)
    nt = targets.shape[0]
    pgrid, patch, elem_grid = _resolve_grids(src_xy, fitspec, grid=None,
                                             mesh=mesh,
                                             source_location=source_location)
    out = np.empty(nt, dtype=np.float64)
    values_cache = np.full(src_xy.shape[0], np.nan, dtype=np.float64)
    for bi, b0 in enumerate(range(0, nt, batch_size)):
        b1 = min(b0 + batch_size, nt)
        chunk = targets[b0:b1]
        off, idx, w = _select_batch(chunk, src_xy, fitspec, pgrid, patch,
                                    elem_grid, b0)
        needed = np.unique(idx)
        try:
            got = np.asarray(evaluate_callback(src_xy[needed]), dtype=np.float64)
        except Exception as exc:
            raise ExtrinsicEvaluationError(
                f"evaluation callback failed on batch {bi} "
                f"(targets {b0}..{b1 - 1}): {exc}", batch=bi) from exc
        if got.shape != (needed.size,):
            raise ExtrinsicEvaluationError(
                f"callback returned {got.shape} values for {needed.size} "
                f"points on batch {bi}", batch=bi)
        values_cache[needed] = got
        vals, _ = _fit_batch(chunk, off, idx, w, src_xy, values_cache,
                             fitspec, b0)
        out[b0:b1] = vals
    return out
