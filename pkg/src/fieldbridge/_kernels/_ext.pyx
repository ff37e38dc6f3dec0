# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot kernels.

Mirrors ``_pure`` function by function, keeping the same operation order so
the two backends agree to rounding. Least-squares solves go through LAPACK
dgelsy with rcond = machine epsilon, matching scipy's gelsy driver.
"""

import numpy as np

cimport numpy as cnp
from libc.float cimport DBL_EPSILON
from libc.math cimport ceil, exp, log, sqrt
from scipy.linalg.cython_lapack cimport dgelsy

cnp.import_array()

RBF_GAUSSIAN = 0
RBF_C4 = 1
RBF_CONST = 2
RBF_IDENTITY = 3
RBF_MULTIQUADRIC = 4
RBF_INVERSE_MULTIQUADRIC = 5
RBF_THIN_PLATE_SPLINE = 6
RBF_CUBIC_SPLINE = 7

FIT_OK = 0
FIT_SINGULAR = 1
FIT_EMPTY = 2

cdef enum:
    MAX_POLY = 16  # triangle-triangle intersections have at most 6 vertices


cdef inline double _rbf_one(int kind, double a, double r_c, double r) nogil:
    cdef double x, u, poly, q, q2
    if kind == 3:  # identity
        return 1.0
    if r > r_c:
        return 0.0
    x = a * r / r_c
    if kind == 0:  # gaussian
        return exp(-(x * x))
    elif kind == 1:  # c4
        u = r / r_c
        poly = 6.0 + u * (36.0 + u * (82.0 + u * (72.0 + u * (30.0 + u * 5.0))))
        q = 1.0 - u
        q2 = q * q
        return poly * (q2 * q2 * q2)
    elif kind == 2:  # const
        return 1.0
    elif kind == 4:  # multiquadric
        return sqrt(1.0 + x * x)
    elif kind == 5:  # inverse multiquadric
        return 1.0 / sqrt(1.0 + x * x)
    elif kind == 6:  # thin plate spline, 0 at r=0 by continuity
        if x > 0.0:
            return x * x * log(x)
        return 0.0
    elif kind == 7:  # cubic spline
        return x * x * x
    return -1.0


def rbf_weights(int kind, double a, double r_c, r):
    """Evaluate the radial weight for distances ``r`` (cutoff at r > r_c)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] r_arr = \
        np.ascontiguousarray(r, dtype=np.float64).reshape(-1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(r_arr.shape[0])
    cdef Py_ssize_t i, n = r_arr.shape[0]
    if kind < 0 or kind > 7:
        raise ValueError(f"unknown rbf kind code {kind}")
    for i in range(n):
        out[i] = _rbf_one(kind, a, r_c, r_arr[i])
    return out


cdef inline Py_ssize_t _cell_of(double v, double lo, double inv_d,
                                Py_ssize_t n) nogil:
    cdef Py_ssize_t c = <Py_ssize_t>((v - lo) * inv_d)
    if c < 0:
        return 0
    if c >= n:
        return n - 1
    return c


def locate_batch(const double[:, ::1] points, const double[:, :, ::1] tri_xy,
                 const long[:, ::1] tri_verts, const long[:, ::1] tri_edges,
                 const long[::1] vert_gid, const long[::1] tri_gid,
                 const double[::1] inv2a, const double[:, ::1] epsfac,
                 double gx0, double gy0, double gdx, double gdy,
                 Py_ssize_t nx, Py_ssize_t ny,
                 const long[::1] cell_off, const long[::1] cell_items, double tol):
    """Grid-accelerated point localization with entity classification."""
    cdef Py_ssize_t n = points.shape[0]
    found_arr = np.zeros(n, dtype=bool)
    elem_arr = np.full(n, -1, dtype=np.int64)
    dim_arr = np.full(n, -1, dtype=np.int64)
    ent_arr = np.full(n, -1, dtype=np.int64)
    bary_arr = np.full((n, 3), np.nan, dtype=np.float64)
    cdef cnp.uint8_t[::1] found = found_arr.view(np.uint8)
    cdef long[::1] elem = elem_arr
    cdef long[::1] dim = dim_arr
    cdef long[::1] ent = ent_arr
    cdef double[:, ::1] bary = bary_arr
    cdef double inv_dx = 1.0 / gdx
    cdef double inv_dy = 1.0 / gdy
    cdef Py_ssize_t i, j, t, c, lo, hi, nsmall, vtx, k
    cdef double px, py, b0, b1, b2, e0, e1, e2
    cdef int s0, s1, s2
    with nogil:
        for i in range(n):
            px = points[i, 0]
            py = points[i, 1]
            c = (_cell_of(py, gy0, inv_dy, ny) * nx
                 + _cell_of(px, gx0, inv_dx, nx))
            lo = cell_off[c]
            hi = cell_off[c + 1]
            for j in range(lo, hi):
                t = cell_items[j]
                b0 = ((tri_xy[t, 1, 0] - px) * (tri_xy[t, 2, 1] - py)
                      - (tri_xy[t, 1, 1] - py) * (tri_xy[t, 2, 0] - px)) * inv2a[t]
                b1 = ((tri_xy[t, 2, 0] - px) * (tri_xy[t, 0, 1] - py)
                      - (tri_xy[t, 2, 1] - py) * (tri_xy[t, 0, 0] - px)) * inv2a[t]
                b2 = 1.0 - b0 - b1
                e0 = tol * epsfac[t, 0]
                e1 = tol * epsfac[t, 1]
                e2 = tol * epsfac[t, 2]
                if b0 >= -e0 and b1 >= -e1 and b2 >= -e2:
                    found[i] = 1
                    elem[i] = t
                    bary[i, 0] = b0
                    bary[i, 1] = b1
                    bary[i, 2] = b2
                    s0 = b0 <= e0
                    s1 = b1 <= e1
                    s2 = b2 <= e2
                    nsmall = s0 + s1 + s2
                    if nsmall == 2:
                        vtx = 0 if not s0 else (1 if not s1 else 2)
                        dim[i] = 0
                        ent[i] = vert_gid[tri_verts[t, vtx]]
                    elif nsmall == 1:
                        k = 0 if s0 else (1 if s1 else 2)
                        dim[i] = 1
                        ent[i] = tri_edges[t, k]
                    else:
                        dim[i] = 2
                        ent[i] = tri_gid[t]
                    break
    return found_arr, elem_arr, dim_arr, ent_arr, bary_arr


cdef void _sort_by_id(long* ids, double* ds, Py_ssize_t n) nogil:
    # insertion sort; support sets are small
    cdef Py_ssize_t i, j
    cdef long id_i
    cdef double d_i
    for i in range(1, n):
        id_i = ids[i]
        d_i = ds[i]
        j = i - 1
        while j >= 0 and ids[j] > id_i:
            ids[j + 1] = ids[j]
            ds[j + 1] = ds[j]
            j -= 1
        ids[j + 1] = id_i
        ds[j + 1] = d_i


cdef Py_ssize_t _gather_radius(double tx, double ty, double r,
                               const double[:, ::1] pts,
                               double gx0, double gy0,
                               double inv_dx, double inv_dy,
                               Py_ssize_t nx, Py_ssize_t ny,
                               const long[::1] cell_off, const long[::1] cell_items,
                               long* out_ids, double* out_ds,
                               bint count_only) nogil:
    """Points with distance < r; when not count_only, fills id/dist buffers."""
    cdef Py_ssize_t ix0 = _cell_of(tx - r, gx0, inv_dx, nx)
    cdef Py_ssize_t ix1 = _cell_of(tx + r, gx0, inv_dx, nx)
    cdef Py_ssize_t iy0 = _cell_of(ty - r, gy0, inv_dy, ny)
    cdef Py_ssize_t iy1 = _cell_of(ty + r, gy0, inv_dy, ny)
    cdef Py_ssize_t ix, iy, c, j, p, m = 0
    cdef double dx, dy, d
    for iy in range(iy0, iy1 + 1):
        for ix in range(ix0, ix1 + 1):
            c = iy * nx + ix
            for j in range(cell_off[c], cell_off[c + 1]):
                p = cell_items[j]
                dx = pts[p, 0] - tx
                dy = pts[p, 1] - ty
                d = sqrt(dx * dx + dy * dy)
                if d < r:
                    if not count_only:
                        out_ids[m] = p
                        out_ds[m] = d
                    m += 1
    return m


def fixed_radius_supports(const double[:, ::1] targets, const double[:, ::1] pts,
                          double gx0, double gy0, double gdx, double gdy,
                          Py_ssize_t nx, Py_ssize_t ny,
                          const long[::1] cell_off, const long[::1] cell_items,
                          double r_c):
    """Per-target source ids with distance < r_c, ids ascending."""
    cdef Py_ssize_t nt = targets.shape[0]
    cdef double inv_dx = 1.0 / gdx
    cdef double inv_dy = 1.0 / gdy
    offsets_arr = np.zeros(nt + 1, dtype=np.int64)
    cdef long[::1] offsets = offsets_arr
    cdef Py_ssize_t i, m
    with nogil:
        for i in range(nt):
            m = _gather_radius(targets[i, 0], targets[i, 1], r_c, pts,
                               gx0, gy0, inv_dx, inv_dy, nx, ny,
                               cell_off, cell_items, NULL, NULL, True)
            offsets[i + 1] = offsets[i] + m
    idx_arr = np.empty(offsets_arr[nt], dtype=np.int64)
    dist_arr = np.empty(offsets_arr[nt], dtype=np.float64)
    cdef long[::1] idx = idx_arr
    cdef double[::1] dist = dist_arr
    with nogil:
        for i in range(nt):
            m = _gather_radius(targets[i, 0], targets[i, 1], r_c, pts,
                               gx0, gy0, inv_dx, inv_dy, nx, ny,
                               cell_off, cell_items,
                               &idx[offsets[i]] if offsets[i + 1] > offsets[i] else NULL,
                               &dist[offsets[i]] if offsets[i + 1] > offsets[i] else NULL,
                               False)
            if m > 1:
                _sort_by_id(&idx[offsets[i]], &dist[offsets[i]], m)
    return offsets_arr, idx_arr, dist_arr


def adaptive_radius_supports(const double[:, ::1] targets, const double[:, ::1] pts,
                             double gx0, double gy0, double gdx, double gdy,
                             Py_ssize_t nx, Py_ssize_t ny,
                             const long[::1] cell_off, const long[::1] cell_items,
                             Py_ssize_t min_pts, double r0, double growth,
                             double r_max):
    """Grow the radius geometrically until min_pts sources fall inside."""
    cdef Py_ssize_t nt = targets.shape[0]
    cdef double inv_dx = 1.0 / gdx
    cdef double inv_dy = 1.0 / gdy
    offsets_arr = np.zeros(nt + 1, dtype=np.int64)
    radii_arr = np.zeros(nt, dtype=np.float64)
    status_arr = np.zeros(nt, dtype=np.uint8)
    cdef long[::1] offsets = offsets_arr
    cdef double[::1] radii = radii_arr
    cdef cnp.uint8_t[::1] status = status_arr
    cdef Py_ssize_t i, m
    cdef double r
    with nogil:
        for i in range(nt):
            r = r0
            while True:
                m = _gather_radius(targets[i, 0], targets[i, 1], r, pts,
                                   gx0, gy0, inv_dx, inv_dy, nx, ny,
                                   cell_off, cell_items, NULL, NULL, True)
                if m >= min_pts:
                    break
                if r >= r_max:
                    status[i] = 1
                    break
                r = r * growth
                if r > r_max:
                    r = r_max
            radii[i] = r
            offsets[i + 1] = offsets[i] + m
    idx_arr = np.empty(offsets_arr[nt], dtype=np.int64)
    dist_arr = np.empty(offsets_arr[nt], dtype=np.float64)
    cdef long[::1] idx = idx_arr
    cdef double[::1] dist = dist_arr
    with nogil:
        for i in range(nt):
            m = offsets[i + 1] - offsets[i]
            if m == 0:
                continue
            _gather_radius(targets[i, 0], targets[i, 1], radii[i], pts,
                           gx0, gy0, inv_dx, inv_dy, nx, ny,
                           cell_off, cell_items,
                           &idx[offsets[i]], &dist[offsets[i]], False)
            if m > 1:
                _sort_by_id(&idx[offsets[i]], &dist[offsets[i]], m)
    return offsets_arr, idx_arr, dist_arr, radii_arr, status_arr


def fit_many(const double[:, ::1] targets, const long[::1] sup_off, const long[::1] sup_idx,
             const double[::1] sup_w, const double[:, ::1] src_xy, const double[::1] src_val,
             int degree, double lam, bint centering):
    """Weighted ridge polynomial fit per target (LAPACK dgelsy)."""
    cdef Py_ssize_t nt = targets.shape[0]
    cdef int k = (degree + 1) * (degree + 2) // 2
    values_arr = np.full(nt, np.nan, dtype=np.float64)
    coeffs_arr = np.full((nt, k), np.nan, dtype=np.float64)
    status_arr = np.zeros(nt, dtype=np.uint8)
    cdef double[::1] values = values_arr
    cdef double[:, ::1] coeffs = coeffs_arr
    cdef cnp.uint8_t[::1] status = status_arr
    cdef double sqrt_lam = sqrt(lam) if lam > 0 else 0.0

    # max row count over targets (plus ridge rows)
    cdef Py_ssize_t i, j, maxm = 1
    for i in range(nt):
        if sup_off[i + 1] - sup_off[i] > maxm:
            maxm = sup_off[i + 1] - sup_off[i]
    cdef int extra = k if lam > 0 else 0
    cdef int lda = <int>maxm + extra
    cdef int ldb = lda if lda > k else k

    A_arr = np.zeros(lda * k, dtype=np.float64)  # Fortran layout
    b_arr = np.zeros(ldb, dtype=np.float64)
    jpvt_arr = np.zeros(k, dtype=np.int32)
    cdef double[::1] A = A_arr
    cdef double[::1] bvec = b_arr
    cdef int[::1] jpvt = jpvt_arr

    # LAPACK workspace query
    cdef int m_q = lda, n_q = k, nrhs = 1, rank = 0, info = 0, lwork = -1
    cdef double wkopt = 0.0
    cdef double rcond = DBL_EPSILON
    dgelsy(&m_q, &n_q, &nrhs, &A[0], &lda, &bvec[0], &ldb, &jpvt[0],
           &rcond, &rank, &wkopt, &lwork, &info)
    lwork = <int>wkopt + 16
    work_arr = np.zeros(lwork, dtype=np.float64)
    cdef double[::1] work = work_arr

    cdef Py_ssize_t lo, hi, m, p
    cdef int mrows, col
    cdef double tx, ty, dx, dy, s, smax, u, v, w, any_pos
    cdef double[6] spow
    cdef double[6] mono
    for i in range(nt):
        lo = sup_off[i]
        hi = sup_off[i + 1]
        m = hi - lo
        if m == 0:
            status[i] = FIT_EMPTY
            continue
        any_pos = 0.0
        for j in range(lo, hi):
            if sup_w[j] > 0.0:
                any_pos = 1.0
                break
        if any_pos == 0.0:
            status[i] = FIT_EMPTY
            continue
        tx = targets[i, 0]
        ty = targets[i, 1]
        # support scale: max distance (same op order as the numpy backend)
        smax = 0.0
        for j in range(lo, hi):
            if centering:
                dx = src_xy[sup_idx[j], 0] - tx
                dy = src_xy[sup_idx[j], 1] - ty
            else:
                dx = src_xy[sup_idx[j], 0]
                dy = src_xy[sup_idx[j], 1]
            if dx * dx + dy * dy > smax:
                smax = dx * dx + dy * dy
        s = sqrt(smax)
        if s == 0.0:
            s = 1.0
        spow[0] = 1.0
        spow[1] = s
        spow[2] = s
        spow[3] = s * s
        spow[4] = s * s
        spow[5] = s * s
        mrows = <int>m + extra
        # weighted, scaled Vandermonde in Fortran order
        for p in range(lo, hi):
            j = p - lo
            if centering:
                dx = src_xy[sup_idx[p], 0] - tx
                dy = src_xy[sup_idx[p], 1] - ty
            else:
                dx = src_xy[sup_idx[p], 0]
                dy = src_xy[sup_idx[p], 1]
            u = dx / s
            v = dy / s
            w = sup_w[p]
            A[j] = w
            if k > 1:
                A[j + lda] = u * w
                A[j + 2 * lda] = v * w
            if k > 3:
                A[j + 3 * lda] = u * u * w
                A[j + 4 * lda] = u * v * w
                A[j + 5 * lda] = v * v * w
            bvec[j] = w * src_val[sup_idx[p]]
        if lam > 0:
            for col in range(k):
                for j in range(k):
                    A[(m + j) + col * lda] = 0.0
                A[(m + col) + col * lda] = sqrt_lam / spow[col]
                bvec[m + col] = 0.0
        for col in range(k):
            jpvt[col] = 0
        dgelsy(&mrows, &k, &nrhs, &A[0], &lda, &bvec[0], &ldb, &jpvt[0],
               &rcond, &rank, &work[0], &lwork, &info)
        if info != 0:
            status[i] = FIT_SINGULAR
            continue
        if rank < k and lam == 0.0:
            status[i] = FIT_SINGULAR
            continue
        for col in range(k):
            coeffs[i, col] = bvec[col] / spow[col]
        if centering:
            values[i] = coeffs[i, 0]
        else:
            mono[0] = 1.0
            mono[1] = tx
            mono[2] = ty
            mono[3] = tx * tx
            mono[4] = tx * ty
            mono[5] = ty * ty
            w = 0.0
            for col in range(k):
                w += coeffs[i, col] * mono[col]
            values[i] = w
    return values_arr, coeffs_arr, status_arr


cdef Py_ssize_t _clip_one(double* ax, double* ay, double* bx, double* by,
                          double tol_rel, double* out_x, double* out_y) nogil:
    """Sutherland-Hodgman clip of CCW triangle A against CCW triangle B."""
    cdef double[MAX_POLY] in_x
    cdef double[MAX_POLY] in_y
    cdef double[MAX_POLY] wx
    cdef double[MAX_POLY] wy
    cdef Py_ssize_t n_in, n_out, e, p, j, n, e1
    cdef double c1x, c1y, c2x, c2y, ex, ey, sx, sy, px, py, den, t
    cdef bint s_in, p_in
    cdef double diam, dxx, dyy, tol, qx, qy, rx, ry, cx, cy, chord, cross, area2
    n_out = 3
    for p in range(3):
        wx[p] = ax[p]
        wy[p] = ay[p]
    for e in range(3):
        c1x = bx[e]
        c1y = by[e]
        e1 = e + 1 if e < 2 else 0
        c2x = bx[e1]
        c2y = by[e1]
        ex = c2x - c1x
        ey = c2y - c1y
        n_in = n_out
        if n_in == 0:
            break
        for p in range(n_in):
            in_x[p] = wx[p]
            in_y[p] = wy[p]
        n_out = 0
        sx = in_x[n_in - 1]
        sy = in_y[n_in - 1]
        s_in = ex * (sy - c1y) - ey * (sx - c1x) >= 0.0
        for p in range(n_in):
            px = in_x[p]
            py = in_y[p]
            p_in = ex * (py - c1y) - ey * (px - c1x) >= 0.0
            if p_in != s_in:
                den = ex * (py - sy) - ey * (px - sx)
                # den == 0: segment numerically parallel to the clip line;
                # the crossing is ill-defined and the merge pass cleans up
                if den != 0.0:
                    t = (ex * (c1y - sy) - ey * (c1x - sx)) / den
                    wx[n_out] = sx + t * (px - sx)
                    wy[n_out] = sy + t * (py - sy)
                    n_out += 1
            if p_in:
                wx[n_out] = px
                wy[n_out] = py
                n_out += 1
            sx = px
            sy = py
            s_in = p_in
    if n_out < 3:
        return 0
    # merge tolerance relative to the larger triangle diameter
    diam = 0.0
    for e in range(3):
        e1 = e + 1 if e < 2 else 0
        dxx = ax[e1] - ax[e]
        dyy = ay[e1] - ay[e]
        t = sqrt(dxx * dxx + dyy * dyy)
        if t > diam:
            diam = t
        dxx = bx[e1] - bx[e]
        dyy = by[e1] - by[e]
        t = sqrt(dxx * dxx + dyy * dyy)
        if t > diam:
            diam = t
    tol = tol_rel * diam
    # drop consecutive near-duplicates
    n = 0
    for p in range(n_out):
        if n > 0:
            dxx = wx[p] - in_x[n - 1]
            dyy = wy[p] - in_y[n - 1]
            if sqrt(dxx * dxx + dyy * dyy) <= tol:
                continue
        in_x[n] = wx[p]
        in_y[n] = wy[p]
        n += 1
    while n >= 2:
        dxx = in_x[0] - in_x[n - 1]
        dyy = in_y[0] - in_y[n - 1]
        if sqrt(dxx * dxx + dyy * dyy) <= tol:
            n -= 1
        else:
            break
    # drop vertices within tol of the chord between their neighbors
    cdef bint changed = True
    while changed and n >= 3:
        changed = False
        for j in range(n):
            px = in_x[(j - 1 + n) % n]
            py = in_y[(j - 1 + n) % n]
            qx = in_x[j]
            qy = in_y[j]
            rx = in_x[(j + 1) % n]
            ry = in_y[(j + 1) % n]
            cx = rx - px
            cy = ry - py
            chord = sqrt(cx * cx + cy * cy)
            cross = cx * (qy - py) - cy * (qx - px)
            if cross < 0.0:
                cross = -cross
            if cross <= tol * chord:
                for p in range(j, n - 1):
                    in_x[p] = in_x[p + 1]
                    in_y[p] = in_y[p + 1]
                n -= 1
                changed = True
                break
    if n < 3:
        return 0
    area2 = 0.0
    for j in range(n):
        e1 = (j + 1) % n
        area2 += in_x[j] * in_y[e1] - in_y[j] * in_x[e1]
    if area2 <= 0.0:
        return 0
    for p in range(n):
        out_x[p] = in_x[p]
        out_y[p] = in_y[p]
    return n


def clip_batch(const double[:, :, ::1] tri_a, const double[:, :, ::1] tri_b,
               double tol_rel):
    """Clip each pair of CCW triangles; returns packed CCW polygons."""
    cdef Py_ssize_t m = tri_a.shape[0]
    offsets_arr = np.zeros(m + 1, dtype=np.int64)
    verts_arr = np.empty((8 * m, 2), dtype=np.float64)
    areas_arr = np.zeros(m, dtype=np.float64)
    cdef long[::1] offsets = offsets_arr
    cdef double[:, ::1] verts = verts_arr if m > 0 else np.empty((1, 2))
    cdef double[::1] areas = areas_arr
    cdef double[3] ax
    cdef double[3] ay
    cdef double[3] bx
    cdef double[3] by
    cdef double[MAX_POLY] ox
    cdef double[MAX_POLY] oy
    cdef Py_ssize_t i, j, n, pos = 0, j1
    cdef double area2
    with nogil:
        for i in range(m):
            for j in range(3):
                ax[j] = tri_a[i, j, 0]
                ay[j] = tri_a[i, j, 1]
                bx[j] = tri_b[i, j, 0]
                by[j] = tri_b[i, j, 1]
            n = _clip_one(ax, ay, bx, by, tol_rel, ox, oy)
            offsets[i + 1] = offsets[i] + n
            if n > 0:
                area2 = 0.0
                for j in range(n):
                    j1 = (j + 1) % n
                    area2 += ox[j] * oy[j1] - oy[j] * ox[j1]
                areas[i] = 0.5 * area2
                for j in range(n):
                    verts[pos, 0] = ox[j]
                    verts[pos, 1] = oy[j]
                    pos += 1
    return offsets_arr, verts_arr[:pos].copy(), areas_arr
