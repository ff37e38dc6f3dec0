"""Numpy fallback implementations of the hot kernels.

Same call signatures as the compiled extension ``_ext``. Inner loops run in
Python with vectorized numpy per-item work; the compiled backend replaces
them with C loops. Both backends keep the same operation order so results
agree to rounding.
"""

import numpy as np
from scipy.linalg import lstsq

# RBF kind codes shared with the compiled backend.
RBF_GAUSSIAN = 0
RBF_C4 = 1
RBF_CONST = 2
RBF_IDENTITY = 3
RBF_MULTIQUADRIC = 4
RBF_INVERSE_MULTIQUADRIC = 5
RBF_THIN_PLATE_SPLINE = 6
RBF_CUBIC_SPLINE = 7

# fit_many status codes
FIT_OK = 0
FIT_SINGULAR = 1
FIT_EMPTY = 2


def rbf_weights(kind, a, r_c, r):
    """Evaluate the radial weight for distances ``r`` (cutoff at r > r_c)."""
    r = np.asarray(r, dtype=np.float64)
    if kind == RBF_IDENTITY:
        return np.ones_like(r)
    x = a * r / r_c
    if kind == RBF_GAUSSIAN:
        w = np.exp(-(x * x))
    elif kind == RBF_C4:
        u = r / r_c
        poly = 6 + u * (36 + u * (82 + u * (72 + u * (30 + u * 5))))
        q = 1 - u
        q2 = q * q
        w = poly * (q2 * q2 * q2)
    elif kind == RBF_CONST:
        w = np.ones_like(r)
    elif kind == RBF_MULTIQUADRIC:
        w = np.sqrt(1 + x * x)
    elif kind == RBF_INVERSE_MULTIQUADRIC:
        w = 1 / np.sqrt(1 + x * x)
    elif kind == RBF_THIN_PLATE_SPLINE:
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(x > 0, x * x * np.log(np.where(x > 0, x, 1.0)), 0.0)
    elif kind == RBF_CUBIC_SPLINE:
        w = x * x * x
    else:
        raise ValueError(f"unknown rbf kind code {kind}")
    return np.where(r > r_c, 0.0, w)


def _cell_of(v, lo, inv_d, n):
    c = int((v - lo) * inv_d)
    if c < 0:
        return 0
    if c >= n:
        return n - 1
    return c


def locate_batch(points, tri_xy, tri_verts, tri_edges, vert_gid, tri_gid,
                 inv2a, epsfac, gx0, gy0, gdx, gdy, nx, ny,
                 cell_off, cell_items, tol):
    """Grid-accelerated point localization with entity classification.

    Returns (found, elem, dim, ent, bary): the first element in ascending id
    order whose tol-halo contains each point, classified on the lowest
    dimension entity within tolerance.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    found = np.zeros(n, dtype=bool)
    elem = np.full(n, -1, dtype=np.int64)
    dim = np.full(n, -1, dtype=np.int64)
    ent = np.full(n, -1, dtype=np.int64)
    bary = np.full((n, 3), np.nan, dtype=np.float64)
    inv_dx = 1.0 / gdx
    inv_dy = 1.0 / gdy
    for i in range(n):
        px, py = points[i]
        ix = _cell_of(px, gx0, inv_dx, nx)
        iy = _cell_of(py, gy0, inv_dy, ny)
        c = iy * nx + ix
        cand = cell_items[cell_off[c]:cell_off[c + 1]]
        if cand.size == 0:
            continue
        P = tri_xy[cand]
        b0 = ((P[:, 1, 0] - px) * (P[:, 2, 1] - py)
              - (P[:, 1, 1] - py) * (P[:, 2, 0] - px)) * inv2a[cand]
        b1 = ((P[:, 2, 0] - px) * (P[:, 0, 1] - py)
              - (P[:, 2, 1] - py) * (P[:, 0, 0] - px)) * inv2a[cand]
        b2 = 1.0 - b0 - b1
        eps = tol * epsfac[cand]
        ok = (b0 >= -eps[:, 0]) & (b1 >= -eps[:, 1]) & (b2 >= -eps[:, 2])
        if not ok.any():
            continue
        j = int(np.argmax(ok))
        t = int(cand[j])
        b = (float(b0[j]), float(b1[j]), float(b2[j]))
        e = eps[j]
        small = [k for k in range(3) if b[k] <= e[k]]
        found[i] = True
        elem[i] = t
        bary[i] = b
        if len(small) == 2:
            vtx = 3 - small[0] - small[1]
            dim[i] = 0
            ent[i] = vert_gid[tri_verts[t, vtx]]
        elif len(small) == 1:
            dim[i] = 1
            ent[i] = tri_edges[t, small[0]]
        else:
            dim[i] = 2
            ent[i] = tri_gid[t]
    return found, elem, dim, ent, bary


def _grid_gather(tx, ty, r, pts, gx0, gy0, inv_dx, inv_dy, nx, ny,
                 cell_off, cell_items):
    """Candidate point ids from every cell overlapping the disk bbox."""
    ix0 = _cell_of(tx - r, gx0, inv_dx, nx)
    ix1 = _cell_of(tx + r, gx0, inv_dx, nx)
    iy0 = _cell_of(ty - r, gy0, inv_dy, ny)
    iy1 = _cell_of(ty + r, gy0, inv_dy, ny)
    chunks = []
    for iy in range(iy0, iy1 + 1):
        base = iy * nx
        for ix in range(ix0, ix1 + 1):
            c = base + ix
            chunk = cell_items[cell_off[c]:cell_off[c + 1]]
            if chunk.size:
                chunks.append(chunk)
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)


def fixed_radius_supports(targets, pts, gx0, gy0, gdx, gdy, nx, ny,
                          cell_off, cell_items, r_c):
    """Per-target source ids with distance < r_c, ids ascending."""
    targets = np.asarray(targets, dtype=np.float64)
    nt = targets.shape[0]
    inv_dx = 1.0 / gdx
    inv_dy = 1.0 / gdy
    offsets = np.zeros(nt + 1, dtype=np.int64)
    idx_parts = []
    dist_parts = []
    for i in range(nt):
        tx, ty = targets[i]
        cand = _grid_gather(tx, ty, r_c, pts, gx0, gy0, inv_dx, inv_dy,
                            nx, ny, cell_off, cell_items)
        if cand.size:
            dx = pts[cand, 0] - tx
            dy = pts[cand, 1] - ty
            d = np.sqrt(dx * dx + dy * dy)
            sel = d < r_c
            ids = cand[sel]
            ds = d[sel]
            order = np.argsort(ids, kind="stable")
            ids = ids[order]
            ds = ds[order]
        else:
            ids = np.empty(0, dtype=np.int64)
            ds = np.empty(0, dtype=np.float64)
        offsets[i + 1] = offsets[i] + ids.size
        idx_parts.append(ids)
        dist_parts.append(ds)
    idx = np.concatenate(idx_parts) if idx_parts else np.empty(0, np.int64)
    dist = np.concatenate(dist_parts) if dist_parts else np.empty(0, np.float64)
    return offsets, idx, dist


def adaptive_radius_supports(targets, pts, gx0, gy0, gdx, gdy, nx, ny,
                             cell_off, cell_items, min_pts, r0, growth, r_max):
    """Grow the radius geometrically until min_pts sources fall inside.

    status[i] = 1 when even r_max yields fewer than min_pts sources.
    """
    targets = np.asarray(targets, dtype=np.float64)
    nt = targets.shape[0]
    inv_dx = 1.0 / gdx
    inv_dy = 1.0 / gdy
    offsets = np.zeros(nt + 1, dtype=np.int64)
    radii = np.zeros(nt, dtype=np.float64)
    status = np.zeros(nt, dtype=np.uint8)
    idx_parts = []
    dist_parts = []
    for i in range(nt):
        tx, ty = targets[i]
        r = r0
        while True:
            cand = _grid_gather(tx, ty, r, pts, gx0, gy0, inv_dx, inv_dy,
                                nx, ny, cell_off, cell_items)
            if cand.size:
                dx = pts[cand, 0] - tx
                dy = pts[cand, 1] - ty
                d = np.sqrt(dx * dx + dy * dy)
                sel = d < r
                ids = cand[sel]
                ds = d[sel]
            else:
                ids = np.empty(0, dtype=np.int64)
                ds = np.empty(0, dtype=np.float64)
            if ids.size >= min_pts:
                break
            if r >= r_max:
                status[i] = 1
                break
            r = min(r * growth, r_max)
        order = np.argsort(ids, kind="stable")
        ids = ids[order]
        ds = ds[order]
        radii[i] = r
        offsets[i + 1] = offsets[i] + ids.size
        idx_parts.append(ids)
        dist_parts.append(ds)
    idx = np.concatenate(idx_parts) if idx_parts else np.empty(0, np.int64)
    dist = np.concatenate(dist_parts) if dist_parts else np.empty(0, np.float64)
    return offsets, idx, dist, radii, status


_MONO_DEG = np.array([0, 1, 1, 2, 2, 2], dtype=np.int64)


def fit_many(targets, sup_off, sup_idx, sup_w, src_xy, src_val,
             degree, lam, centering):
    """Weighted ridge polynomial fit per target.

    Support coordinates are shifted to the target (if centering) and scaled
    by the support radius before the least-squares solve, then coefficients
    are mapped back to the unscaled monomial basis [1, x, y, x^2, xy, y^2].
    Returns (values, coeffs, status).
    """
    targets = np.asarray(targets, dtype=np.float64)
    nt = targets.shape[0]
    k = (degree + 1) * (degree + 2) // 2
    values = np.full(nt, np.nan, dtype=np.float64)
    coeffs = np.full((nt, k), np.nan, dtype=np.float64)
    status = np.zeros(nt, dtype=np.uint8)
    degs = _MONO_DEG[:k]
    sqrt_lam = np.sqrt(lam) if lam > 0 else 0.0
    for i in range(nt):
        lo, hi = sup_off[i], sup_off[i + 1]
        m = hi - lo
        if m == 0:
            status[i] = FIT_EMPTY
            continue
        ids = sup_idx[lo:hi]
        w = sup_w[lo:hi]
        if not np.any(w > 0):
            status[i] = FIT_EMPTY
            continue
        tx, ty = targets[i]
        if centering:
            dx = src_xy[ids, 0] - tx
            dy = src_xy[ids, 1] - ty
        else:
            dx = src_xy[ids, 0].copy()
            dy = src_xy[ids, 1].copy()
        s = np.sqrt(np.max(dx * dx + dy * dy))
        if s == 0.0:
            s = 1.0
        u = dx / s
        v = dy / s
        cols = [np.ones(m), u, v, u * u, u * v, v * v]
        A = np.stack(cols[:k], axis=1)
        A *= w[:, None]
        b = w * src_val[ids]
        if lam > 0:
            # penalty applies to physical (unscaled) coefficients
            reg = np.diag(sqrt_lam / s**degs)
            A = np.vstack([A, reg])
            b = np.concatenate([b, np.zeros(k)])
        sol, _, rank, _ = lstsq(A, b, lapack_driver="gelsy")
        if rank < k and lam == 0:
            status[i] = FIT_SINGULAR
            continue
        c = sol / s**degs
        coeffs[i] = c
        if centering:
            values[i] = c[0]
        else:
            mono = [1.0, tx, ty, tx * tx, tx * ty, ty * ty]
            values[i] = float(np.dot(c, mono[:k]))
    return values, coeffs, status


def _clip_one(ax, ay, bx, by, tol_rel):
    """Sutherland-Hodgman clip of CCW triangle A against CCW triangle B."""
    out = [(ax[0], ay[0]), (ax[1], ay[1]), (ax[2], ay[2])]
    for e in range(3):
        c1x, c1y = bx[e], by[e]
        c2x, c2y = bx[(e + 1) % 3], by[(e + 1) % 3]
        ex, ey = c2x - c1x, c2y - c1y
        inp = out
        out = []
        if not inp:
            break
        sx, sy = inp[-1]
        s_in = ex * (sy - c1y) - ey * (sx - c1x) >= 0.0
        for px, py in inp:
            p_in = ex * (py - c1y) - ey * (px - c1x) >= 0.0
            if p_in != s_in:
                den = ex * (py - sy) - ey * (px - sx)
                # den == 0: segment numerically parallel to the clip line;
                # the crossing is ill-defined and the merge pass cleans up
                if den != 0.0:
                    t = (ex * (c1y - sy) - ey * (c1x - sx)) / den
                    out.append((sx + t * (px - sx), sy + t * (py - sy)))
            if p_in:
                out.append((px, py))
            sx, sy, s_in = px, py, p_in

    if len(out) < 3:
        return []
    # merge tolerance relative to the larger triangle diameter
    diam = 0.0
    for xs, ys in ((ax, ay), (bx, by)):
        for e in range(3):
            dx = xs[(e + 1) % 3] - xs[e]
            dy = ys[(e + 1) % 3] - ys[e]
            diam = max(diam, np.sqrt(dx * dx + dy * dy))
    tol = tol_rel * diam
    # drop consecutive near-duplicates (wraparound included)
    dedup = []
    for px, py in out:
        if dedup:
            qx, qy = dedup[-1]
            if np.sqrt((px - qx) ** 2 + (py - qy) ** 2) <= tol:
                continue
        dedup.append((px, py))
    while len(dedup) >= 2:
        px, py = dedup[0]
        qx, qy = dedup[-1]
        if np.sqrt((px - qx) ** 2 + (py - qy) ** 2) <= tol:
            dedup.pop()
        else:
            break
    # drop vertices within tol of the chord between their neighbors
    changed = True
    while changed and len(dedup) >= 3:
        changed = False
        n = len(dedup)
        for j in range(n):
            px, py = dedup[(j - 1) % n]
            qx, qy = dedup[j]
            rx, ry = dedup[(j + 1) % n]
            cx, cy = rx - px, ry - py
            chord = np.sqrt(cx * cx + cy * cy)
            cross = cx * (qy - py) - cy * (qx - px)
            if abs(cross) <= tol * chord:
                dedup.pop(j)
                changed = True
                break
    if len(dedup) < 3:
        return []
    area2 = 0.0
    n = len(dedup)
    for j in range(n):
        px, py = dedup[j]
        qx, qy = dedup[(j + 1) % n]
        area2 += px * qy - py * qx
    if area2 <= 0.0:
        return []
    return dedup


def clip_batch(tri_a, tri_b, tol_rel):
    """Clip each pair of CCW triangles; returns packed CCW polygons.

    Returns (offsets, verts, areas): polygon i occupies
    verts[offsets[i]:offsets[i+1]].
    """
    tri_a = np.asarray(tri_a, dtype=np.float64)
    tri_b = np.asarray(tri_b, dtype=np.float64)
    m = tri_a.shape[0]
    offsets = np.zeros(m + 1, dtype=np.int64)
    verts = []
    areas = np.zeros(m, dtype=np.float64)
    for i in range(m):
        poly = _clip_one(tri_a[i, :, 0], tri_a[i, :, 1],
                         tri_b[i, :, 0], tri_b[i, :, 1], tol_rel)
        offsets[i + 1] = offsets[i] + len(poly)
        if poly:
            verts.extend(poly)
            area2 = 0.0
            n = len(poly)
            for j in range(n):
                px, py = poly[j]
                qx, qy = poly[(j + 1) % n]
                area2 += px * qy - py * qx
            areas[i] = 0.5 * area2
    v = np.array(verts, dtype=np.float64) if verts else np.empty((0, 2))
    return offsets, v, areas
