"""Independent reference implementations used to check the library.

These deliberately avoid the library's accelerated code paths: the locator
scans every element, integration uses tensor-product Gauss-Legendre on a
collapsed-square (Duffy) map, and areas come from Monte Carlo sampling or
shapely booleans.
"""

import numpy as np

BLOCK = 512


def brute_force_locate(mesh, points, tol=1e-10):
    """O(npoints * nelems) localization with the same public contract:
    ascending element scan, first tol-halo hit, lowest-dimension entity."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = pts.shape[0]
    ne = mesh.nelems
    xy = mesh.tri_xy
    inv2a = 1.0 / (2.0 * mesh.areas)
    eps = tol * mesh.epsfac  # (ne, 3)
    found = np.zeros(n, dtype=bool)
    elem = np.full(n, -1, dtype=np.int64)
    dim = np.full(n, -1, dtype=np.int64)
    ent = np.full(n, -1, dtype=np.int64)
    bary = np.full((n, 3), np.nan)
    for b0 in range(0, n, BLOCK):
        b1 = min(b0 + BLOCK, n)
        px = pts[b0:b1, 0][:, None]
        py = pts[b0:b1, 1][:, None]
        b0c = ((xy[None, :, 1, 0] - px) * (xy[None, :, 2, 1] - py)
               - (xy[None, :, 1, 1] - py) * (xy[None, :, 2, 0] - px)) * inv2a
        b1c = ((xy[None, :, 2, 0] - px) * (xy[None, :, 0, 1] - py)
               - (xy[None, :, 2, 1] - py) * (xy[None, :, 0, 0] - px)) * inv2a
        b2c = 1.0 - b0c - b1c
        ok = ((b0c >= -eps[None, :, 0]) & (b1c >= -eps[None, :, 1])
              & (b2c >= -eps[None, :, 2]))
        hit = ok.any(axis=1)
        first = np.argmax(ok, axis=1)
        for i in np.nonzero(hit)[0]:
            t = int(first[i])
            gi = b0 + i
            bb = (float(b0c[i, t]), float(b1c[i, t]), float(b2c[i, t]))
            found[gi] = True
            elem[gi] = t
            bary[gi] = bb
            small = [k for k in range(3) if bb[k] <= eps[t, k]]
            if len(small) == 2:
                vtx = 3 - small[0] - small[1]
                dim[gi] = 0
                ent[gi] = mesh.vert_gid[mesh.tris[t, vtx]]
            elif len(small) == 1:
                dim[gi] = 1
                ent[gi] = mesh.tri_edges[t, small[0]]
            else:
                dim[gi] = 2
                ent[gi] = mesh.tri_gid[t]
    return found, elem, dim, ent, bary


def duffy_integrate(mesh, fn, order=12):
    """High-order integral of f(x, y) over a mesh via a Duffy-mapped
    tensor Gauss-Legendre rule on every triangle."""
    g, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (g + 1.0)  # [0, 1]
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    WU = np.outer(wu, wu)
    # Duffy: (u, v) in unit square -> (u, v*(1-u)) in unit right triangle
    X = U
    Y = V * (1.0 - U)
    J = (1.0 - U)
    total = 0.0
    for t in range(mesh.nelems):
        p0, p1, p2 = mesh.tri_xy[t]
        px = p0[0] + (p1[0] - p0[0]) * X + (p2[0] - p0[0]) * Y
        py = p0[1] + (p1[1] - p0[1]) * X + (p2[1] - p0[1]) * Y
        total += 2.0 * mesh.areas[t] * np.sum(WU * J * fn(px, py))
    return total


def duffy_integrate_triangles(corners, fn, order=8):
    """Same rule over an (n, 3, 2) array of triangles; returns per-triangle
    integrals."""
    g, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (g + 1.0)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    WU = (np.outer(wu, wu) * (1.0 - U)).reshape(-1)
    X = U.reshape(-1)
    Y = (V * (1.0 - U)).reshape(-1)
    p0 = corners[:, 0]
    d1 = corners[:, 1] - corners[:, 0]
    d2 = corners[:, 2] - corners[:, 0]
    px = p0[:, 0:1] + np.outer(d1[:, 0], X) + np.outer(d2[:, 0], Y)
    py = p0[:, 1:2] + np.outer(d1[:, 1], X) + np.outer(d2[:, 1], Y)
    areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    return 2.0 * areas * (fn(px, py) @ WU)


def monte_carlo_intersection_area(tri_a, tri_b, n_samples, seed=0):
    """Fraction-of-bbox estimate of |A intersect B| with rng(seed)."""
    tri_a = np.asarray(tri_a, float)
    tri_b = np.asarray(tri_b, float)
    lo = np.minimum(tri_a.min(axis=0), tri_b.min(axis=0))
    hi = np.maximum(tri_a.max(axis=0), tri_b.max(axis=0))
    rng = np.random.RandomState(seed)
    pts = rng.uniform(lo, hi, size=(n_samples, 2))

    def inside(tri, p):
        ok = np.ones(p.shape[0], dtype=bool)
        for k in range(3):
            a = tri[k]
            b = tri[(k + 1) % 3]
            ok &= ((b[0] - a[0]) * (p[:, 1] - a[1])
                   - (b[1] - a[1]) * (p[:, 0] - a[0])) >= 0
        return ok

    frac = np.mean(inside(tri_a, pts) & inside(tri_b, pts))
    box = (hi[0] - lo[0]) * (hi[1] - lo[1])
    est = frac * box
    sigma = box * np.sqrt(max(frac * (1 - frac), 1e-12) / n_samples)
    return est, sigma


def mesh_domain_area(mesh):
    """Domain area from the boundary loops (independent of element areas):
    signed shoelace sums of boundary edges oriented as their triangles
    traverse them."""
    total = 0.0
    for e in mesh.boundary_edges:
        t = mesh.edge_tris[e, 0]
        va, vb = mesh.edges[e]
        # orient the edge as triangle t walks it (CCW)
        tri = list(mesh.tris[t])
        ia = tri.index(va)
        if tri[(ia + 1) % 3] != vb:
            va, vb = vb, va
        x0, y0 = mesh.coords[va]
        x1, y1 = mesh.coords[vb]
        total += x0 * y1 - y0 * x1
    return 0.5 * total


def shapely_union(mesh):
    from shapely.geometry import Polygon
    from shapely.ops import unary_union
    return unary_union([Polygon(mesh.tri_xy[t]) for t in range(mesh.nelems)])
