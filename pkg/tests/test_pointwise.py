import numpy as np
import pytest

import fieldbridge as fb
from fieldbridge import (
    AdaptiveRadius,
    ElementPatch,
    FitSpec,
    FixedRadius,
    RadialBasisSpec,
    RbfKind,
)
from fieldbridge.errors import (
    ExtrinsicEvaluationError,
    FieldError,
    InsufficientSourcesError,
    SingularFitError,
    UnderdeterminedError,
)

ALL_KINDS = list(RbfKind)


def test_eval_rbf_table_values():
    assert fb.eval_rbf(RadialBasisSpec(RbfKind.GAUSSIAN, r_c=1.0), 0.0) == 1.0
    assert fb.eval_rbf(RadialBasisSpec(RbfKind.C4, r_c=1.0), 0.0) == 6.0
    # sqrt(1 + a^2) at the cutoff
    got = fb.eval_rbf(RadialBasisSpec(RbfKind.MULTIQUADRIC, a=2.0, r_c=0.7), 0.7)
    assert got == pytest.approx(np.sqrt(5.0), rel=1e-15)
    assert fb.eval_rbf(RadialBasisSpec(RbfKind.THIN_PLATE_SPLINE, r_c=1.0), 0.0) == 0.0


def test_eval_rbf_zero_beyond_cutoff():
    for kind in ALL_KINDS:
        spec = RadialBasisSpec(kind, r_c=0.4)
        w = fb.eval_rbf(spec, 0.6)
        if kind is RbfKind.IDENTITY:
            assert w == 1.0
        else:
            assert w == 0.0


def test_eval_rbf_identity_ignores_radius():
    spec = RadialBasisSpec(RbfKind.IDENTITY)
    assert fb.eval_rbf(spec, 123.0) == 1.0
    assert np.array_equal(fb.eval_rbf(spec, np.array([0.0, 5.0])), [1.0, 1.0])


def test_select_support_single_coincident_source():
    src = np.array([[0.5, 0.5], [3.0, 3.0]])
    idx, w = fb.select_support((0.5, 0.5), src, FixedRadius(0.1),
                               rbf=RadialBasisSpec(RbfKind.C4, r_c=0.1),
                               fit_degree=0)
    assert list(idx) == [0]
    assert w[0] == 6.0  # C4 at r=0


def test_fixed_radius_underdetermined():
    rng = np.random.RandomState(0)
    src = rng.uniform(0, 1, size=(4, 2))
    with pytest.raises(UnderdeterminedError):
        fb.select_support((0.5, 0.5), src, FixedRadius(5.0),
                          rbf=RadialBasisSpec(RbfKind.CONST, r_c=5.0),
                          fit_degree=2)  # 6 monomials, 4 points


def test_adaptive_radius_matches_distance_sort_oracle():
    xs = np.linspace(0, 1, 11)
    src = np.array([(x, y) for x in xs for y in xs])
    target = np.array([0.52, 0.47])
    r0, growth, min_points = 1e-3, 1.5, 10
    idx, w = fb.select_support(target, src,
                               AdaptiveRadius(min_points, r0, growth),
                               rbf=RadialBasisSpec(RbfKind.CONST),
                               fit_degree=1)
    d = np.linalg.norm(src - target, axis=1)
    r = r0
    while np.count_nonzero(d < r) < min_points:
        r *= growth
    want = np.nonzero(d < r)[0]
    assert np.array_equal(np.sort(idx), want)
    nearest = np.argsort(d)[:min_points]
    assert set(nearest).issubset(set(idx))


def test_adaptive_radius_insufficient_sources():
    src = np.array([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(InsufficientSourcesError):
        fb.select_support((0.5, 0.5), src, AdaptiveRadius(5, 0.1, 2.0),
                          rbf=RadialBasisSpec(RbfKind.CONST), fit_degree=0)


def test_fit_local_constant():
    rng = np.random.RandomState(1)
    pts = rng.uniform(-1, 1, size=(8, 2))
    vals = np.full(8, 7.0)
    w = rng.uniform(0.1, 2.0, size=8)
    c = fb.fit_local((0.1, -0.2), pts, vals, w, degree=2)
    assert c[0] == pytest.approx(7.0, rel=1e-13)
    assert np.abs(c[1:]).max() < 1e-12


def test_fit_local_linear_reproduction():
    pts = np.array([[0.0, 0.0], [1.0, 0.1], [0.2, 1.0], [0.9, 0.8]])
    vals = 2 * pts[:, 0] + 3 * pts[:, 1]
    target = (0.4, 0.3)
    c = fb.fit_local(target, pts, vals, np.ones(4), degree=1)
    assert c[0] == pytest.approx(2 * 0.4 + 3 * 0.3, abs=1e-12)
    assert c[1] == pytest.approx(2.0, abs=1e-12)
    assert c[2] == pytest.approx(3.0, abs=1e-12)


def test_fit_local_ridge_limit():
    rng = np.random.RandomState(2)
    pts = rng.uniform(-1, 1, size=(10, 2))
    vals = rng.randn(10)
    norms = []
    for lam in (0.0, 1e2, 1e4, 1e6):
        c = fb.fit_local((0.0, 0.0), pts, vals, np.ones(10), degree=1, lam=lam)
        norms.append(np.linalg.norm(c))
    assert all(a >= b for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-4 * norms[0]


def test_fit_local_singular_without_regularization():
    # collinear points cannot determine a plane
    pts = np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.25, 0.25]])
    vals = np.array([0.0, 1.0, 2.0, 0.5])
    with pytest.raises(SingularFitError):
        fb.fit_local((0.5, 0.5), pts, vals, np.ones(4), degree=1, lam=0.0)
    # ridge regularization makes it solvable
    c = fb.fit_local((0.5, 0.5), pts, vals, np.ones(4), degree=1, lam=1e-8)
    assert np.isfinite(c).all()


def test_weight_scaling_invariance():
    rng = np.random.RandomState(3)
    pts = rng.uniform(-1, 1, size=(12, 2))
    vals = np.sin(pts[:, 0]) + pts[:, 1] ** 2
    w = rng.uniform(0.5, 1.5, size=12)
    c1 = fb.fit_local((0.1, 0.2), pts, vals, w, degree=2)
    c2 = fb.fit_local((0.1, 0.2), pts, vals, 37.5 * w, degree=2)
    assert np.allclose(c1, c2, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("degree", [0, 1, 2])
def test_polynomial_reproduction_small(disk_small, kind, degree):
    polys = {
        0: lambda x, y: np.full_like(x, 3.5),
        1: lambda x, y: 2 * x - y + 1,
        2: lambda x, y: x * x + 2 * x * y - y * y + x + 0.5,
    }
    f = fb.sample_field(disk_small, polys[degree], "vertices", 1)
    h = disk_small.mean_edge_length
    spec = FitSpec(degree, RadialBasisSpec(kind, a=2.0),
                   AdaptiveRadius(max(6, 2 * fb.pointwise.n_monomials(degree)),
                                  1.5 * h, 1.5), lam=0.0)
    got = fb.transfer_pointwise(f, disk_small.centroids(), spec)
    c = disk_small.centroids()
    want = polys[degree](c[:, 0], c[:, 1])
    err = np.linalg.norm(got - want) / np.linalg.norm(want)
    assert err < 1e-10, f"{kind} degree {degree}: {err:.2e}"


def test_cutoff_locality_bitwise(disk_small):
    h = disk_small.mean_edge_length
    r_c = 2.0 * h
    f = fb.sample_field(disk_small, lambda x, y: np.sin(x) * np.cos(y) + 2,
                        "vertices", 1)
    targets = disk_small.centroids()[:40]
    spec = FitSpec(1, RadialBasisSpec(RbfKind.C4), FixedRadius(r_c))
    base = fb.transfer_pointwise(f, targets, spec)
    # perturb a source farther than r_c from every target
    d = np.linalg.norm(disk_small.coords[None, :, :] - targets[:, None, :],
                       axis=2).min(axis=0)
    far = int(np.argmax(d))
    assert d[far] > r_c
    values = f.values.copy()
    values[far] += 1e6
    f2 = f.with_values(values)
    pert = fb.transfer_pointwise(f2, targets, spec)
    assert np.array_equal(base, pert)


def test_transfer_against_dense_least_squares_oracle(disk_small):
    h = disk_small.mean_edge_length
    spec = FitSpec(1, RadialBasisSpec(RbfKind.C4), FixedRadius(2.0 * h))
    f = fb.sample_field(disk_small, lambda x, y: np.sin(x) * np.cos(y) + 2,
                        "vertices", 1)
    targets = disk_small.centroids()
    got = fb.transfer_pointwise(f, targets, spec)

    src = disk_small.coords
    oracle = np.empty(targets.shape[0])
    for i, t in enumerate(targets):
        d = np.linalg.norm(src - t, axis=1)
        sel = np.nonzero(d < 2.0 * h)[0]
        w = fb.eval_rbf(RadialBasisSpec(RbfKind.C4, r_c=2.0 * h), d[sel])
        dx = src[sel, 0] - t[0]
        dy = src[sel, 1] - t[1]
        A = np.column_stack([np.ones(sel.size), dx, dy]) * w[:, None]
        c, *_ = np.linalg.lstsq(A, w * f.values[sel], rcond=None)
        oracle[i] = c[0]
    assert np.abs(got - oracle).max() < 1e-12


def test_element_patch_mode(disk_small):
    f = fb.sample_field(disk_small, lambda x, y: 2 * x - y + 1, "vertices", 1)
    spec = FitSpec(1, RadialBasisSpec(RbfKind.CONST), ElementPatch(layers=1))
    got = fb.transfer_pointwise(f, disk_small.centroids(), spec)
    c = disk_small.centroids()
    want = 2 * c[:, 0] - c[:, 1] + 1
    assert np.abs(got - want).max() < 1e-10
    # unit weights, SPR style
    idx, w = fb.select_support(tuple(c[5]), disk_small.coords,
                               ElementPatch(1), fit_degree=1,
                               mesh=disk_small)
    assert (w == 1.0).all()
    assert set(disk_small.tris[5]) <= set(idx)


def test_element_patch_rejects_point_clouds():
    rng = np.random.RandomState(4)
    src = rng.uniform(0, 1, size=(30, 2))
    spec = FitSpec(1, RadialBasisSpec(RbfKind.CONST), ElementPatch(1))
    with pytest.raises(FieldError):
        fb.fit_point_cloud(src, np.ones(30), [(0.5, 0.5)], spec)


def test_transfer_threads_identical(disk_small):
    h = disk_small.mean_edge_length
    spec = FitSpec(1, RadialBasisSpec(RbfKind.C4), FixedRadius(2.0 * h))
    f = fb.sample_field(disk_small, lambda x, y: np.sin(3 * x) + y, "vertices", 1)
    one = fb.transfer_pointwise(f, disk_small.centroids(), spec, threads=1)
    four = fb.transfer_pointwise(f, disk_small.centroids(), spec, threads=4)
    assert np.array_equal(one, four)


def test_extrinsic_analytic_callback_exact(disk_small):
    h = disk_small.mean_edge_length
    spec = FitSpec(1, RadialBasisSpec(RbfKind.GAUSSIAN), FixedRadius(2.5 * h))

    def callback(pts):
        return 4 * pts[:, 0] - pts[:, 1] + 2

    got = fb.transfer_extrinsic(callback, disk_small.centroids(), spec,
                                disk_small.coords)
    c = disk_small.centroids()
    want = 4 * c[:, 0] - c[:, 1] + 2
    assert np.abs(got - want).max() < 1e-10


def test_extrinsic_matches_intrinsic_bitwise(disk_small):
    h = disk_small.mean_edge_length
    spec = FitSpec(1, RadialBasisSpec(RbfKind.C4), FixedRadius(2.0 * h))
    f = fb.sample_field(disk_small, lambda x, y: np.sin(x) * np.cos(y) + 2,
                        "vertices", 1)
    table = {(float(x), float(y)): float(v)
             for (x, y), v in zip(disk_small.coords, f.values)}
    calls = []

    def callback(pts):
        calls.append(len(pts))
        return np.array([table[(float(x), float(y))] for x, y in pts])

    intrinsic = fb.transfer_pointwise(f, disk_small.centroids(), spec)
    extrinsic = fb.transfer_extrinsic(callback, disk_small.centroids(), spec,
                                      disk_small.coords, batch_size=100)
    assert np.array_equal(intrinsic, extrinsic)
    assert len(calls) <= int(np.ceil(disk_small.nelems / 100))


def test_extrinsic_failure_names_batch(disk_small):
    h = disk_small.mean_edge_length
    spec = FitSpec(0, RadialBasisSpec(RbfKind.CONST), FixedRadius(2.0 * h))
    state = {"batch": 0}

    def flaky(pts):
        if state["batch"] == 3:
            raise RuntimeError("remote evaluation unavailable")
        state["batch"] += 1
        return np.zeros(len(pts))

    with pytest.raises(ExtrinsicEvaluationError) as exc:
        fb.transfer_extrinsic(flaky, disk_small.centroids(), spec,
                              disk_small.coords, batch_size=50)
    assert exc.value.batch == 3
    assert "batch 3" in str(exc.value)


def test_source_equals_target_polynomial_consistency(disk_small):
    # when targets coincide with sources, polynomial fields come back exactly
    f = fb.sample_field(disk_small, lambda x, y: x - 2 * y + 3, "vertices", 1)
    h = disk_small.mean_edge_length
    spec = FitSpec(1, RadialBasisSpec(RbfKind.C4), FixedRadius(2.5 * h))
    got = fb.transfer_pointwise(f, disk_small.coords, spec)
    assert np.linalg.norm(got - f.values) / np.linalg.norm(f.values) < 1e-10
