"""Transfer error measures and the iterated-mapping experiment.

Accuracy error is the relative Euclidean norm of dof differences;
conservation error is the relative difference of field integrals. The
iterated experiment maps a vertex field through complete
vertex -> centroid -> vertex cycles (or mesh A -> mesh B -> mesh A cycles
when a second mesh is given) and records both errors per cycle against
the pre-mapping field.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .conservative import assemble_mass, build_supermesh, transfer_conservative
from .errors import FieldBridgeError, FieldError
from .mesh import Field, integrate_field, sample_field
from .pointwise import FitSpec, PreparedTransfer

__all__ = [
    "ErrorSeries",
    "ConservativeSpec",
    "accuracy_error",
    "conservation_error",
    "run_iteration_experiment",
]


def _values_of(f):
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=np.float64)


def accuracy_error(f, f_star, mesh=None):
    """||f - f*|| / ||f*|| over dofs (Euclidean)."""
    a = _values_of(f)
    b = _values_of(f_star)
    if a.shape != b.shape:
        raise FieldError(f"dof layouts disagree: {a.shape} vs {b.shape}")
    if mesh is not None:
        for g in (f, f_star):
            if isinstance(g, Field) and g.mesh is not mesh:
                raise FieldError("field does not live on the supplied mesh")
    denom = float(np.linalg.norm(b))
    if denom == 0.0:
        raise FieldError("accuracy error undefined: ||f*|| = 0")
    return float(np.linalg.norm(a - b)) / denom


def conservation_error(f, f_star, mesh=None, quad_degree=2):
    """|integral(f) - integral(f*)| / |integral(f*)|.

    Each field integrates over its own mesh, so the measure also applies
    to transfers between different meshes.
    """
    if mesh is not None:
        for g in (f, f_star):
            if g.mesh is not mesh:
                raise FieldError("field does not live on the supplied mesh")
    int_f = integrate_field(f, quad_degree)
    int_star = integrate_field(f_star, quad_degree)
    if int_star == 0.0:
        raise FieldError("conservation error undefined: integral of f* is 0")
    return abs(int_f - int_star) / abs(int_star)


@dataclass(frozen=True)
class ConservativeSpec:
    """Method configuration for supermesh L2 projection transfers."""

    rel_tol: float = 1e-12
    quadrature_degree: int | None = None


@dataclass
class ErrorSeries:
    """Per-iteration (accuracy, conservation) records with run metadata."""

    iterations: list = dc_field(default_factory=list)
    metadata: dict = dc_field(default_factory=dict)

    def append(self, iteration, acc, cons):
        if self.iterations and iteration != self.iterations[-1][0] + 1:
            raise ValueError("iterations must increase by 1")
        self.iterations.append((iteration, float(acc), float(cons)))

    @property
    def accuracy(self):
        return np.array([r[1] for r in self.iterations])

    @property
    def conservation(self):
        return np.array([r[2] for r in self.iterations])

    def to_csv(self, path_or_file):
        def write(f):
            f.write("iteration,accuracy_error,conservation_error\n")
            for it, acc, cons in self.iterations:
                f.write(f"{it},{acc!r},{cons!r}\n")

        if hasattr(path_or_file, "write"):
            write(path_or_file)
        else:
            with open(path_or_file, "w", encoding="utf-8") as f:
                write(f)


def _method_metadata(method):
    if isinstance(method, FitSpec):
        sel = method.selection
        return {
            "method": "pointwise",
            "degree": method.degree,
            "rbf": method.rbf.kind.value,
            "rbf_a": method.rbf.a,
            "selection": type(sel).__name__,
            "selection_params": {k: getattr(sel, k) for k in sel.__dataclass_fields__},
            "lambda": method.lam,
            "centering": method.centering,
        }
    return {
        "method": "conservative",
        "rel_tol": method.rel_tol,
        "quadrature_degree": method.quadrature_degree,
    }


class _PointwiseCycle:
    def __init__(self, mesh, fitspec, target_mesh, threads=1):
        self.threads = threads
        if target_mesh is None:
            # vertices -> centroids -> vertices on one mesh
            self.down = PreparedTransfer(
                mesh.coords, mesh.centroids(), fitspec, mesh=mesh,
                source_location="vertices")
            self.up = PreparedTransfer(
                mesh.centroids(), mesh.coords, fitspec, mesh=mesh,
                source_location="centroids")
        else:
            self.down = PreparedTransfer(
                mesh.coords, target_mesh.coords, fitspec, mesh=mesh,
                source_location="vertices")
            self.up = PreparedTransfer(
                target_mesh.coords, mesh.coords, fitspec, mesh=target_mesh,
                source_location="vertices")

    def cycle(self, values):
        mid = self.down.apply(values, threads=self.threads)
        return self.up.apply(mid, threads=self.threads)


class _ConservativeCycle:
    def __init__(self, mesh, spec, target_mesh):
        self.mesh = mesh
        self.spec = spec
        self.other = target_mesh if target_mesh is not None else mesh
        self.sm_down = build_supermesh(mesh, self.other)
        self.mass_down = assemble_mass(self.other)
        if self.other is mesh:
            self.sm_up = self.sm_down
            self.mass_up = self.mass_down
        else:
            self.sm_up = build_supermesh(self.other, mesh)
            self.mass_up = assemble_mass(mesh)

    def cycle(self, values):
        f = Field(self.mesh, "vertices", 1, values)
        mid = transfer_conservative(
            f, self.other, rel_tol=self.spec.rel_tol,
            quadrature_degree=self.spec.quadrature_degree,
            supermesh=self.sm_down, mass=self.mass_down)
        if self.other is self.mesh:
            return mid.values
        back = transfer_conservative(
            mid, self.mesh, rel_tol=self.spec.rel_tol,
            quadrature_degree=self.spec.quadrature_degree,
            supermesh=self.sm_up, mass=self.mass_up)
        return back.values


def run_iteration_experiment(mesh, initial, method, n_iters, target_mesh=None,
                             ground_truth="discrete", quad_degree=4, threads=1):
    """Iterate complete mapping cycles and record both errors per cycle.

    ``initial`` is a vertex Field or a callable f(x, y) sampled at the
    vertices. Ground truth defaults to the discrete pre-mapping field; pass
    a callable to measure against an analytic function instead.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    if callable(initial):
        f0 = sample_field(mesh, initial, "vertices", 1)
    else:
        f0 = initial
        if f0.mesh is not mesh or f0.location != "vertices" or f0.degree != 1:
            raise FieldError("initial field must be a degree-1 vertex field "
                             "on the experiment mesh")
    if callable(ground_truth):
        star = sample_field(mesh, ground_truth, "vertices", 1)
        gt_label = "analytic"
    elif ground_truth == "discrete":
        star = f0
        gt_label = "discrete"
    else:
        raise ValueError("ground_truth must be 'discrete' or a callable")

    if isinstance(method, FitSpec):
        engine = _PointwiseCycle(mesh, method, target_mesh, threads)
    elif isinstance(method, ConservativeSpec):
        engine = _ConservativeCycle(mesh, method, target_mesh)
    else:
        raise TypeError(f"unknown method configuration {method!r}")

    series = ErrorSeries(metadata={
        **_method_metadata(method),
        "field": f0.name or "initial",
        "ground_truth": gt_label,
        "n_iters": n_iters,
        "two_mesh": target_mesh is not None,
    })
    values = f0.values
    for k in range(1, n_iters + 1):
        try:
            values = engine.cycle(values)
        except FieldBridgeError as exc:
            raise type(exc)(f"iteration {k}: {exc}") from exc
        current = Field(mesh, "vertices", 1, values)
        acc = accuracy_error(current, star)
        cons = conservation_error(current, star, quad_degree=quad_degree)
        series.append(k, acc, cons)
    return series
