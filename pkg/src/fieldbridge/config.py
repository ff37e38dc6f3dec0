"""Experiment configuration: flat INI sections parsed into typed specs.

Sections and keys are documented in the README. Radius-like quantities
(radius_scale, r0_scale, radius_sweep) are multiples of the source mesh's
mean edge length and are resolved against the mesh at run time.
"""

import configparser
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigError
from .metrics import ConservativeSpec
from .pointwise import (
    AdaptiveRadius,
    ElementPatch,
    FitSpec,
    FixedRadius,
    RadialBasisSpec,
    RbfKind,
)

__all__ = ["ExperimentConfig", "PointwiseMethod", "load_config",
           "analytic_field", "ANALYTIC_FIELDS"]


def _sincos2(x, y):
    return np.sin(x) * np.cos(y) + 2.0

ANALYTIC_FIELDS = {"sincos2": _sincos2}


def analytic_field(name):
    """Resolve an analytic field spec: sincos2, constant(c), linear(a,b,c)."""
    name = name.strip()
    if name in ANALYTIC_FIELDS:
        return ANALYTIC_FIELDS[name]
    if name.startswith("constant(") and name.endswith(")"):
        try:
            c = float(name[len("constant("):-1])
        except ValueError:
            raise ConfigError(f"bad constant field spec {name!r}") from None
        return lambda x, y: np.full_like(np.asarray(x, dtype=float), c)
    if name.startswith("linear(") and name.endswith(")"):
        parts = name[len("linear("):-1].split(",")
        if len(parts) != 3:
            raise ConfigError(f"linear field needs 3 coefficients, got {name!r}")
        try:
            a, b, c = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"bad linear field spec {name!r}") from None
        return lambda x, y: a * np.asarray(x, dtype=float) + b * np.asarray(y, dtype=float) + c
    raise ConfigError(f"unknown analytic field {name!r}")


_RBF_NAMES = {k.value: k for k in RbfKind}


@dataclass
class PointwiseMethod:
    """Pointwise method whose radii are mean-edge-length multiples."""

    degree: int
    rbf_kind: RbfKind
    rbf_a: float
    selection: str  # fixed_radius | adaptive_radius | element_patch
    radius_scale: float
    min_points: int
    r0_scale: float
    growth: float
    layers: int
    lam: float
    centering: bool

    def resolve(self, mean_edge, radius_scale=None):
        """Materialize a FitSpec against a concrete mesh scale."""
        scale = self.radius_scale if radius_scale is None else radius_scale
        if self.selection == "fixed_radius":
            sel = FixedRadius(scale * mean_edge)
        elif self.selection == "adaptive_radius":
            r0 = (self.r0_scale if radius_scale is None else radius_scale) * mean_edge
            sel = AdaptiveRadius(self.min_points, r0, self.growth)
        elif self.selection == "element_patch":
            sel = ElementPatch(self.layers)
        else:
            raise ConfigError(f"unknown selection {self.selection!r}")
        rbf = RadialBasisSpec(self.rbf_kind, self.rbf_a,
                              scale * mean_edge if self.selection != "element_patch" else None)
        return FitSpec(self.degree, rbf, sel, lam=self.lam,
                       centering=self.centering)


@dataclass
class ExperimentConfig:
    mesh_source: str
    mesh_target: str | None
    field_analytic: str | None
    field_path: str | None
    ground_truth: str
    method_kind: str  # pointwise | conservative
    pointwise: PointwiseMethod | None
    conservative: ConservativeSpec | None
    iterations: int
    radius_sweep: list
    quad_degree: int
    output: str
    seed: int
    # rendezvous / scale sweep section
    rdv_grid: tuple = (8, 8)
    rdv_ranks: int = 4
    app_a_ranks: int = 4
    rounds: int = 10
    rank_list: list = dc_field(default_factory=lambda: [1])


def _get(cp, section, key, default=None):
    if cp.has_option(section, key):
        v = cp.get(section, key).strip()
        if v:
            return v
    return default


def _get_float(cp, section, key, default):
    v = _get(cp, section, key)
    if v is None:
        return default
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be a number, got {v!r}") from None


def _get_int(cp, section, key, default):
    v = _get(cp, section, key)
    if v is None:
        return default
    try:
        return int(v)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be an integer, got {v!r}") from None


def _get_bool(cp, section, key, default):
    v = _get(cp, section, key)
    if v is None:
        return default
    if v.lower() in ("true", "yes", "1", "on"):
        return True
    if v.lower() in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"[{section}] {key} must be a boolean, got {v!r}")


def _get_list(cp, section, key, conv, default):
    v = _get(cp, section, key)
    if v is None:
        return default
    try:
        return [conv(p.strip()) for p in v.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"[{section}] {key}: bad list {v!r}") from None


def load_config(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as f:
            cp.read_file(f, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    mesh_source = _get(cp, "mesh", "source")
    if mesh_source is None:
        raise ConfigError("[mesh] source is required")
    mesh_target = _get(cp, "mesh", "target")

    field_analytic = _get(cp, "field", "analytic")
    field_path = _get(cp, "field", "path")
    if field_analytic is None and field_path is None:
        raise ConfigError("[field] needs either analytic = ... or path = ...")
    if field_analytic is not None:
        analytic_field(field_analytic)  # validate early
    ground_truth = _get(cp, "field", "ground_truth", "discrete")
    if ground_truth not in ("discrete", "analytic"):
        raise ConfigError(f"[field] ground_truth must be discrete or analytic, "
                          f"got {ground_truth!r}")
    if ground_truth == "analytic" and field_analytic is None:
        raise ConfigError("[field] ground_truth=analytic needs an analytic field")

    kind = _get(cp, "method", "kind", "pointwise")
    pointwise = None
    conservative = None
    if kind == "pointwise":
        rbf_name = _get(cp, "method", "rbf", "c4")
        if rbf_name not in _RBF_NAMES:
            raise ConfigError(f"unknown rbf {rbf_name!r} "
                              f"(known: {', '.join(sorted(_RBF_NAMES))})")
        pointwise = PointwiseMethod(
            degree=_get_int(cp, "method", "degree", 1),
            rbf_kind=_RBF_NAMES[rbf_name],
            rbf_a=_get_float(cp, "method", "rbf_a", 2.0),
            selection=_get(cp, "method", "selection", "fixed_radius"),
            radius_scale=_get_float(cp, "method", "radius_scale", 2.0),
            min_points=_get_int(cp, "method", "min_points", 12),
            r0_scale=_get_float(cp, "method", "r0_scale", 1.0),
            growth=_get_float(cp, "method", "growth", 1.5),
            layers=_get_int(cp, "method", "layers", 1),
            lam=_get_float(cp, "method", "lambda", 0.0),
            centering=_get_bool(cp, "method", "centering", True),
        )
        if pointwise.selection not in ("fixed_radius", "adaptive_radius",
                                       "element_patch"):
            raise ConfigError(f"unknown selection {pointwise.selection!r}")
    elif kind == "conservative":
        qd = _get(cp, "method", "quadrature_degree")
        conservative = ConservativeSpec(
            rel_tol=_get_float(cp, "method", "rel_tol", 1e-12),
            quadrature_degree=int(qd) if qd else None,
        )
    else:
        raise ConfigError(f"[method] kind must be pointwise or conservative, "
                          f"got {kind!r}")

    grid_txt = _get(cp, "rendezvous", "grid", "8x8")
    try:
        gx, gy = (int(p) for p in grid_txt.lower().split("x"))
    except ValueError:
        raise ConfigError(f"[rendezvous] grid must look like 8x8, got "
                          f"{grid_txt!r}") from None

    return ExperimentConfig(
        mesh_source=mesh_source,
        mesh_target=mesh_target,
        field_analytic=field_analytic,
        field_path=field_path,
        ground_truth=ground_truth,
        method_kind=kind,
        pointwise=pointwise,
        conservative=conservative,
        iterations=_get_int(cp, "experiment", "iterations", 20),
        radius_sweep=_get_list(cp, "experiment", "radius_sweep", float, []),
        quad_degree=_get_int(cp, "experiment", "quad_degree", 4),
        output=_get(cp, "output", "directory", "out"),
        seed=_get_int(cp, "experiment", "seed", 0),
        rdv_grid=(gx, gy),
        rdv_ranks=_get_int(cp, "rendezvous", "rdv_ranks", 4),
        app_a_ranks=_get_int(cp, "rendezvous", "app_a_ranks", 4),
        rounds=_get_int(cp, "rendezvous", "rounds", 10),
        rank_list=_get_list(cp, "rendezvous", "ranks", int, [1]),
    )
