"""Config-driven experiment runner.

Subcommands::

    fieldbridge generate-mesh "disk(1.0, 8)" -o disk.mesh
    fieldbridge run experiment.ini [--threads N] [--seed S]
    fieldbridge scale-sweep sweep.ini --ranks 1,4,16 [--seed S]

Exit codes: 0 ok, 1 numerical failure, 2 usage or IO error. All CSV
outputs are bitwise reproducible from config + seed; wall-clock timings go
to separate .txt files because they are inherently run-dependent.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .config import analytic_field, load_config
from .errors import ConfigError, FieldBridgeError, MeshFileError
from .generate import generate_mesh
from .mesh import sample_field
from .meshio import load_field, load_mesh, save_mesh
from .metrics import run_iteration_experiment
from .rendezvous import build_rdv_partition, coupled_transfer, rcb_partition
from .conservative import transfer_conservative
from .pointwise import transfer_pointwise

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2


def _resolve_mesh(spec_or_path):
    if os.path.exists(spec_or_path):
        return load_mesh(spec_or_path)
    return generate_mesh(spec_or_path)


def _resolve_field(cfg, mesh):
    if cfg.field_path is not None:
        return load_field(cfg.field_path, mesh, name=os.path.basename(cfg.field_path))
    fn = analytic_field(cfg.field_analytic)
    return sample_field(mesh, fn, "vertices", 1, name=cfg.field_analytic)


def _write_manifest(path, cfg, extra):
    manifest = {
        "version": __version__,
        "kernel_backend": BACKEND,
        "config": {
            "mesh_source": cfg.mesh_source,
            "mesh_target": cfg.mesh_target,
            "field": cfg.field_analytic or cfg.field_path,
            "ground_truth": cfg.ground_truth,
            "method": cfg.method_kind,
            "iterations": cfg.iterations,
            "radius_sweep": cfg.radius_sweep,
            "quad_degree": cfg.quad_degree,
            "seed": cfg.seed,
        },
        **extra,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _param_tag(value):
    return f"{value:g}"


def cmd_generate_mesh(args):
    mesh = generate_mesh(args.spec)
    save_mesh(mesh, args.output)
    print(f"wrote {mesh.nverts} vertices, {mesh.nelems} triangles to {args.output}")
    return EXIT_OK


def cmd_run(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    np.random.seed(cfg.seed)
    os.makedirs(cfg.output, exist_ok=True)
    mesh = _resolve_mesh(cfg.mesh_source)
    target_mesh = _resolve_mesh(cfg.mesh_target) if cfg.mesh_target else None
    initial = _resolve_field(cfg, mesh)
    ground_truth = ("discrete" if cfg.ground_truth == "discrete"
                    else analytic_field(cfg.field_analytic))
    outputs = []
    if cfg.method_kind == "conservative":
        if cfg.radius_sweep:
            raise ConfigError("radius_sweep applies to pointwise methods only")
        series = run_iteration_experiment(
            mesh, initial, cfg.conservative, cfg.iterations,
            target_mesh=target_mesh, ground_truth=ground_truth,
            quad_degree=cfg.quad_degree, threads=args.threads)
        out = os.path.join(cfg.output, "conservative_default.csv")
        series.to_csv(out)
        outputs.append(out)
    else:
        sweep = cfg.radius_sweep or [cfg.pointwise.radius_scale]
        h = mesh.mean_edge_length
        for scale in sweep:
            fitspec = cfg.pointwise.resolve(h, radius_scale=scale)
            series = run_iteration_experiment(
                mesh, initial, fitspec, cfg.iterations,
                target_mesh=target_mesh, ground_truth=ground_truth,
                quad_degree=cfg.quad_degree, threads=args.threads)
            out = os.path.join(cfg.output, f"pointwise_r{_param_tag(scale)}.csv")
            series.to_csv(out)
            outputs.append(out)
    _write_manifest(os.path.join(cfg.output, "manifest.json"), cfg, {
        "outputs": [os.path.basename(o) for o in outputs],
        "mesh": {"nverts": mesh.nverts, "nelems": mesh.nelems,
                 "mean_edge_length": mesh.mean_edge_length},
        "threads": args.threads,
    })
    for o in outputs:
        print(f"wrote {o}")
    return EXIT_OK


def _serial_reference(cfg, field, target_mesh, fitspec):
    if cfg.method_kind == "conservative":
        return transfer_conservative(
            field, target_mesh, rel_tol=cfg.conservative.rel_tol,
            quadrature_degree=cfg.conservative.quadrature_degree).values
    return transfer_pointwise(field, target_mesh.coords, fitspec)


def cmd_scale_sweep(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.ranks:
        cfg.rank_list = [int(r) for r in args.ranks.split(",")]
    np.random.seed(cfg.seed)
    os.makedirs(cfg.output, exist_ok=True)
    mesh_a = _resolve_mesh(cfg.mesh_source)
    mesh_b = _resolve_mesh(cfg.mesh_target or cfg.mesh_source)
    field = _resolve_field(cfg, mesh_a)
    fitspec = (cfg.pointwise.resolve(mesh_a.mean_edge_length)
               if cfg.method_kind == "pointwise" else None)
    method = fitspec if cfg.method_kind == "pointwise" else cfg.conservative
    reference = _serial_reference(cfg, field, mesh_b, fitspec)

    lo = np.minimum(mesh_a.bbox[0], mesh_b.bbox[0])
    hi = np.maximum(mesh_a.bbox[1], mesh_b.bbox[1])
    rdv = build_rdv_partition((lo, hi), cfg.rdv_grid[0], cfg.rdv_grid[1],
                              cfg.rdv_ranks)
    part_a = rcb_partition(mesh_a, cfg.app_a_ranks)
    outputs = []
    for nb in cfg.rank_list:
        part_b = rcb_partition(mesh_b, nb)
        msg_path = os.path.join(cfg.output, f"messages_{nb}.csv")
        time_path = os.path.join(cfg.output, f"timings_{nb}.txt")
        with open(msg_path, "w", encoding="utf-8") as mf, \
                open(time_path, "w", encoding="utf-8") as tf:
            mf.write("round,rank,role,msgs_sent,msgs_recv,bytes_sent,bytes_recv\n")
            tf.write("round wall_seconds\n")
            for rnd in range(1, cfg.rounds + 1):
                t0 = time.perf_counter()
                out, stats = coupled_transfer(field, part_a, mesh_b, part_b,
                                              rdv, method)
                wall = time.perf_counter() - t0
                err = float(np.max(np.abs(out.values - reference)))
                if err > 1e-12:
                    print(f"error: rank config {nb} deviates from the serial "
                          f"reference by {err:.3e} (> 1e-12)", file=sys.stderr)
                    return EXIT_NUMERICAL
                for role, rank, ms, mr, bs, br in stats.table():
                    mf.write(f"{rnd},{rank},{role},{ms},{mr},{bs},{br}\n")
                tf.write(f"{rnd} {wall:.6f}\n")
        outputs.append(msg_path)
        print(f"wrote {msg_path}")
    _write_manifest(os.path.join(cfg.output, "manifest.json"), cfg, {
        "outputs": [os.path.basename(o) for o in outputs],
        "rank_list": cfg.rank_list,
        "rounds": cfg.rounds,
        "rdv": {"grid": list(cfg.rdv_grid), "ranks": cfg.rdv_ranks},
    })
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="fieldbridge",
        description="Field transfer experiments between 2D triangle meshes")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-mesh", help="write a synthetic mesh file")
    g.add_argument("spec", help='generator spec, e.g. "disk(1.0, 8)"')
    g.add_argument("-o", "--output", required=True, help="output mesh path")
    g.set_defaults(fn=cmd_generate_mesh)

    r = sub.add_parser("run", help="run an iterated-mapping experiment")
    r.add_argument("config", help="experiment config (INI)")
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--seed", type=int, default=None)
    r.set_defaults(fn=cmd_run)

    s = sub.add_parser("scale-sweep",
                       help="rendezvous transfer over several rank counts")
    s.add_argument("config", help="experiment config (INI)")
    s.add_argument("--ranks", default=None, help="comma list, e.g. 1,4,16")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(fn=cmd_scale_sweep)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, MeshFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FieldBridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
