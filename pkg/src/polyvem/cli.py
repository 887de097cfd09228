"""Command-line interface.

    polyvem mesh gen --family {quad|tri|web|voronoi|disk-tri} --n N
                     [--distortion f] [--seed s] [--domain d] [--lloyd m] -o FILE
    polyvem run --case NAME [--levels a,b,c] [--seed s] [--mode plain|skew]
                [--nu x] [--config FILE] -o DIR
    polyvem list
    polyvem verify --case NAME
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import benchmarks
from .mesh import write_mesh
from .runner import config_from_sources, parse_config_file, run_case


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyvem",
                                description="divergence-free VEM benchmarks for steady Navier-Stokes")
    sub = p.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="mesh utilities")
    mesh_sub = mesh.add_subparsers(dest="mesh_command", required=True)
    gen = mesh_sub.add_parser("gen", help="generate a mesh file")
    gen.add_argument("--family", required=True,
                     choices=["quad", "tri", "web", "voronoi", "disk-tri"])
    gen.add_argument("--n", type=int, required=True,
                     help="subdivision parameter, h ~ 1/n")
    gen.add_argument("--distortion", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--domain", choices=["square", "disk"], default="square",
                     help="domain for the voronoi family")
    gen.add_argument("--lloyd", type=int, default=100,
                     help="Lloyd sweeps for the voronoi family")
    gen.add_argument("-o", "--output", required=True)

    run = sub.add_parser("run", help="run a registered benchmark case")
    run.add_argument("--case", required=True)
    run.add_argument("--levels", help="comma-separated subdivision levels")
    run.add_argument("--seed", type=int)
    run.add_argument("--mode", choices=["plain", "skew"])
    run.add_argument("--nu", type=float)
    run.add_argument("--config", help="flat key = value config file")
    run.add_argument("-o", "--output", required=True)

    sub.add_parser("list", help="list registered benchmark cases")

    ver = sub.add_parser("verify", help="check a case's load against its PDE")
    ver.add_argument("--case", required=True)
    return p


def _cmd_mesh_gen(args) -> int:
    mesh = benchmarks.build_mesh(args.family, args.n, args.distortion,
                                 args.seed, domain=args.domain, lloyd=args.lloyd)
    write_mesh(mesh, args.output)
    print(f"wrote {args.output}: {mesh.n_vertices} vertices, {mesh.n_cells} cells "
          f"(h = {mesh.mesh_size():.5f})")
    return 0


def _cmd_run(args) -> int:
    try:
        benchmarks.get_case(args.case)
    except KeyError:
        print(f"unknown case {args.case!r}; registered cases:", file=sys.stderr)
        for name in benchmarks.list_cases():
            print(f"  {name}", file=sys.stderr)
        return 2
    file_cfg = parse_config_file(args.config) if args.config else None
    cfg = config_from_sources(args.case, args.output, file_cfg,
                              levels=args.levels, seed=args.seed,
                              mode=args.mode, nu=args.nu)
    results = run_case(cfg)
    for label, fam in results.items():
        last = fam.levels[-1].errors
        print(f"{args.case} [{label}]: final H1(u)={last.err_u_h1:.4e} "
              f"L2(u)={last.err_u_l2:.4e} L2(p)={last.err_p_l2:.4e} "
              f"div_inf={last.div_inf:.2e}")
    print(f"artifacts in {cfg.outdir}")
    return 0


def _cmd_list() -> int:
    for name in benchmarks.list_cases():
        case = benchmarks.get_case(name)
        kind = "Stokes" if case.stokes else "Navier-Stokes"
        fams = ",".join(spec.label for spec in case.meshes)
        print(f"{name:10s} {kind:13s} nu={case.nu:<8g} meshes={fams:6s} {case.description}")
    return 0


def _cmd_verify(args) -> int:
    try:
        res = benchmarks.verify_case(args.case)
    except KeyError as exc:
        print(exc, file=sys.stderr)
        return 2
    print(f"{args.case}: max PDE residual at random points = {res:.3e}")
    return 0 if res <= 1e-8 else 1


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)
    if args.command == "mesh":
        return _cmd_mesh_gen(args)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "list":
        return _cmd_list()
    if args.command == "verify":
        return _cmd_verify(args)
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
