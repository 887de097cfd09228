"""Benchmark orchestration: mesh sweeps, solves and emitted artifacts.

Every run writes into its output directory: the effective configuration echo,
the mesh seeds, one results CSV (with rate columns) and one gnuplot data file
per mesh family, a human-readable rate summary and a plot script.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import Workspace
from .benchmarks import BenchmarkCase, case_with_nu, get_case
from .element import QuadDegrees
from .postproc import CSV_COLUMNS, EocTable, ErrorReport, compute_errors, eoc_table
from .solver import NonlinearOptions, SolveReport, solve_navier_stokes, solve_stokes

log = logging.getLogger(__name__)

_SOLVER_KEYS = {
    "picard_max": int, "newton_max": int, "tol_rel": float, "tol_abs": float,
    "damping": float, "continuation": lambda s: str(s).lower() in ("1", "true", "yes"),
}
_QUAD_KEYS = {"quad_bilinear": int, "quad_trilinear": int, "quad_load": int,
              "quad_boundary": int}
_TOP_KEYS = {"case": str, "levels": str, "seed": int, "mode": str, "nu": float,
             "order": int}


@dataclass
class RunConfig:
    case: str
    outdir: Path
    levels: tuple | None = None
    seed: int | None = None
    mode: str | None = None
    nu: float | None = None
    order: int = 2
    solver: dict = field(default_factory=dict)
    quad: dict = field(default_factory=dict)


def parse_config_file(path) -> dict:
    """Flat `key = value` format; '#' comments; unknown keys rejected."""
    known = {**_TOP_KEYS, **_SOLVER_KEYS, **_QUAD_KEYS}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = known[key](value)
    return out


def config_from_sources(case: str, outdir, file_cfg: dict | None = None,
                        **overrides) -> RunConfig:
    """Merge precedence: case defaults < config file < explicit overrides."""
    merged = dict(file_cfg or {})
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val
    cfg = RunConfig(case=case, outdir=Path(outdir))
    if "levels" in merged:
        lv = merged.pop("levels")
        cfg.levels = tuple(int(x) for x in str(lv).split(",")) if isinstance(lv, str) else tuple(lv)
    for key in ("seed", "mode", "nu", "order"):
        if key in merged:
            setattr(cfg, key, merged.pop(key))
    for key in list(merged):
        if key in _SOLVER_KEYS:
            cfg.solver[key] = merged.pop(key)
        elif key in _QUAD_KEYS:
            cfg.quad[key.removeprefix("quad_")] = merged.pop(key)
    merged.pop("case", None)
    if merged:
        raise ValueError(f"unknown config keys: {sorted(merged)}")
    return cfg


@dataclass
class LevelResult:
    n: int
    errors: ErrorReport
    solve: SolveReport
    seed: int
    nu: float


@dataclass
class FamilyResult:
    label: str
    levels: list[LevelResult]

    def reports(self) -> list[ErrorReport]:
        return [lv.errors for lv in self.levels]

    def table(self) -> EocTable:
        return eoc_table(self.reports())


def _solve_level(case: BenchmarkCase, mesh, opts: NonlinearOptions, order: int,
                 quad: QuadDegrees | None):
    ws = Workspace(mesh, order, quad=quad)
    if case.stokes:
        u, p, rep = solve_stokes(mesh, case.nu, case.velocity, case.load,
                                 order, workspace=ws)
    else:
        u, p, rep = solve_navier_stokes(mesh, case.nu, case.velocity, case.load,
                                        opts, order, workspace=ws)
    err = compute_errors(mesh, ws.ops, ws.dofmap, u, p,
                         case.velocity, case.grad, case.pressure)
    return err, rep


def run_case(cfg: RunConfig) -> dict[str, FamilyResult]:
    """Solve every (family, level) of a registered case and emit artifacts."""
    base = get_case(cfg.case)
    mode = cfg.mode or base.mode
    opts = NonlinearOptions(mode=mode, **cfg.solver)
    quad = QuadDegrees.for_order(cfg.order, **cfg.quad) if cfg.quad else None
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    sweep = base.nu_sweep if (base.nu_sweep and cfg.nu is None) else ()
    case = case_with_nu(base, cfg.nu) if cfg.nu is not None else base

    results: dict[str, FamilyResult] = {}
    seeds_log = []
    for spec in case.meshes:
        levels = cfg.levels or spec.levels
        seed = cfg.seed if cfg.seed is not None else spec.seed
        fam = FamilyResult(spec.label, [])
        for n in levels:
            mesh = _mesh_with_seed(case, spec, n, seed)
            if sweep:
                for nu in sweep:
                    cnu = case_with_nu(case, nu)
                    err, rep = _solve_level(cnu, mesh, opts, cfg.order, quad)
                    fam.levels.append(LevelResult(n, err, rep, seed, nu))
                    _log_level(cfg.case, spec.label, n, nu, err, rep)
            else:
                err, rep = _solve_level(case, mesh, opts, cfg.order, quad)
                fam.levels.append(LevelResult(n, err, rep, seed, case.nu))
                _log_level(cfg.case, spec.label, n, case.nu, err, rep)
            seeds_log.append(f"{spec.label} n={n} family={spec.family} "
                             f"seed={seed} distortion={spec.distortion}")
        results[spec.label] = fam
        if sweep:
            _write_sweep_csv(outdir / f"results_{spec.label}_nu_sweep.csv", fam)
        else:
            _write_results_csv(outdir / f"results_{spec.label}.csv", fam)
            _write_gnuplot_data(outdir / f"errors_{spec.label}.dat", fam)

    _write_config_echo(outdir / "config.txt", cfg, case, mode, opts)
    (outdir / "seeds.txt").write_text("\n".join(seeds_log) + "\n")
    if not sweep:
        _write_rates(outdir / "rates.txt", results)
        _write_plot_script(outdir / "plot.gp", list(results))
    return results


def _mesh_with_seed(case, spec, n, seed):
    from .benchmarks import build_mesh
    return build_mesh(spec.family, n, spec.distortion, seed, domain=case.domain)


def _log_level(name, label, n, nu, err: ErrorReport, rep: SolveReport):
    status = "" if rep.converged else "  [NOT CONVERGED]"
    log.info("%s %s n=%d nu=%g: H1=%.3e L2=%.3e p=%.3e div=%.1e (%.1fs)%s",
             name, label, n, nu, err.err_u_h1, err.err_u_l2, err.err_p_l2,
             err.div_inf, rep.wall_time, status)


def _rates_by_column(reports: list[ErrorReport]):
    cols = {"err_u_h1": [], "err_u_l2": [], "err_u_linf": [], "err_p_l2": []}
    hs = [r.h for r in reports]
    rates = {}
    for name in cols:
        vals = [getattr(r, name) for r in reports]
        out = [float("nan")]
        for i in range(1, len(vals)):
            with np.errstate(divide="ignore", invalid="ignore"):
                out.append(float(np.log(vals[i - 1] / vals[i]) / np.log(hs[i - 1] / hs[i])))
        rates[name] = out
    return rates


def _write_results_csv(path, fam: FamilyResult):
    reports = fam.reports()
    rates = _rates_by_column(reports)
    with open(path, "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(CSV_COLUMNS + ["rate_u_h1", "rate_u_l2", "rate_u_linf", "rate_p_l2"])
        for i, rep in enumerate(reports):
            row = [repr(v) for v in rep.row()]
            row += ["" if np.isnan(rates[c][i]) else f"{rates[c][i]:.4f}"
                    for c in ("err_u_h1", "err_u_l2", "err_u_linf", "err_p_l2")]
            wtr.writerow(row)


def _write_sweep_csv(path, fam: FamilyResult):
    with open(path, "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(["nu", "converged"] + CSV_COLUMNS)
        for lv in fam.levels:
            wtr.writerow([repr(lv.nu), lv.solve.converged] + [repr(v) for v in lv.errors.row()])


def _write_gnuplot_data(path, fam: FamilyResult):
    with open(path, "w") as fh:
        fh.write("# h ndof err_u_h1 err_u_l2 err_u_linf err_p_l2 div_inf\n")
        for rep in fam.reports():
            fh.write(" ".join(repr(v) for v in rep.row()) + "\n")


def _write_plot_script(path, labels):
    lines = [
        "set logscale xy",
        "set xlabel 'h'",
        "set ylabel 'error'",
        "set key outside",
    ]
    plots = []
    for lab in labels:
        plots.append(f"'errors_{lab}.dat' using 1:3 with linespoints title '{lab} H1(u)'")
        plots.append(f"'errors_{lab}.dat' using 1:6 with linespoints title '{lab} L2(p)'")
    lines.append("plot " + ", \\\n     ".join(plots))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_rates(path, results: dict[str, FamilyResult]):
    lines = []
    for label, fam in results.items():
        reports = fam.reports()
        rates = _rates_by_column(reports)
        lines.append(f"family {label}")
        lines.append(f"  {'h':>12} {'H1(u)':>12} {'rate':>6} {'L2(u)':>12} {'rate':>6} "
                     f"{'L2(p)':>12} {'rate':>6}")
        for i, rep in enumerate(reports):
            def fmt(c):
                r = rates[c][i]
                return "  -  " if np.isnan(r) else f"{r:6.3f}"
            lines.append(f"  {rep.h:12.5e} {rep.err_u_h1:12.5e} {fmt('err_u_h1')} "
                         f"{rep.err_u_l2:12.5e} {fmt('err_u_l2')} "
                         f"{rep.err_p_l2:12.5e} {fmt('err_p_l2')}")
    Path(path).write_text("\n".join(lines) + "\n")


def _write_config_echo(path, cfg: RunConfig, case: BenchmarkCase, mode: str,
                       opts: NonlinearOptions):
    lines = [
        f"case = {cfg.case}",
        f"order = {cfg.order}",
        f"mode = {mode}",
        f"nu = {case.nu!r}",
        f"levels = {','.join(str(n) for n in cfg.levels) if cfg.levels else 'default'}",
        f"seed = {cfg.seed if cfg.seed is not None else 'default'}",
        f"picard_max = {opts.picard_max}",
        f"newton_max = {opts.newton_max}",
        f"tol_rel = {opts.tol_rel!r}",
        f"tol_abs = {opts.tol_abs!r}",
        f"damping = {opts.damping!r}",
        f"continuation = {opts.continuation}",
    ]
    for key, val in sorted(cfg.quad.items()):
        lines.append(f"quad_{key} = {val}")
    Path(path).write_text("\n".join(lines) + "\n")
