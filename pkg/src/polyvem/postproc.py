"""Computable error norms, convergence rates, inf-sup estimation and export.

The velocity errors are the projected quantities actually available to the
method: the H1 error through the L2 projection of the gradient, the L2 error
through the L2 projection of the function, and the max error sampled at the
internal nodal dofs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .assembly import DofMap, Workspace, divergence_coeffs
from .element import ElementOperators
from .mesh.core import PolyMesh


@dataclass(frozen=True)
class ErrorReport:
    err_u_h1: float
    err_u_l2: float
    err_u_linf: float
    err_p_l2: float
    div_inf: float
    h: float
    n_dof: int

    def row(self):
        return [self.h, self.n_dof, self.err_u_h1, self.err_u_l2,
                self.err_u_linf, self.err_p_l2, self.div_inf]


CSV_COLUMNS = ["h", "ndof", "err_u_h1", "err_u_l2", "err_u_linf",
               "err_p_l2", "div_inf"]


def compute_errors(mesh: PolyMesh, ops: list[ElementOperators], dofmap: DofMap,
                   u_full: np.ndarray, p: np.ndarray,
                   exact_u, exact_grad_u, exact_p) -> ErrorReport:
    """Broken norms of the projected discrete fields against exact callables.

    The exact pressure is shifted to zero mean over the computational domain
    so both fields live in the same quotient space.
    """
    nk = ops[0].ctx.basis.n
    area = 0.0
    p_mean = 0.0
    for op in ops:
        pts, w = op.ctx.rule_high.points, op.ctx.rule_high.weights
        p_mean += float(w @ np.asarray(exact_p(pts), dtype=float))
        area += float(w.sum())
    p_mean /= area

    e_h1 = e_l2 = e_p = 0.0
    div_inf = 0.0
    for ci, op in enumerate(ops):
        ctx = op.ctx
        pts, w = ctx.rule_high.points, ctx.rule_high.weights
        ul = u_full[dofmap.cell_dofs[ci]]
        pl = p[dofmap.cell_pressure[ci]]
        mk = ctx.basis.eval(pts)
        mkm1 = ctx.basis_km1.eval(pts)

        c0 = op.pi0 @ ul
        uh = np.column_stack([mk @ c0[:nk], mk @ c0[nk:]])
        du = np.asarray(exact_u(pts), dtype=float) - uh
        e_l2 += float(w @ (du ** 2).sum(axis=1))

        g_ex = np.asarray(exact_grad_u(pts), dtype=float)
        for r in (0, 1):
            for c in (0, 1):
                gh = mkm1 @ (op.pi0_grad[r, c] @ ul)
                e_h1 += float(w @ (g_ex[:, r, c] - gh) ** 2)

        ph = mkm1 @ pl
        dp = np.asarray(exact_p(pts), dtype=float) - p_mean - ph
        e_p += float(w @ dp ** 2)

        dcoef = ctx.divmat @ ul
        samples = np.vstack([pts, ctx.verts])
        div_inf = max(div_inf, float(np.abs(
            ctx.basis_km1.eval(samples) @ dcoef).max()))

    # max nodal error at internal vertices and internal edge nodes
    nodal = dofmap.node_coords
    interior = ~dofmap.dirichlet[: 2 * len(nodal): 2]
    e_linf = 0.0
    if interior.any():
        pts = nodal[interior]
        ue = np.asarray(exact_u(pts), dtype=float)
        ux = u_full[0: 2 * len(nodal): 2][interior]
        uy = u_full[1: 2 * len(nodal): 2][interior]
        e_linf = float(np.sqrt((ue[:, 0] - ux) ** 2 + (ue[:, 1] - uy) ** 2).max())

    n_dof = int(dofmap.active.sum()) + dofmap.n_pressure
    return ErrorReport(np.sqrt(e_h1), np.sqrt(e_l2), e_linf, np.sqrt(e_p),
                       div_inf, mesh.mesh_size(), n_dof)


def divergence_inf_norm(mesh: PolyMesh, ops, dofmap, u_full) -> float:
    """Max over cells of the sampled sup-norm of the exact divergence polynomial."""
    out = 0.0
    for ci, dcoef in enumerate(divergence_coeffs(mesh, ops, dofmap, u_full)):
        ctx = ops[ci].ctx
        samples = np.vstack([ctx.rule.points, ctx.verts])
        out = max(out, float(np.abs(ctx.basis_km1.eval(samples) @ dcoef).max()))
    return out


# ---------------------------------------------------------------------------
# convergence rates
# ---------------------------------------------------------------------------

def eoc(hs, errors) -> list[float]:
    """Successive empirical orders log(e_i/e_{i+1}) / log(h_i/h_{i+1})."""
    hs = list(hs)
    errors = list(errors)
    if any(h2 >= h1 for h1, h2 in zip(hs, hs[1:])):
        raise ValueError("mesh sizes must be strictly decreasing")
    out = []
    for (h1, h2), (e1, e2) in zip(zip(hs, hs[1:]), zip(errors, errors[1:])):
        out.append(float(np.log(e1 / e2) / np.log(h1 / h2)))
    return out


def overall_rate(hs, errors) -> float:
    """Single log-log fit over the whole refinement sequence (first vs last)."""
    return float(np.log(errors[0] / errors[-1]) / np.log(hs[0] / hs[-1]))


@dataclass
class EocTable:
    hs: list
    errors: dict  # norm name -> list of values

    def rates(self, norm: str) -> list[float]:
        return eoc(self.hs, self.errors[norm])

    def last_rate(self, norm: str, span: int = 2) -> float:
        """Rate fitted over the last `span` refinements (span+1 levels)."""
        n = min(span + 1, len(self.hs))
        return overall_rate(self.hs[-n:], self.errors[norm][-n:])


def eoc_table(reports: list[ErrorReport]) -> EocTable:
    return EocTable(
        hs=[r.h for r in reports],
        errors={
            "u_h1": [r.err_u_h1 for r in reports],
            "u_l2": [r.err_u_l2 for r in reports],
            "u_linf": [r.err_u_linf for r in reports],
            "p_l2": [r.err_p_l2 for r in reports],
        },
    )


# ---------------------------------------------------------------------------
# inf-sup
# ---------------------------------------------------------------------------

def infsup_estimate(mesh: PolyMesh, k: int = 2, workspace: Workspace | None = None) -> float:
    """Discrete inf-sup constant: smallest generalized singular value of B.

    beta^2 = min eig of (B_a A_aa^{-1} B_a^T, M_p) on the zero-mean pressure
    subspace, with A the stabilized velocity seminorm matrix on active dofs.
    """
    ws = workspace or Workspace(mesh, k)
    a = ws.dofmap.active
    A = ws.A[a][:, a].tocsc()
    Ba = ws.B[:, a].tocsr()
    lu = spla.splu(A)
    X = lu.solve(Ba.T.toarray())
    S = Ba @ X
    S = 0.5 * (S + S.T)
    Mp = ws.pressure_mass.toarray()
    Z = sla.null_space(ws.m[None, :])
    lam = sla.eigh(Z.T @ S @ Z, Z.T @ Mp @ Z, eigvals_only=True,
                   subset_by_index=[0, 0])[0]
    return float(np.sqrt(max(lam, 0.0)))


# ---------------------------------------------------------------------------
# field export
# ---------------------------------------------------------------------------

def _sample_fields(ops, dofmap, u_full, p):
    """Per-cell samples of (Pi0_k u_h, p_h) at the cell vertices and centroid."""
    nk = ops[0].ctx.basis.n
    out = []
    for ci, op in enumerate(ops):
        ctx = op.ctx
        pts = np.vstack([ctx.verts, ctx.geo.centroid[None, :]])
        c0 = op.pi0 @ u_full[dofmap.cell_dofs[ci]]
        mk = ctx.basis.eval(pts)
        uh = np.column_stack([mk @ c0[:nk], mk @ c0[nk:]])
        ph = ctx.basis_km1.eval(pts) @ p[dofmap.cell_pressure[ci]]
        out.append((pts, uh, ph))
    return out


def export_fields(mesh: PolyMesh, ops, dofmap, u_full, p, path, format: str = "vtk"):
    """Write the projected solution; legacy-VTK polygons or a flat CSV."""
    samples = _sample_fields(ops, dofmap, u_full, p)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            wtr = csv.writer(fh)
            wtr.writerow(["cell", "kind", "x", "y", "ux", "uy", "p"])
            for ci, (pts, uh, ph) in enumerate(samples):
                for j in range(len(pts)):
                    kind = "vertex" if j < len(pts) - 1 else "centroid"
                    wtr.writerow([ci, kind, repr(pts[j, 0]), repr(pts[j, 1]),
                                  repr(uh[j, 0]), repr(uh[j, 1]), repr(ph[j])])
        return
    if format != "vtk":
        raise ValueError("format must be 'vtk' or 'csv'")
    # duplicated corner points per cell keep the broken fields discontinuous
    with open(path, "w") as fh:
        npts = sum(len(pts) - 1 for pts, _, _ in samples)
        fh.write("# vtk DataFile Version 3.0\npolyvem fields\nASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {npts} double\n")
        for pts, _, _ in samples:
            for x, y in pts[:-1]:
                fh.write(f"{x} {y} 0.0\n")
        ncell = len(samples)
        size = sum(len(pts) - 1 + 1 for pts, _, _ in samples)
        fh.write(f"CELLS {ncell} {size}\n")
        off = 0
        for pts, _, _ in samples:
            n = len(pts) - 1
            fh.write(" ".join([str(n)] + [str(off + j) for j in range(n)]) + "\n")
            off += n
        fh.write(f"CELL_TYPES {ncell}\n")
        fh.write("\n".join(["7"] * ncell) + "\n")
        fh.write(f"POINT_DATA {npts}\n")
        fh.write("VECTORS velocity double\n")
        for _, uh, _ in samples:
            for ux, uy in uh[:-1]:
                fh.write(f"{ux} {uy} 0.0\n")
        fh.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        for _, _, ph in samples:
            for v in ph[:-1]:
                fh.write(f"{v}\n")
        fh.write(f"CELL_DATA {ncell}\n")
        fh.write("VECTORS velocity_centroid double\n")
        for _, uh, _ in samples:
            fh.write(f"{uh[-1, 0]} {uh[-1, 1]} 0.0\n")
        fh.write("SCALARS pressure_centroid double 1\nLOOKUP_TABLE default\n")
        for _, _, ph in samples:
            fh.write(f"{ph[-1]}\n")
