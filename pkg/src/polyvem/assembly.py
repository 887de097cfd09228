"""Global DoF numbering, Dirichlet elimination and saddle-point assembly.

The discrete system for unknowns (u, p, lam) is the bordered block form

    [ nu*A + C(w)   B^T   0 ] [u]   [F]
    [ B             0     m ] [p] = [0]
    [ 0             m^T   0 ] [lam] [0]

where B carries the exact pressure/divergence pairing, m is the vector of
pressure-basis integrals enforcing the zero-mean constraint through a single
Lagrange multiplier, and Dirichlet velocity dofs are eliminated by
substitution with a right-hand-side lift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .element import (
    ElementOperators,
    QuadDegrees,
    build_element,
    conv_matrix,
    conv_u_slot_derivative,
    conv_w_derivative,
    dof_layout,
    local_convection,
    local_load,
)
from .mesh.core import PolyMesh
from .polyquad import edge_node_params


@dataclass
class DofMap:
    """Global velocity/pressure numbering with the Dirichlet partition.

    Velocity dofs: vertex pairs, then edge-node pairs (edge nodes ordered from
    the lower- to the higher-numbered endpoint), then per-cell interior
    moments. Pressure dofs are per-cell polynomial coefficients.
    """

    k: int
    n_velocity: int
    n_pressure: int
    cell_dofs: list[np.ndarray]
    cell_pressure: list[np.ndarray]
    dirichlet: np.ndarray          # bool mask over velocity dofs
    node_coords: np.ndarray        # coordinates of nodal dofs (pairs share a node)

    @property
    def active(self) -> np.ndarray:
        return ~self.dirichlet


def number_dofs(mesh: PolyMesh, k: int) -> DofMap:
    lay = dof_layout(k, 3)
    nv, ne, nc = mesh.n_vertices, mesh.n_edges, mesh.n_cells
    per_edge = 2 * (k - 1)
    edge_off = 2 * nv
    cell_off = edge_off + ne * per_edge
    per_cell = lay.n_gperp + lay.n_div
    n_velocity = cell_off + nc * per_cell
    n_pressure = nc * lay.n_pressure

    tint = edge_node_params(k)[1:-1]
    node_coords = np.empty((nv + ne * (k - 1), 2))
    node_coords[:nv] = mesh.vertices
    for e in range(ne):
        a, b = mesh.edges[e]
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        for j, t in enumerate(tint):
            node_coords[nv + e * (k - 1) + j] = pa + t * (pb - pa)

    cell_dofs = []
    cell_pressure = []
    for ci, cell in enumerate(mesh.cells):
        n_e = len(cell)
        idx = np.empty(dof_layout(k, n_e).total, dtype=int)
        pos = 0
        for v in cell:
            idx[pos] = 2 * v
            idx[pos + 1] = 2 * v + 1
            pos += 2
        for j in range(n_e):
            e = mesh.cell_edges[ci][j]
            a = cell[j]
            forward = a == mesh.edges[e][0]
            order = range(k - 1) if forward else range(k - 2, -1, -1)
            for node in order:
                g = edge_off + e * per_edge + 2 * node
                idx[pos] = g
                idx[pos + 1] = g + 1
                pos += 2
        base = cell_off + ci * per_cell
        idx[pos: pos + per_cell] = base + np.arange(per_cell)
        cell_dofs.append(idx)
        cell_pressure.append(ci * lay.n_pressure + np.arange(lay.n_pressure))

    dirichlet = np.zeros(n_velocity, dtype=bool)
    for v in np.flatnonzero(mesh.boundary_vertex):
        dirichlet[2 * v: 2 * v + 2] = True
    for e in np.flatnonzero(mesh.boundary_edge):
        g = edge_off + e * per_edge
        dirichlet[g: g + per_edge] = True
    return DofMap(k, n_velocity, n_pressure, cell_dofs, cell_pressure,
                  dirichlet, node_coords)


def dirichlet_values(dofmap: DofMap, bc) -> np.ndarray:
    """Velocity dof vector carrying the boundary data (zero elsewhere)."""
    g = np.zeros(dofmap.n_velocity)
    if bc is None:
        return g
    n_nodes = len(dofmap.node_coords)
    vals = np.asarray(bc(dofmap.node_coords), dtype=float)
    nodal = np.empty(2 * n_nodes)
    nodal[0::2] = vals[:, 0]
    nodal[1::2] = vals[:, 1]
    nodal_mask = dofmap.dirichlet[: 2 * n_nodes]
    g[: 2 * n_nodes][nodal_mask] = nodal[nodal_mask]
    return g


def build_element_ops(mesh: PolyMesh, k: int, quad: QuadDegrees | None = None) -> list[ElementOperators]:
    return [build_element(mesh.cell_coords(i), k, quad) for i in range(mesh.n_cells)]


def _scatter(blocks, rows, cols, shape) -> sp.csr_matrix:
    data = np.concatenate([b.ravel() for b in blocks])
    ri = np.concatenate([np.repeat(r, len(c)) for r, c in zip(rows, cols)])
    ci = np.concatenate([np.tile(c, len(r)) for r, c in zip(rows, cols)])
    return sp.coo_matrix((data, (ri, ci)), shape=shape).tocsr()


class Workspace:
    """Mesh-level assembled pieces reused across nonlinear iterations."""

    def __init__(self, mesh: PolyMesh, k: int = 2,
                 ops: list[ElementOperators] | None = None,
                 dofmap: DofMap | None = None,
                 quad: QuadDegrees | None = None):
        self.mesh = mesh
        self.k = k
        self.ops = ops if ops is not None else build_element_ops(mesh, k, quad)
        self.dofmap = dofmap if dofmap is not None else number_dofs(mesh, k)
        dm = self.dofmap
        self.A = _scatter([op.stiffness for op in self.ops],
                          dm.cell_dofs, dm.cell_dofs,
                          (dm.n_velocity, dm.n_velocity))
        self.B = _scatter([op.divergence for op in self.ops],
                          dm.cell_pressure, dm.cell_dofs,
                          (dm.n_pressure, dm.n_velocity))
        self.m = np.zeros(dm.n_pressure)
        for ci, op in enumerate(self.ops):
            self.m[dm.cell_pressure[ci]] = op.ctx.Hkm1[0]
        self.pressure_mass = sp.block_diag([op.ctx.Hkm1 for op in self.ops],
                                           format="csr")

    def load_vector(self, f) -> np.ndarray:
        F = np.zeros(self.dofmap.n_velocity)
        if f is None:
            return F
        for ci, op in enumerate(self.ops):
            F[self.dofmap.cell_dofs[ci]] += local_load(op.ctx, op.pi0, f)
        return F

    def convection_matrix(self, w_full: np.ndarray, mode: str) -> sp.csr_matrix:
        dm = self.dofmap
        blocks = [local_convection(op.conv, w_full[dm.cell_dofs[ci]], mode)
                  for ci, op in enumerate(self.ops)]
        return _scatter(blocks, dm.cell_dofs, dm.cell_dofs,
                        (dm.n_velocity, dm.n_velocity))

    def convection_residual(self, u_full: np.ndarray, mode: str) -> np.ndarray:
        """Global vector of c_h(u; u, phi_i) (or its skew part), no Jacobian."""
        dm = self.dofmap
        r = np.zeros(dm.n_velocity)
        for ci, op in enumerate(self.ops):
            ul = u_full[dm.cell_dofs[ci]]
            C = conv_matrix(op.conv, ul)
            if mode == "plain":
                r[dm.cell_dofs[ci]] += C @ ul
            else:
                r[dm.cell_dofs[ci]] += 0.5 * (C @ ul - C.T @ ul)
        return r

    def convection_residual_jacobian(self, u_full: np.ndarray, mode: str):
        """Global convection residual vector and exact Jacobian at state u."""
        dm = self.dofmap
        r = np.zeros(dm.n_velocity)
        blocks = []
        for ci, op in enumerate(self.ops):
            ul = u_full[dm.cell_dofs[ci]]
            C = conv_matrix(op.conv, ul)
            Dw = conv_w_derivative(op.conv, ul)
            if mode == "plain":
                r[dm.cell_dofs[ci]] += C @ ul
                blocks.append(C + Dw)
            else:
                Cs = 0.5 * (C - C.T)
                r[dm.cell_dofs[ci]] += Cs @ ul
                D2 = conv_u_slot_derivative(op.conv, ul)
                blocks.append(0.5 * (C + Dw) - 0.5 * (C.T + D2))
        J = _scatter(blocks, dm.cell_dofs, dm.cell_dofs,
                     (dm.n_velocity, dm.n_velocity))
        return r, J


@dataclass
class SaddleSystem:
    """One linearized saddle-point problem, ready for the bordered direct solve."""

    A: sp.csr_matrix           # nu*A_h + C(w) on all velocity dofs
    B: sp.csr_matrix
    m: np.ndarray
    F: np.ndarray
    active: np.ndarray
    g: np.ndarray              # Dirichlet values (zero on active dofs)

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def bordered(self):
        a = self.active
        K = sp.bmat([
            [self.A[a][:, a], self.B[:, a].T, None],
            [self.B[:, a], None, self.m[:, None]],
            [None, self.m[None, :], None],
        ], format="csc")
        rhs = np.concatenate([
            self.F[a] - self.A[a][:, ~a] @ self.g[~a],
            -self.B[:, ~a] @ self.g[~a],
            [0.0],
        ])
        return K, rhs

    def expand(self, x: np.ndarray):
        """Split a bordered solution vector into (u_full, p, lam)."""
        na = self.n_active
        u = self.g.copy()
        u[self.active] = x[:na]
        np_ = len(self.m)
        return u, x[na: na + np_], float(x[-1])


def assemble_stokes(mesh: PolyMesh, nu: float, bc, f, k: int = 2,
                    workspace: Workspace | None = None) -> SaddleSystem:
    ws = workspace or Workspace(mesh, k)
    return SaddleSystem(nu * ws.A, ws.B, ws.m, ws.load_vector(f),
                        ws.dofmap.active, dirichlet_values(ws.dofmap, bc))


def assemble_oseen(mesh: PolyMesh, nu: float, bc, f, w_full: np.ndarray,
                   mode: str = "plain", k: int = 2,
                   workspace: Workspace | None = None) -> SaddleSystem:
    ws = workspace or Workspace(mesh, k)
    A = (nu * ws.A + ws.convection_matrix(w_full, mode)).tocsr()
    return SaddleSystem(A, ws.B, ws.m, ws.load_vector(f),
                        ws.dofmap.active, dirichlet_values(ws.dofmap, bc))


def ns_residual(ws: Workspace, nu: float, F: np.ndarray,
                u_full: np.ndarray, p: np.ndarray, lam: float, mode: str) -> np.ndarray:
    """Navier-Stokes residual on [active velocity; pressure; mean] rows."""
    a = ws.dofmap.active
    rc = ws.convection_residual(u_full, mode)
    r_u = (nu * (ws.A @ u_full) + rc + ws.B.T @ p - F)[a]
    r_p = ws.B @ u_full + ws.m * lam
    return np.concatenate([r_u, r_p, [float(ws.m @ p)]])


def newton_system(ws: Workspace, nu: float, F: np.ndarray, g: np.ndarray,
                  u_full: np.ndarray, p: np.ndarray, lam: float, mode: str):
    """Residual and Jacobian of the Navier-Stokes system at (u, p, lam).

    The residual lives on [active velocity rows; pressure rows; mean row];
    the Jacobian is the bordered matrix with the exact convection derivative.
    """
    a = ws.dofmap.active
    rc, Jc = ws.convection_residual_jacobian(u_full, mode)
    r_u = (nu * (ws.A @ u_full) + rc + ws.B.T @ p - F)[a]
    r_p = ws.B @ u_full + ws.m * lam
    r_m = float(ws.m @ p)
    residual = np.concatenate([r_u, r_p, [r_m]])
    Avis = (nu * ws.A + Jc).tocsr()
    K = sp.bmat([
        [Avis[a][:, a], ws.B[:, a].T, None],
        [ws.B[:, a], None, ws.m[:, None]],
        [None, ws.m[None, :], None],
    ], format="csc")
    return residual, K


def assemble_newton(mesh: PolyMesh, nu: float, bc, f, state, mode: str = "plain",
                    k: int = 2, workspace: Workspace | None = None):
    """Spec-level wrapper: state = (u_full, p, lam) satisfying the Dirichlet data."""
    ws = workspace or Workspace(mesh, k)
    u_full, p, lam = state
    F = ws.load_vector(f)
    g = dirichlet_values(ws.dofmap, bc)
    return newton_system(ws, nu, F, g, u_full, p, lam, mode)


def divergence_coeffs(mesh: PolyMesh, ops: list[ElementOperators],
                      dofmap: DofMap, u_full: np.ndarray) -> list[np.ndarray]:
    """Per-cell P_{k-1} coefficients of div u_h (exact from dofs)."""
    return [op.ctx.divmat @ u_full[dofmap.cell_dofs[ci]]
            for ci, op in enumerate(ops)]


def export_matrix(M: sp.spmatrix, path) -> None:
    """Debug dump in `row col value` coordinate text format."""
    coo = M.tocoo()
    with open(path, "w") as fh:
        fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {float(v)!r}\n")
