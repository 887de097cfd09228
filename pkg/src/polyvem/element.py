"""Per-cell machinery: DoF layout, computable projectors and local form matrices.

The local velocity space on a polygon E is known only through its degrees of
freedom:

  * nodal values at the vertices,
  * nodal values at k-1 points per edge,
  * moments against the rotated complement xi^perp P_{k-3}(E)  (scaled by 1/|E|),
  * moments of the divergence against P_{k-1}(E)/R             (scaled by h_E/|E|).

The moment scalings give every dof the dimension of a velocity, which keeps
the dof-vector stabilizer uniformly equivalent to the seminorm across
refinements.

Everything else (H1-seminorm projector, L2 projectors of the function and of
its gradient, stiffness/divergence/convection/load matrices) is reconstructed
exactly from those numbers via integration by parts on polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .polyquad import (
    PolyCalculus,
    QuadRule,
    ScaledMonomialBasis,
    edge_node_params,
    edge_quadrature,
    lagrange_values,
    mixed_gram,
    n_monomials,
    poly_calculus,
    quad_rule,
)
from .mesh.core import cell_geometry


@dataclass(frozen=True)
class DofLayout:
    """Dimension bookkeeping of the local velocity/pressure pair."""

    k: int
    n_edges: int
    n_vertex: int   # vertex value dofs (2 per vertex)
    n_edge: int     # edge node value dofs (2(k-1) per edge)
    n_gperp: int    # moments against xi^perp P_{k-3}
    n_div: int      # divergence moments against P_{k-1}/R
    total: int
    n_pressure: int

    @property
    def n_boundary(self) -> int:
        return self.n_vertex + self.n_edge


def dof_layout(k: int, n_edges: int) -> DofLayout:
    if k < 2:
        raise ValueError("velocity space is defined for k >= 2")
    if n_edges < 3:
        raise ValueError("a cell needs at least 3 edges")
    n_vertex = 2 * n_edges
    n_edge = 2 * n_edges * (k - 1)
    n_gperp = (k - 1) * (k - 2) // 2
    n_div = (k + 1) * k // 2 - 1
    total = n_vertex + n_edge + n_gperp + n_div
    return DofLayout(k, n_edges, n_vertex, n_edge, n_gperp, n_div, total,
                     (k + 1) * k // 2)


@dataclass(frozen=True)
class QuadDegrees:
    """Quadrature exactness per integral family (overridable via config)."""

    bilinear: int
    trilinear: int
    load: int
    boundary: int

    @classmethod
    def for_order(cls, k: int, bilinear=None, trilinear=None, load=None, boundary=None):
        return cls(bilinear if bilinear is not None else 2 * k + 2,
                   trilinear if trilinear is not None else 3 * k,
                   load if load is not None else 2 * k + 3,
                   boundary if boundary is not None else 2 * k + 1)


class CellContext:
    """Geometry, bases, quadrature and boundary-trace machinery for one cell."""

    def __init__(self, verts: np.ndarray, k: int, quad: QuadDegrees | None = None):
        self.verts = np.asarray(verts, dtype=float)
        self.k = k
        self.quad = quad or QuadDegrees.for_order(k)
        self.geo = cell_geometry(self.verts)
        n_e = len(self.verts)
        self.layout = dof_layout(k, n_e)

        c, h = self.geo.centroid, self.geo.diameter
        self.basis = ScaledMonomialBasis(k, c, h)
        self.basis_km1 = ScaledMonomialBasis(k - 1, c, h)
        self.basis_kp1 = ScaledMonomialBasis(k + 1, c, h)
        self.calc = poly_calculus(k, h)
        self.calc_low = poly_calculus(k - 2, h)

        self.rule = quad_rule(self.verts, self.quad.bilinear)
        self.rule_high = quad_rule(self.verts, self.quad.load)

        # volume Gram matrices
        self.H = gram_of(self.basis, self.rule)
        self.Hkm1 = self.H[: self.basis_km1.n, : self.basis_km1.n]
        self.Hmix = mixed_gram(self.basis_kp1, self.basis_km1, self.rule)

        self._build_nodes()
        self._build_boundary_tables()
        self._build_gperp()
        self.divmat = self._build_divmat()

    # -- dof geometry ------------------------------------------------------
    def _build_nodes(self):
        k, verts = self.k, self.verts
        n_e = len(verts)
        tint = edge_node_params(k)[1:-1]
        nodes = [verts[i] for i in range(n_e)]
        for e in range(n_e):
            a, b = verts[e], verts[(e + 1) % n_e]
            for t in tint:
                nodes.append(a + t * (b - a))
        self.node_coords = np.asarray(nodes)

        # dof indices of the k+1 trace nodes along each edge, per component
        self.edge_dof_x = []
        self.edge_dof_y = []
        for e in range(n_e):
            idx = [2 * e]
            base = 2 * n_e + e * 2 * (k - 1)
            idx += [base + 2 * j for j in range(k - 1)]
            idx.append(2 * ((e + 1) % n_e))
            idx = np.asarray(idx)
            self.edge_dof_x.append(idx)
            self.edge_dof_y.append(idx + 1)

    def _build_boundary_tables(self):
        """Per-edge matrices BX/BY with rows int_e m_i^{(k+1)} v_{x,y} ds over dofs."""
        k = self.k
        n_e = len(self.verts)
        N = self.layout.total
        params = edge_node_params(k)
        self.BX = []
        self.BY = []
        self._edge_rules = []
        for e in range(n_e):
            a, b = self.verts[e], self.verts[(e + 1) % n_e]
            pts, w, t = edge_quadrature(a, b, self.quad.boundary)
            lam = lagrange_values(params, t)          # (nq, k+1)
            mv = self.basis_kp1.eval(pts)             # (nq, n_{k+1})
            core = mv.T @ (w[:, None] * lam)          # (n_{k+1}, k+1)
            bx = np.zeros((self.basis_kp1.n, N))
            by = np.zeros_like(bx)
            bx[:, self.edge_dof_x[e]] = core
            by[:, self.edge_dof_y[e]] = core
            self.BX.append(bx)
            self.BY.append(by)
            self._edge_rules.append((pts, w, t))

    def pad(self, coeffs: np.ndarray) -> np.ndarray:
        """Zero-pad lower-degree scalar coefficients to the P_{k+1} basis."""
        out = np.zeros(self.basis_kp1.n)
        out[: len(coeffs)] = coeffs
        return out

    def flux_rows(self, Q: np.ndarray) -> np.ndarray:
        """Rows of int_{dE} q (v.n) ds over local dofs; Q is (m, n_{k+1})."""
        Q = np.atleast_2d(Q)
        rows = np.zeros((Q.shape[0], self.layout.total))
        for e in range(len(self.verts)):
            nx, ny = self.geo.edge_normals[e]
            rows += nx * (Q @ self.BX[e]) + ny * (Q @ self.BY[e])
        return rows

    def flux_row(self, q_kp1: np.ndarray) -> np.ndarray:
        return self.flux_rows(q_kp1)[0]

    def comp_rows(self, Q: np.ndarray, comp: int,
                  weights: np.ndarray | None = None) -> np.ndarray:
        """Rows of int_{dE} q v_comp ds, optionally weighted per edge."""
        Q = np.atleast_2d(Q)
        rows = np.zeros((Q.shape[0], self.layout.total))
        tables = self.BX if comp == 0 else self.BY
        for e in range(len(self.verts)):
            w = 1.0 if weights is None else weights[e]
            if w != 0.0:
                rows += w * (Q @ tables[e])
        return rows

    def comp_row(self, q_kp1: np.ndarray, comp: int,
                 weights: np.ndarray | None = None) -> np.ndarray:
        return self.comp_rows(q_kp1, comp, weights)[0]

    # -- rotated complement --------------------------------------------------
    def _build_gperp(self):
        nk = self.basis.n
        gp = self.calc.gperp_cols                      # (2nk, n_{k-1})
        n_low = n_monomials(self.k - 3)
        self.gperp_low = gp[:, :n_low]
        high = gp[:, n_low:]
        if n_low:
            H2 = self._h2()
            gram_low = self.gperp_low.T @ H2 @ self.gperp_low
            coupling = self.gperp_low.T @ H2 @ high
            high = high - self.gperp_low @ np.linalg.solve(gram_low, coupling)
        self.gperp_complement = high

    def _h2(self) -> np.ndarray:
        nk = self.basis.n
        H2 = np.zeros((2 * nk, 2 * nk))
        H2[:nk, :nk] = self.H
        H2[nk:, nk:] = self.H
        return H2

    def gperp_values(self, pts: np.ndarray) -> np.ndarray:
        """Values of the D_V3 test fields xi^perp m_a^{(k-3)} at pts: (n3, nq, 2)."""
        n3 = self.layout.n_gperp
        if n3 == 0:
            return np.zeros((0, len(pts), 2))
        xi = (pts - self.geo.centroid) / self.geo.diameter
        mv = ScaledMonomialBasis(self.k - 3, self.geo.centroid, self.geo.diameter).eval(pts)
        out = np.empty((n3, len(pts), 2))
        out[:, :, 0] = (mv * xi[:, 1:2]).T
        out[:, :, 1] = (-mv * xi[:, 0:1]).T
        return out

    # -- exact divergence ----------------------------------------------------
    def _build_divmat(self) -> np.ndarray:
        """Dofs -> P_{k-1} coefficients of div v (exact for space members)."""
        lay = self.layout
        nkm1 = self.basis_km1.n
        mu = np.zeros((nkm1, lay.total))
        mu[0] = self.flux_row(self.pad(np.array([1.0])))
        off = lay.n_boundary + lay.n_gperp
        for j in range(1, nkm1):
            mu[j, off + j - 1] = self.geo.area / self.geo.diameter
        return np.linalg.solve(self.Hkm1, mu)

    def grad_moment_rows(self, Psi: np.ndarray) -> np.ndarray:
        """Rows of int_E v . grad(psi) dE via parts; Psi is (m, n_{k+1})."""
        Psi = np.atleast_2d(Psi)
        return -(Psi @ self.Hmix) @ self.divmat + self.flux_rows(Psi)

    def grad_moment_row(self, psi_kp1: np.ndarray) -> np.ndarray:
        return self.grad_moment_rows(psi_kp1)[0]


def gram_of(basis: ScaledMonomialBasis, rule: QuadRule) -> np.ndarray:
    V = basis.eval(rule.points)
    return (V * rule.weights[:, None]).T @ V


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------

def grad_pairing_matrix(ctx: CellContext) -> np.ndarray:
    """Rows of int_E grad(phi_i) : grad(v) over dofs, phi_i the tensor basis.

    Evaluated through integration by parts: the vector Laplacian splits into a
    gradient part (read through the exact divergence) and a rotated part (read
    from the D_V3 moments); the boundary term comes from the edge traces.
    """
    nk = ctx.basis.n
    N = ctx.layout.total
    nl = n_monomials(ctx.k - 2)
    lap_map = derlap(ctx)

    # split the vector Laplacians of all 2 n_k members in one solve
    Lap = np.zeros((2 * nl, 2 * nk))
    Lap[:nl, :nk] = lap_map
    Lap[nl:, nk:] = lap_map
    C = np.linalg.solve(ctx.calc_low.decomposition, Lap)
    ng = ctx.calc_low.grad_cols.shape[1]
    c_grad, c_perp = C[:ng], C[ng:]

    Psi = np.zeros((2 * nk, ctx.basis_kp1.n))
    Psi[:, 1: 1 + ng] = c_grad.T
    vol = ctx.grad_moment_rows(Psi)
    if ctx.layout.n_gperp:
        off = ctx.layout.n_boundary
        vol[:, off: off + ctx.layout.n_gperp] += ctx.geo.area * c_perp.T

    npad = ctx.basis_kp1.n
    DX = np.zeros((nk, npad))
    DX[:, : ctx.calc.dx.shape[0]] = ctx.calc.dx.T
    DY = np.zeros((nk, npad))
    DY[:, : ctx.calc.dy.shape[0]] = ctx.calc.dy.T
    B = np.empty((2 * nk, N))
    for r in (0, 1):
        bnd = ctx.comp_rows(DX, r, ctx.geo.edge_normals[:, 0]) \
            + ctx.comp_rows(DY, r, ctx.geo.edge_normals[:, 1])
        B[r * nk:(r + 1) * nk] = -vol[r * nk:(r + 1) * nk] + bnd
    return B


def build_pi_nabla(ctx: CellContext) -> np.ndarray:
    """H1-seminorm projector matrix: dofs -> [P_k]^2 coefficients (2 n_k x N)."""
    nk = ctx.basis.n
    gv = ctx.basis.eval_grad(ctx.rule.points)
    Gs = np.einsum("q,qid,qjd->ij", ctx.rule.weights, gv, gv)
    G = np.zeros((2 * nk, 2 * nk))
    G[:nk, :nk] = Gs
    G[nk:, nk:] = Gs
    B = grad_pairing_matrix(ctx).copy()

    # the seminorm kernel (constants) is fixed by matching the cell average
    q_int = ctx.H[0]
    area = ctx.geo.area
    hE = ctx.geo.diameter
    for r in (0, 1):
        i = r * nk
        G[i] = 0.0
        G[i, r * nk: r * nk + nk] = q_int / area
        psi = np.zeros(ctx.basis_kp1.n)
        psi[1 + r] = hE  # h*xi_r has gradient e_r
        B[i] = ctx.grad_moment_row(psi) / area
    return np.linalg.solve(G, B)


def derlap(ctx: CellContext) -> np.ndarray:
    """Scalar Laplacian coefficient map P_k -> P_{k-2} for the cell's basis."""
    h = ctx.geo.diameter
    from .polyquad import derivative_matrix
    return (derivative_matrix(ctx.k - 1, h, 0) @ derivative_matrix(ctx.k, h, 0)
            + derivative_matrix(ctx.k - 1, h, 1) @ derivative_matrix(ctx.k, h, 1))


def unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def build_moment_matrix(ctx: CellContext, pi_nabla: np.ndarray) -> np.ndarray:
    """Full moments of v against the tensor [P_k]^2 basis, dofs -> (2 n_k x N).

    Gradient-block moments come from integration by parts (the divergence is
    fully known), low rotated moments are dofs, and the rotated-complement
    moments are replaced by those of the seminorm projection — the defining
    constraint of the enhanced space, exact for its members.
    """
    N = ctx.layout.total
    n3 = ctx.layout.n_gperp
    off = ctx.layout.n_boundary
    grad_rows = ctx.grad_moment_rows(np.eye(ctx.basis_kp1.n)[1:])
    low_rows = np.zeros((n3, N))
    low_rows[np.arange(n3), off + np.arange(n3)] = ctx.geo.area
    HP = ctx._h2() @ pi_nabla
    comp_rows = ctx.gperp_complement.T @ HP
    M_decomp = np.vstack([grad_rows, low_rows, comp_rows])
    T = np.hstack([ctx.calc.grad_cols, ctx.gperp_low, ctx.gperp_complement])
    return np.linalg.solve(T.T, M_decomp)


def build_pi0_k(ctx: CellContext, moments: np.ndarray) -> np.ndarray:
    """L2 projector matrix: dofs -> [P_k]^2 coefficients."""
    nk = ctx.basis.n
    top = np.linalg.solve(ctx.H, moments[:nk])
    bot = np.linalg.solve(ctx.H, moments[nk:])
    return np.vstack([top, bot])


def build_pi0_grad(ctx: CellContext, moments: np.ndarray) -> np.ndarray:
    """L2 projector of the gradient: dofs -> P_{k-1} coefficients per (r, c) entry.

    Returns an array Pg of shape (2, 2, n_{k-1}, N) with
    (Pi0 grad v)_{rc} = Pg[r, c] @ dofs.
    """
    nk = ctx.basis.n
    nkm1 = ctx.basis_km1.n
    N = ctx.layout.total
    from .polyquad import derivative_matrix
    h = ctx.geo.diameter
    D = [derivative_matrix(ctx.k - 1, h, 0), derivative_matrix(ctx.k - 1, h, 1)]
    Ipad = np.zeros((nkm1, ctx.basis_kp1.n))
    Ipad[:, :nkm1] = np.eye(nkm1)
    Pg = np.empty((2, 2, nkm1, N))
    for r in (0, 1):
        mom_r = moments[r * nk:(r + 1) * nk]
        for c in (0, 1):
            PK = np.zeros((nkm1, nk))
            PK[:, : D[c].shape[0]] = D[c].T   # rows: d_c m_j in P_k coeffs
            bnd = ctx.comp_rows(Ipad, r, ctx.geo.edge_normals[:, c])
            Pg[r, c] = np.linalg.solve(ctx.Hkm1, -(PK @ mom_r) + bnd)
    return Pg


# ---------------------------------------------------------------------------
# local matrices
# ---------------------------------------------------------------------------

def dof_matrix(ctx: CellContext) -> np.ndarray:
    """Dofs of every tensor basis polynomial: (N x 2 n_k)."""
    nk = ctx.basis.n
    lay = ctx.layout
    D = np.zeros((lay.total, 2 * nk))
    vals = ctx.basis.eval(ctx.node_coords)       # (n_nodes, nk)
    for node in range(len(ctx.node_coords)):
        D[2 * node, :nk] = vals[node]
        D[2 * node + 1, nk:] = vals[node]
    if lay.n_gperp:
        g = ctx.gperp_values(ctx.rule.points)    # (n3, nq, 2)
        mv = ctx.basis.eval(ctx.rule.points)
        w = ctx.rule.weights
        off = lay.n_boundary
        for a in range(lay.n_gperp):
            D[off + a, :nk] = (w * g[a, :, 0]) @ mv / ctx.geo.area
            D[off + a, nk:] = (w * g[a, :, 1]) @ mv / ctx.geo.area
    off = lay.n_boundary + lay.n_gperp
    for r in (0, 1):
        der = ctx.calc.dx if r == 0 else ctx.calc.dy
        block = ctx.Hkm1 @ der                   # (n_{k-1}, nk): int m_b d_r m_j
        D[off: off + lay.n_div, r * nk:(r + 1) * nk] = \
            block[1:] * (ctx.geo.diameter / ctx.geo.area)
    return D


def local_stiffness(ctx: CellContext, pi_nabla: np.ndarray):
    """Stabilized local grad-grad matrix A_h^E and its scaling constant.

    Consistency part in projected coordinates plus the dof-vector stabilizer
    scaled by the mean of the nonzero consistency eigenvalues.
    """
    nk = ctx.basis.n
    gv = ctx.basis.eval_grad(ctx.rule.points)
    Gs = np.einsum("q,qid,qjd->ij", ctx.rule.weights, gv, gv)
    G = np.zeros((2 * nk, 2 * nk))
    G[:nk, :nk] = Gs
    G[nk:, nk:] = Gs
    Ac = pi_nabla.T @ G @ pi_nabla
    Ac = 0.5 * (Ac + Ac.T)
    eigs = np.linalg.eigvalsh(Ac)
    nonzero = eigs[eigs > 1e-12 * max(eigs.max(), 1e-300)]
    alpha = float(nonzero.mean())
    if alpha <= 0:
        raise RuntimeError("nonpositive stabilization constant")
    R = np.eye(ctx.layout.total) - dof_matrix(ctx) @ pi_nabla
    S = R.T @ R
    return Ac + alpha * S, alpha, S


def local_divergence(ctx: CellContext) -> np.ndarray:
    """Exact matrix of int_E q_{k-1} div v over (pressure basis x dofs)."""
    lay = ctx.layout
    B = np.zeros((lay.n_pressure, lay.total))
    B[0] = ctx.flux_row(ctx.pad(np.array([1.0])))
    off = lay.n_boundary + lay.n_gperp
    for j in range(1, lay.n_pressure):
        B[j, off + j - 1] = ctx.geo.area / ctx.geo.diameter
    return B


def local_load(ctx: CellContext, pi0: np.ndarray, f) -> np.ndarray:
    """Load vector (f, Pi0_k v) using the high-order rule."""
    nk = ctx.basis.n
    pts, w = ctx.rule_high.points, ctx.rule_high.weights
    fv = np.asarray(f(pts), dtype=float)
    mv = ctx.basis.eval(pts)
    b = np.concatenate([(w * fv[:, 0]) @ mv, (w * fv[:, 1]) @ mv])
    return pi0.T @ b


def interpolate_dofs(ctx: CellContext, u, div_u=None) -> np.ndarray:
    """Dof vector of a velocity field given as a callable pts -> (n, 2).

    The divergence moments use `div_u` when supplied, otherwise central finite
    differences with step 1e-6 h_E.
    """
    lay = ctx.layout
    dofs = np.zeros(lay.total)
    uv = np.asarray(u(ctx.node_coords), dtype=float)
    dofs[0: lay.n_boundary: 2] = uv[:, 0]
    dofs[1: lay.n_boundary: 2] = uv[:, 1]
    pts, w = ctx.rule_high.points, ctx.rule_high.weights
    if lay.n_gperp:
        g = ctx.gperp_values(pts)
        uq = np.asarray(u(pts), dtype=float)
        off = lay.n_boundary
        for a in range(lay.n_gperp):
            dofs[off + a] = (w * (g[a] * uq).sum(axis=1)).sum() / ctx.geo.area
    if div_u is None:
        step = 1e-6 * ctx.geo.diameter
        ex = np.array([step, 0.0])
        ey = np.array([0.0, step])

        def div_u(p):
            du = (np.asarray(u(p + ex))[:, 0] - np.asarray(u(p - ex))[:, 0]) / (2 * step)
            dv = (np.asarray(u(p + ey))[:, 1] - np.asarray(u(p - ey))[:, 1]) / (2 * step)
            return du + dv

    dv = np.asarray(div_u(pts), dtype=float)
    mv = ctx.basis_km1.eval(pts)
    off = lay.n_boundary + lay.n_gperp
    dofs[off: off + lay.n_div] = \
        ((w * dv) @ mv)[1:] * (ctx.geo.diameter / ctx.geo.area)
    return dofs


# ---------------------------------------------------------------------------
# convection
# ---------------------------------------------------------------------------

@dataclass
class ConvectionTables:
    """Quadrature-point values of the projected dof basis, for trilinear terms."""

    weights: np.ndarray  # (nq,)
    P0v: np.ndarray      # (nq, 2, N): values of Pi0_k of each dof basis function
    Gv: np.ndarray       # (nq, 2, 2, N): values of Pi0_{k-1} grad of each one


def convection_tables(ctx: CellContext, pi0: np.ndarray, pi0_grad: np.ndarray) -> ConvectionTables:
    rule = quad_rule(ctx.verts, ctx.quad.trilinear)
    nk = ctx.basis.n
    mk = ctx.basis.eval(rule.points)
    mkm1 = ctx.basis_km1.eval(rule.points)
    P0v = np.stack([mk @ pi0[:nk], mk @ pi0[nk:]], axis=1)
    Gv = np.empty((len(rule.points), 2, 2, ctx.layout.total))
    for r in (0, 1):
        for c in (0, 1):
            Gv[:, r, c, :] = mkm1 @ pi0_grad[r, c]
    return ConvectionTables(rule.weights, P0v, Gv)


def conv_matrix(tab: ConvectionTables, w_dofs: np.ndarray) -> np.ndarray:
    """C_ij = c_h^E(w; phi_j, phi_i), the Oseen matrix at frozen convecting field w."""
    pw = np.einsum("qrn,n->qr", tab.P0v, w_dofs)
    t1 = np.einsum("qrcj,qc->qrj", tab.Gv, pw)
    return np.einsum("q,qri,qrj->ij", tab.weights, tab.P0v, t1)


def conv_w_derivative(tab: ConvectionTables, u_dofs: np.ndarray) -> np.ndarray:
    """D_ij = c_h^E(phi_j; u, phi_i): derivative of the w-slot at state u."""
    gu = np.einsum("qrcn,n->qrc", tab.Gv, u_dofs)
    t2 = np.einsum("qrc,qcj->qrj", gu, tab.P0v)
    return np.einsum("q,qri,qrj->ij", tab.weights, tab.P0v, t2)


def conv_u_slot_derivative(tab: ConvectionTables, u_dofs: np.ndarray) -> np.ndarray:
    """D2_ij = c_h^E(phi_j; phi_i, u): needed by the skew-form Newton Jacobian."""
    pu = np.einsum("qrn,n->qr", tab.P0v, u_dofs)
    return np.einsum("q,qr,qrci,qcj->ij", tab.weights, pu, tab.Gv, tab.P0v,
                     optimize=True)


def local_convection(tab: ConvectionTables, w_dofs: np.ndarray, mode: str) -> np.ndarray:
    """Local convection matrix at frozen w: plain c_h or its skew-symmetric part."""
    C = conv_matrix(tab, w_dofs)
    if mode == "plain":
        return C
    if mode == "skew":
        return 0.5 * (C - C.T)
    raise ValueError(f"unknown convection mode {mode!r}")


# ---------------------------------------------------------------------------
# bundle
# ---------------------------------------------------------------------------

@dataclass
class ElementOperators:
    ctx: CellContext
    pi_nabla: np.ndarray
    moments: np.ndarray
    pi0: np.ndarray
    pi0_grad: np.ndarray
    stiffness: np.ndarray
    stabilization: np.ndarray
    alpha: float
    divergence: np.ndarray
    _conv: ConvectionTables | None = field(default=None, repr=False)

    @property
    def conv(self) -> ConvectionTables:
        if self._conv is None:
            self._conv = convection_tables(self.ctx, self.pi0, self.pi0_grad)
        return self._conv


def build_element(verts: np.ndarray, k: int, quad: QuadDegrees | None = None) -> ElementOperators:
    ctx = CellContext(verts, k, quad)
    pin = build_pi_nabla(ctx)
    mom = build_moment_matrix(ctx, pin)
    pi0 = build_pi0_k(ctx, mom)
    pg = build_pi0_grad(ctx, mom)
    A, alpha, S = local_stiffness(ctx, pin)
    B = local_divergence(ctx)
    return ElementOperators(ctx, pin, mom, pi0, pg, A, S, alpha, B)
