"""Scaled polynomial bases, vector-polynomial calculus and quadrature on polygons.

Everything downstream (projectors, local forms, error norms) routes through
this module: scaled monomials m_a = ((x-x_E)/h_E)^a on a cell, the splitting
of vector polynomials into a gradient part and a rotated complement, and
positive-weight quadrature rules on arbitrary simple polygons obtained by
sub-triangulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def n_monomials(k: int) -> int:
    """Dimension of the polynomial space of total degree <= k in 2D."""
    if k < 0:
        return 0
    return (k + 1) * (k + 2) // 2


@lru_cache(maxsize=32)
def monomial_exponents(k: int) -> np.ndarray:
    """Exponent pairs (a, b) ordered by total degree, then descending a.

    Order: 1, x, y, x^2, xy, y^2, ... so lower-degree bases are prefixes of
    higher-degree ones.
    """
    exps = [(d - j, j) for d in range(k + 1) for j in range(d + 1)]
    out = np.array(exps, dtype=int).reshape(-1, 2)
    out.flags.writeable = False
    return out


def monomial_index(a: int, b: int) -> int:
    d = a + b
    return d * (d + 1) // 2 + b


class ScaledMonomialBasis:
    """Monomials ((x-x_E)/h_E)^a, |a| <= k, centered at a cell centroid.

    The h_E scaling keeps every basis member O(1) on the cell, which is what
    keeps local Gram and projector systems well conditioned on distorted
    polygons.
    """

    def __init__(self, k: int, center, h: float):
        if k < 0:
            raise ValueError("degree must be >= 0")
        self.k = k
        self.center = np.asarray(center, dtype=float)
        self.h = float(h)
        self.exponents = monomial_exponents(k)
        self.n = len(self.exponents)

    def eval(self, pts: np.ndarray) -> np.ndarray:
        """Values at pts (m, 2); returns (m, n)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        xi = (pts - self.center) / self.h
        ea, eb = self.exponents[:, 0], self.exponents[:, 1]
        return xi[:, 0:1] ** ea[None, :] * xi[:, 1:2] ** eb[None, :]

    def eval_grad(self, pts: np.ndarray) -> np.ndarray:
        """Gradients at pts; returns (m, n, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        xi = (pts - self.center) / self.h
        ea, eb = self.exponents[:, 0], self.exponents[:, 1]
        out = np.zeros((pts.shape[0], self.n, 2))
        # d/dx xi1^a xi2^b = (a/h) xi1^(a-1) xi2^b
        with np.errstate(invalid="ignore"):
            xa = np.where(ea[None, :] > 0, xi[:, 0:1] ** np.maximum(ea - 1, 0)[None, :], 0.0)
            yb = np.where(eb[None, :] > 0, xi[:, 1:2] ** np.maximum(eb - 1, 0)[None, :], 0.0)
        out[:, :, 0] = ea[None, :] / self.h * xa * xi[:, 1:2] ** eb[None, :]
        out[:, :, 1] = eb[None, :] / self.h * xi[:, 0:1] ** ea[None, :] * yb
        return out


@lru_cache(maxsize=64)
def _derivative_base(k: int, axis: int) -> np.ndarray:
    exps = monomial_exponents(k)
    D = np.zeros((n_monomials(k - 1), n_monomials(k)))
    for j, (a, b) in enumerate(exps):
        if axis == 0 and a > 0:
            D[monomial_index(a - 1, b), j] = float(a)
        if axis == 1 and b > 0:
            D[monomial_index(a, b - 1), j] = float(b)
    D.flags.writeable = False
    return D


def derivative_matrix(k: int, h: float, axis: int) -> np.ndarray:
    """Coefficient map P_k -> P_{k-1} of d/dx (axis=0) or d/dy (axis=1)."""
    return _derivative_base(k, axis) / h


def multiply_matrix(k: int, axis: int) -> np.ndarray:
    """Coefficient map P_k -> P_{k+1} of multiplication by xi1 (axis=0) or xi2."""
    exps = monomial_exponents(k)
    M = np.zeros((n_monomials(k + 1), n_monomials(k)))
    for j, (a, b) in enumerate(exps):
        if axis == 0:
            M[monomial_index(a + 1, b), j] = 1.0
        else:
            M[monomial_index(a, b + 1), j] = 1.0
    return M


@dataclass(frozen=True)
class PolyCalculus:
    """Exact operator matrices in the scaled basis for one (k, h_E) pair.

    Vector polynomials of degree k are stored as stacked coefficient vectors
    [x-component; y-component] of length 2*n_k.
    """

    k: int
    h: float
    dx: np.ndarray           # P_k -> P_{k-1}
    dy: np.ndarray
    divergence: np.ndarray   # [P_k]^2 -> P_{k-1}
    vector_laplacian: np.ndarray  # [P_k]^2 -> [P_{k-2}]^2
    grad_cols: np.ndarray    # gradients of P_{k+1}\R members as [P_k]^2 columns
    gperp_cols: np.ndarray   # xi^perp * P_{k-1} members as [P_k]^2 columns
    decomposition: np.ndarray  # [grad_cols | gperp_cols], square and invertible
    rot_gperp: np.ndarray    # diagonal of rot on the gperp block, P_{k-1} coeffs

    def split(self, vcoeffs: np.ndarray):
        """Coefficients of a vector polynomial in the (grad, gperp) blocks."""
        sol = np.linalg.solve(self.decomposition, vcoeffs)
        ng = self.grad_cols.shape[1]
        return sol[:ng], sol[ng:]


def poly_calculus(k: int, h: float) -> PolyCalculus:
    """Build the exact calculus matrices for vector polynomials of degree k."""
    nk = n_monomials(k)
    dx = derivative_matrix(k, h, 0)
    dy = derivative_matrix(k, h, 1)
    divergence = np.hstack([dx, dy])
    lap = derivative_matrix(k - 1, h, 0) @ dx + derivative_matrix(k - 1, h, 1) @ dy
    nkm2 = n_monomials(k - 2)
    vector_laplacian = np.zeros((2 * nkm2, 2 * nk))
    vector_laplacian[:nkm2, :nk] = lap
    vector_laplacian[nkm2:, nk:] = lap

    # gradients of P_{k+1} monomials of degree >= 1
    dxp = derivative_matrix(k + 1, h, 0)
    dyp = derivative_matrix(k + 1, h, 1)
    grad_cols = np.vstack([dxp[:, 1:], dyp[:, 1:]])

    # xi^perp q = (xi2 q, -xi1 q) for q in P_{k-1}
    mx = multiply_matrix(k - 1, 0)
    my = multiply_matrix(k - 1, 1)
    gperp_cols = np.vstack([my, -mx])

    decomposition = np.hstack([grad_cols, gperp_cols])

    # rot(xi^perp xi^alpha) = -(2 + |alpha|)/h * xi^alpha, a diagonal map
    degs = monomial_exponents(k - 1).sum(axis=1) if k >= 1 else np.zeros(0, dtype=int)
    rot_gperp = -(2.0 + degs) / h

    return PolyCalculus(k, h, dx, dy, divergence, vector_laplacian,
                        grad_cols, gperp_cols, decomposition, rot_gperp)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadRule:
    """Positive-weight rule on a polygon, exact to total degree `degree`."""

    points: np.ndarray   # (m, 2)
    weights: np.ndarray  # (m,)
    degree: int


@lru_cache(maxsize=64)
def _gauss01(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=64)
def triangle_rule(degree: int):
    """Rule on the reference triangle (0,0),(1,0),(0,1) via a collapsed square.

    The collapse map x=a, y=b(1-a) raises the a-degree of a total-degree-d
    integrand by one, hence the ceil((d+2)/2) point count per direction.
    """
    m = max(1, (degree + 3) // 2)
    ga, wa = _gauss01(m)
    gb, wb = _gauss01(m)
    A, B = np.meshgrid(ga, gb, indexing="ij")
    WA, WB = np.meshgrid(wa, wb, indexing="ij")
    x = A.ravel()
    y = (B * (1.0 - A)).ravel()
    w = (WA * WB * (1.0 - A)).ravel()
    pts = np.column_stack([x, y])
    pts.flags.writeable = False
    w.flags.writeable = False
    return pts, w


def signed_area(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    w = np.empty_like(v)
    w[:-1] = v[1:]
    w[-1] = v[0]
    return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))


def polygon_centroid(vertices: np.ndarray):
    """Area centroid of a simple polygon (shoelace moments)."""
    v = np.asarray(vertices, dtype=float)
    w = np.empty_like(v)
    w[:-1] = v[1:]
    w[-1] = v[0]
    cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
    a = 0.5 * cross.sum()
    cx = np.sum((v[:, 0] + w[:, 0]) * cross) / (6.0 * a)
    cy = np.sum((v[:, 1] + w[:, 1]) * cross) / (6.0 * a)
    return np.array([cx, cy]), a


def cross2(u, v):
    """z-component of the cross product of 2D vectors (supports broadcasting)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _point_in_triangle(p, a, b, c, eps=1e-14):
    d1 = cross2(b - a, p - a)
    d2 = cross2(c - b, p - b)
    d3 = cross2(a - c, p - c)
    return d1 >= -eps and d2 >= -eps and d3 >= -eps


def triangulate_polygon(vertices: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangle index triples covering a simple CCW polygon.

    Fans from the centroid when the centroid sees every edge (star-shaped
    case, which covers all convex cells); otherwise ear clipping.
    """
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    if n == 3:
        return [(0, 1, 2)]
    c, area = polygon_centroid(v)
    if area <= 0:
        raise ValueError("polygon must be CCW with positive area")
    fan_ok = True
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        if cross2(b - a, c - a) <= 1e-13 * area:
            fan_ok = False
            break
    if fan_ok:
        # centroid fan: returned triples index into vertices + [centroid]
        return [(i, (i + 1) % n, n) for i in range(n)]
    # ear clipping on the vertex ring
    idx = list(range(n))
    tris = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 2 * n * n:
            raise ValueError("ear clipping failed; polygon may be non-simple")
        m = len(idx)
        clipped = False
        for j in range(m):
            i0, i1, i2 = idx[j - 1], idx[j], idx[(j + 1) % m]
            a, b, cc = v[i0], v[i1], v[i2]
            if cross2(b - a, cc - a) <= 1e-14 * area:
                continue
            if any(_point_in_triangle(v[t], a, b, cc)
                   for t in idx if t not in (i0, i1, i2)):
                continue
            tris.append((i0, i1, i2))
            idx.pop(j)
            clipped = True
            break
        if not clipped:
            raise ValueError("no ear found; polygon may be non-simple")
    tris.append(tuple(idx))
    return tris


def quad_rule(vertices: np.ndarray, degree: int, refine: int = 0) -> QuadRule:
    """Quadrature on a simple CCW polygon by sub-triangulation.

    `refine` uniformly splits every triangle 4-ways that many times; used to
    build independent oracle rules in tests.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    v = np.asarray(vertices, dtype=float)
    area = signed_area(v)
    if area <= 0:
        raise ValueError("degenerate or clockwise polygon")
    tris = triangulate_polygon(v)
    c, _ = polygon_centroid(v)
    allv = np.vstack([v, c[None, :]])
    corners = [(allv[i], allv[j], allv[k]) for i, j, k in tris]
    for _ in range(refine):
        nxt = []
        for a, b, cc in corners:
            ab, bc, ca = (a + b) / 2, (b + cc) / 2, (cc + a) / 2
            nxt += [(a, ab, ca), (ab, b, bc), (ca, bc, cc), (ab, bc, ca)]
        corners = nxt
    rp, rw = triangle_rule(degree)
    pts, wts = [], []
    for a, b, cc in corners:
        J = np.column_stack([b - a, cc - a])
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        pts.append(a[None, :] + rp @ J.T)
        wts.append(rw * det)
    return QuadRule(np.vstack(pts), np.concatenate(wts), degree)


def gram_matrix(basis: ScaledMonomialBasis, rule: QuadRule) -> np.ndarray:
    """Mass matrix H_ij = int m_i m_j dE of a scaled monomial basis."""
    V = basis.eval(rule.points)
    return (V * rule.weights[:, None]).T @ V


def mixed_gram(b1: ScaledMonomialBasis, b2: ScaledMonomialBasis, rule: QuadRule) -> np.ndarray:
    V1 = b1.eval(rule.points)
    V2 = b2.eval(rule.points)
    return (V1 * rule.weights[:, None]).T @ V2


# ---------------------------------------------------------------------------
# edges
# ---------------------------------------------------------------------------

def edge_quadrature(p0, p1, degree: int):
    """Gauss rule on the segment p0->p1, exact to `degree`; returns (pts, w, t)."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    m = max(1, (degree + 2) // 2)
    t, w = _gauss01(m)
    pts = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    return pts, w * np.linalg.norm(p1 - p0), t


@lru_cache(maxsize=16)
def edge_node_params(k: int) -> np.ndarray:
    """Parameters in [0,1] of the k+1 per-edge nodes: endpoints + k-1 interior.

    Interior nodes are equispaced for k=2 (the midpoint) and Gauss-Lobatto
    for k>=3, keeping the edge Vandermonde well conditioned.
    """
    if k < 2:
        raise ValueError("velocity space needs k >= 2")
    if k == 2:
        interior = np.array([0.5])
    else:
        leg = np.polynomial.legendre.Legendre.basis(k).deriv()
        interior = np.sort((leg.roots().real + 1.0) / 2.0)
    out = np.concatenate([[0.0], interior, [1.0]])
    out.flags.writeable = False
    return out


def boundary_trace_matrix(k: int) -> np.ndarray:
    """Map nodal edge values to P_k(e) coefficients in the t^j basis on [0,1]."""
    t = edge_node_params(k)
    V = t[:, None] ** np.arange(k + 1)[None, :]
    return np.linalg.inv(V)


def lagrange_values(params: np.ndarray, at: np.ndarray) -> np.ndarray:
    """Values at `at` of the Lagrange basis on nodes `params`; (len(at), len(params))."""
    n = len(params)
    out = np.ones((len(at), n))
    for j in range(n):
        for i in range(n):
            if i != j:
                out[:, j] *= (at - params[i]) / (params[j] - params[i])
    return out
