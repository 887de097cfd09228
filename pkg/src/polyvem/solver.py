"""Direct solution of the bordered saddle-point system and the nonlinear loop.

The nonlinear strategy is Picard (Oseen sweeps from the Stokes solution) to
get inside the Newton basin, then damped Newton with the exact convection
Jacobian. Residuals are Euclidean norms on the active rows, relative to the
load norm.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    SaddleSystem,
    Workspace,
    assemble_oseen,
    assemble_stokes,
    dirichlet_values,
    newton_system,
    ns_residual,
)
from .mesh.core import PolyMesh

log = logging.getLogger(__name__)


class SingularSystemError(RuntimeError):
    """Raised when the bordered matrix is singular; carries a culprit hint."""

    def __init__(self, message, dof=None):
        super().__init__(message)
        self.dof = dof


@dataclass
class NonlinearOptions:
    picard_max: int = 15
    newton_max: int = 25
    tol_rel: float = 1e-10
    tol_abs: float = 1e-13
    mode: str = "plain"
    damping: float = 1.0
    continuation: bool = False

    def __post_init__(self):
        if self.tol_rel <= 0 or self.tol_abs <= 0:
            raise ValueError("tolerances must be positive")
        if self.picard_max + self.newton_max < 1:
            raise ValueError("need at least one nonlinear iteration")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if self.mode not in ("plain", "skew"):
            raise ValueError("mode must be 'plain' or 'skew'")


@dataclass
class SolveReport:
    picard_iters: int = 0
    newton_iters: int = 0
    residuals: list = field(default_factory=list)
    converged: bool = True
    wall_time: float = 0.0
    message: str = ""


def _nullspace_hint(K) -> int | None:
    try:
        w, v = spla.eigsh(K.tocsc().astype(float), k=1, sigma=0, which="LM", maxiter=200)
        return int(np.argmax(np.abs(v[:, 0])))
    except Exception:
        return None


def linear_solve(K: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """Sparse LU solve with one round of iterative refinement.

    Raises SingularSystemError for structurally or numerically singular
    systems, naming the dominant null-vector entry when it can be found.
    """
    K = K.tocsc()
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        dof = _nullspace_hint(K)
        where = f" (null vector peaks at unknown {dof})" if dof is not None else ""
        raise SingularSystemError(f"singular saddle-point matrix{where}: {exc}", dof) from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        dof = _nullspace_hint(K)
        where = f" (null vector peaks at unknown {dof})" if dof is not None else ""
        raise SingularSystemError(f"factorization produced non-finite values{where}", dof)
    norm_rhs = np.linalg.norm(rhs)
    for _ in range(2):
        r = rhs - K @ x
        if np.linalg.norm(r) <= 1e-11 * max(norm_rhs, 1e-300):
            break
        x = x + lu.solve(r)
    return x


def solve_saddle(system: SaddleSystem):
    K, rhs = system.bordered()
    return system.expand(linear_solve(K, rhs))


def solve_stokes(mesh: PolyMesh, nu: float, bc, f, k: int = 2,
                 workspace: Workspace | None = None):
    """Single linear Stokes solve; returns (u_dofs, p_dofs, report)."""
    t0 = time.perf_counter()
    ws = workspace or Workspace(mesh, k)
    system = assemble_stokes(mesh, nu, bc, f, k, ws)
    u, p, lam = solve_saddle(system)
    K, rhs = system.bordered()
    na = system.n_active
    x = np.concatenate([u[system.active], p, [lam]])
    res = float(np.linalg.norm(rhs - K @ x))
    report = SolveReport(residuals=[res], converged=True,
                         wall_time=time.perf_counter() - t0)
    return u, p, report


def _ns_residual_norm(ws: Workspace, nu, F, u, p, lam, mode) -> float:
    return float(np.linalg.norm(ns_residual(ws, nu, F, u, p, lam, mode)))


def solve_navier_stokes(mesh: PolyMesh, nu: float, bc, f,
                        opts: NonlinearOptions | None = None, k: int = 2,
                        workspace: Workspace | None = None):
    """Picard warm start + damped Newton for the steady problem.

    Non-convergence is reported through the SolveReport flag (with the
    residual history), not an exception.
    """
    opts = opts or NonlinearOptions()
    ws = workspace or Workspace(mesh, k)
    if opts.continuation and nu < 1e-3:
        return _solve_with_continuation(mesh, nu, bc, f, opts, k, ws)
    return _solve_ns_core(ws, nu, bc, f, opts)


def _solve_with_continuation(mesh, nu, bc, f, opts, k, ws):
    t0 = time.perf_counter()
    path = []
    v = 1e-2
    while v > nu * (1 + 1e-12):
        path.append(v)
        v /= 10.0
    path.append(nu)
    state = None
    report = SolveReport()
    for v in path:
        u, p, report = _solve_ns_core(ws, v, bc, f, opts, initial=state)
        state = (u, p)
        if not report.converged:
            report.message += f" (continuation stalled at nu={v:g})"
            break
    report.wall_time = time.perf_counter() - t0
    return u, p, report


def _solve_ns_core(ws: Workspace, nu: float, bc, f, opts: NonlinearOptions,
                   initial=None):
    t0 = time.perf_counter()
    mesh = ws.mesh
    report = SolveReport()
    F = ws.load_vector(f)
    g = dirichlet_values(ws.dofmap, bc)

    # phase 0: Stokes warm start (or caller-provided state for continuation)
    sys0 = assemble_stokes(mesh, nu, bc, f, ws.k, ws)
    K0, rhs0 = sys0.bordered()
    # the driving data is the load plus the Dirichlet lift, so the relative
    # residual is measured against the full bordered right-hand side
    scale = max(np.linalg.norm(rhs0), opts.tol_abs)
    if initial is None:
        u, p, lam = sys0.expand(linear_solve(K0, rhs0))
    else:
        u, p = initial
        lam = 0.0
    res = _ns_residual_norm(ws, nu, F, u, p, lam, opts.mode)
    report.residuals.append(res)
    target = max(opts.tol_rel * scale, opts.tol_abs)

    # phase 1: Picard (Oseen with frozen convecting field)
    res0 = res
    for _ in range(opts.picard_max):
        if res <= max(target, 1e-2 * res0):
            break
        system = assemble_oseen(mesh, nu, bc, f, u, opts.mode, ws.k, ws)
        u, p, lam = solve_saddle(system)
        res = _ns_residual_norm(ws, nu, F, u, p, lam, opts.mode)
        report.picard_iters += 1
        report.residuals.append(res)

    # phase 2: damped Newton with the exact Jacobian
    for _ in range(opts.newton_max):
        if res <= target:
            break
        residual, K = newton_system(ws, nu, F, g, u, p, lam, opts.mode)
        delta = linear_solve(K, -residual)
        s = opts.damping
        best = None
        while True:
            du = np.zeros_like(u)
            du[ws.dofmap.active] = delta[: int(ws.dofmap.active.sum())]
            u_try = u + s * du
            p_try = p + s * delta[int(ws.dofmap.active.sum()):-1]
            lam_try = lam + s * delta[-1]
            res_try = _ns_residual_norm(ws, nu, F, u_try, p_try, lam_try, opts.mode)
            if best is None or res_try < best[0]:
                best = (res_try, u_try, p_try, lam_try)
            if res_try < res or s <= 1.0 / 16.0:
                break
            s /= 2.0
        res, u, p, lam = best
        report.newton_iters += 1
        report.residuals.append(res)

    report.converged = bool(res <= target)
    if not report.converged:
        report.message = f"stalled at relative residual {res / scale:.3e}"
        log.warning("Navier-Stokes solve did not converge: %s", report.message)
    report.wall_time = time.perf_counter() - t0
    return u, p, report
