"""Registered benchmark problems with closed-form solutions and loads.

Sign convention of the strong form (also used to derive every load):

    -nu * lap(u) + (grad u) u - grad p = f,   div u = 0,

with the convective term dropped for the Stokes-only cases. The loads for the
trigonometric/polynomial cases were derived by hand from the exact solutions;
`verify_case` re-checks the identity numerically at random points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import (
    PolyMesh,
    gen_disk_triangles,
    gen_square_quads,
    gen_square_triangles,
    gen_voronoi_cvt,
    gen_web_hexagons,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class MeshSpec:
    label: str          # family tag used in output file names (Q, U, T, W, V, D)
    family: str         # quad | tri | web | voronoi | disk-tri
    levels: tuple       # subdivision parameters, h ~ 1/n
    distortion: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class BenchmarkCase:
    name: str
    domain: str                  # square | disk
    nu: float
    stokes: bool
    velocity: callable           # pts (n,2) -> (n,2)
    grad: callable               # pts -> (n,2,2)
    pressure: callable           # pts -> (n,)
    load: callable               # pts -> (n,2)
    meshes: tuple[MeshSpec, ...]
    mode: str = "plain"
    nu_sweep: tuple = ()
    description: str = ""


_REGISTRY: dict[str, BenchmarkCase] = {}


def register(case: BenchmarkCase, check: bool = True) -> BenchmarkCase:
    if check:
        res = pde_residual(case)
        if res > 1e-8:
            raise ValueError(f"case {case.name}: load inconsistent with the "
                             f"exact solution (residual {res:.3e})")
    _REGISTRY[case.name] = case
    return case


def list_cases() -> list[str]:
    return sorted(_REGISTRY)


def get_case(name: str) -> BenchmarkCase:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown case {name!r}; registered: {', '.join(list_cases())}") from None


def _random_points(case: BenchmarkCase, n: int, seed: int = 1234) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if case.domain == "square":
        return rng.uniform(0.05, 0.95, (n, 2))
    r = 0.95 * np.sqrt(rng.uniform(0, 1, n))
    th = rng.uniform(0, TWO_PI, n)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def pde_residual(case: BenchmarkCase, n: int = 100, seed: int = 1234) -> float:
    """Max norm of -nu lap(u) + (grad u) u - grad p - f at random points.

    The Laplacian comes from central differences of the registered gradient
    and grad p from central differences of the pressure (step 1e-6).
    """
    pts = _random_points(case, n, seed)
    h = 1e-6
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    g = case.grad
    lap = (np.asarray(g(pts + ex))[:, :, 0] - np.asarray(g(pts - ex))[:, :, 0]
           + np.asarray(g(pts + ey))[:, :, 1] - np.asarray(g(pts - ey))[:, :, 1]) / (2 * h)
    gp = np.column_stack([
        (np.asarray(case.pressure(pts + ex)) - np.asarray(case.pressure(pts - ex))) / (2 * h),
        (np.asarray(case.pressure(pts + ey)) - np.asarray(case.pressure(pts - ey))) / (2 * h),
    ])
    res = -case.nu * lap - gp - np.asarray(case.load(pts))
    if not case.stokes:
        res += np.einsum("nrc,nc->nr", np.asarray(g(pts)), np.asarray(case.velocity(pts)))
    return float(np.abs(res).max())


def verify_case(name: str, n: int = 100, seed: int = 1234) -> float:
    return pde_residual(get_case(name), n, seed)


def build_mesh(family: str, n: int, distortion: float = 0.0, seed: int = 0,
               domain: str = "square", lloyd: int = 100) -> PolyMesh:
    """Generator dispatcher shared by the benchmark runner and the CLI."""
    if family == "quad":
        return gen_square_quads(n, distortion, seed)
    if family == "tri":
        return gen_square_triangles(n)
    if family == "web":
        return gen_web_hexagons(n, seed)
    if family == "disk-tri":
        return gen_disk_triangles(n)
    if family == "voronoi":
        n_seeds = int(round(4 * n * n)) if domain == "disk" else n * n
        return gen_voronoi_cvt(domain, n_seeds, lloyd, seed)
    raise ValueError(f"unknown mesh family {family!r}")


def mesh_for_case(case: BenchmarkCase, spec: MeshSpec, n: int) -> PolyMesh:
    return build_mesh(spec.family, n, spec.distortion, spec.seed, domain=case.domain)


# ---------------------------------------------------------------------------
# case definitions
# ---------------------------------------------------------------------------

def _zero_velocity(pts):
    return np.zeros((len(pts), 2))


def _zero_grad(pts):
    return np.zeros((len(pts), 2, 2))


Q_MESHES = (MeshSpec("Q", "quad", (10, 20, 40), distortion=0.3, seed=7),)
U_MESHES = (MeshSpec("U", "quad", (10, 20, 40), distortion=0.5, seed=1),)


register(BenchmarkCase(
    name="test1_p1",
    domain="square", nu=1.0, stokes=True,
    velocity=_zero_velocity, grad=_zero_grad,
    pressure=lambda q: q[:, 0] ** 3 - q[:, 1] ** 3,
    load=lambda q: np.column_stack([-3.0 * q[:, 0] ** 2, 3.0 * q[:, 1] ** 2]),
    meshes=Q_MESHES,
    description="hydrostatic balance, cubic polynomial pressure",
))


register(BenchmarkCase(
    name="test1_p2",
    domain="square", nu=1.0, stokes=True,
    velocity=_zero_velocity, grad=_zero_grad,
    pressure=lambda q: np.sin(TWO_PI * q[:, 0]) * np.sin(TWO_PI * q[:, 1]),
    load=lambda q: np.column_stack([
        -TWO_PI * np.cos(TWO_PI * q[:, 0]) * np.sin(TWO_PI * q[:, 1]),
        -TWO_PI * np.sin(TWO_PI * q[:, 0]) * np.cos(TWO_PI * q[:, 1]),
    ]),
    meshes=Q_MESHES,
    description="hydrostatic balance, trigonometric pressure",
))


def _u1(q):
    return np.column_stack([-q[:, 1], q[:, 0]])


def _grad_u1(q):
    g = np.zeros((len(q), 2, 2))
    g[:, 0, 1] = -1.0
    g[:, 1, 0] = 1.0
    return g


register(BenchmarkCase(
    name="test2_u1",
    domain="disk", nu=1.0, stokes=False,
    velocity=_u1, grad=_grad_u1,
    pressure=lambda q: -(q[:, 0] ** 2 + q[:, 1] ** 2) / 2.0 + 0.25,
    load=_zero_velocity,
    meshes=(MeshSpec("T", "disk-tri", (5, 10, 20)),),
    description="rigid rotation balancing its own convection, zero load",
))


def _u2(q):
    return 3.0 * np.column_stack([q[:, 0] ** 2 - q[:, 1] ** 2,
                                  -2.0 * q[:, 0] * q[:, 1]])


def _grad_u2(q):
    g = np.empty((len(q), 2, 2))
    g[:, 0, 0] = 6.0 * q[:, 0]
    g[:, 0, 1] = -6.0 * q[:, 1]
    g[:, 1, 0] = -6.0 * q[:, 1]
    g[:, 1, 1] = -6.0 * q[:, 0]
    return g


register(BenchmarkCase(
    name="test2_u2",
    domain="disk", nu=1.0, stokes=False,
    velocity=_u2, grad=_grad_u2,
    pressure=lambda q: 4.5 * (q[:, 0] ** 2 + q[:, 1] ** 2) ** 2 - 1.5,
    load=_zero_velocity,
    meshes=(MeshSpec("T", "disk-tri", (5, 10, 20)),),
    description="harmonic quadratic velocity, zero load",
))


# -- test 3: bubble-type velocity, viscosity sweep ---------------------------

def _phi(t):
    return t ** 2 * (1.0 - t) ** 2


def _dphi(t):
    return 2.0 * t - 6.0 * t ** 2 + 4.0 * t ** 3


def _ddphi(t):
    return 2.0 - 12.0 * t + 12.0 * t ** 2


def _dddphi(t):
    return -12.0 + 24.0 * t


def _u3(q):
    x, y = q[:, 0], q[:, 1]
    return 0.1 * np.column_stack([_phi(x) * _dphi(y), -_dphi(x) * _phi(y)])


def _grad_u3(q):
    x, y = q[:, 0], q[:, 1]
    g = np.empty((len(q), 2, 2))
    g[:, 0, 0] = 0.1 * _dphi(x) * _dphi(y)
    g[:, 0, 1] = 0.1 * _phi(x) * _ddphi(y)
    g[:, 1, 0] = -0.1 * _ddphi(x) * _phi(y)
    g[:, 1, 1] = -0.1 * _dphi(x) * _dphi(y)
    return g


def _p3(q):
    return q[:, 0] ** 3 * q[:, 1] ** 3 - 1.0 / 16.0


def _make_load3(nu):
    def load(q):
        x, y = q[:, 0], q[:, 1]
        lap1 = 0.1 * (_ddphi(x) * _dphi(y) + _phi(x) * _dddphi(y))
        lap2 = -0.1 * (_dddphi(x) * _phi(y) + _dphi(x) * _ddphi(y))
        u = _u3(q)
        g = _grad_u3(q)
        conv = np.einsum("nrc,nc->nr", g, u)
        gp = np.column_stack([3.0 * x ** 2 * y ** 3, 3.0 * x ** 3 * y ** 2])
        return np.column_stack([-nu * lap1, -nu * lap2]) + conv - gp
    return load


register(BenchmarkCase(
    name="test3",
    domain="square", nu=0.1, stokes=False,
    velocity=_u3, grad=_grad_u3, pressure=_p3,
    load=_make_load3(0.1),
    meshes=(MeshSpec("T", "tri", (20,)),),
    nu_sweep=(1e-1, 1e-2, 1e-3, 1e-4, 1e-5),
    description="small-velocity bubble flow, robustness in the viscosity",
))


def case_with_nu(case: BenchmarkCase, nu: float) -> BenchmarkCase:
    """Re-derive the viscosity-dependent load of a case for another nu."""
    if case.name.startswith("test3"):
        load = _make_load3(nu)
    elif case.stokes or np.allclose(case.load(_random_points(case, 4)), 0.0):
        load = case.load  # nu-independent (zero-load or velocity-free cases)
    else:
        raise ValueError(f"case {case.name} does not support viscosity override")
    return BenchmarkCase(case.name, case.domain, nu, case.stokes, case.velocity,
                         case.grad, case.pressure, load, case.meshes, case.mode,
                         case.nu_sweep, case.description)


# -- tests 4 and 5: trigonometric vortex field -------------------------------

def _u45(q):
    x, y = q[:, 0], q[:, 1]
    sx, sy = np.sin(TWO_PI * x), np.sin(TWO_PI * y)
    return np.column_stack([
        0.25 * sx ** 2 * np.sin(2 * TWO_PI * y),
        -0.25 * sy ** 2 * np.sin(2 * TWO_PI * x),
    ])


def _grad_u45(q):
    x, y = q[:, 0], q[:, 1]
    sx, sy = np.sin(TWO_PI * x), np.sin(TWO_PI * y)
    s4x, s4y = np.sin(2 * TWO_PI * x), np.sin(2 * TWO_PI * y)
    c4x, c4y = np.cos(2 * TWO_PI * x), np.cos(2 * TWO_PI * y)
    g = np.empty((len(q), 2, 2))
    g[:, 0, 0] = 0.5 * np.pi * s4x * s4y
    g[:, 0, 1] = np.pi * sx ** 2 * c4y
    g[:, 1, 0] = -np.pi * sy ** 2 * c4x
    g[:, 1, 1] = -0.5 * np.pi * s4y * s4x
    return g


def _lap_u45(q):
    x, y = q[:, 0], q[:, 1]
    sx, sy = np.sin(TWO_PI * x), np.sin(TWO_PI * y)
    s4x, s4y = np.sin(2 * TWO_PI * x), np.sin(2 * TWO_PI * y)
    c4x, c4y = np.cos(2 * TWO_PI * x), np.cos(2 * TWO_PI * y)
    return np.column_stack([
        2.0 * np.pi ** 2 * c4x * s4y - 4.0 * np.pi ** 2 * sx ** 2 * s4y,
        -2.0 * np.pi ** 2 * c4y * s4x + 4.0 * np.pi ** 2 * sy ** 2 * s4x,
    ])


def _make_load4(nu):
    def load(q):
        x, y = q[:, 0], q[:, 1]
        conv = np.einsum("nrc,nc->nr", _grad_u45(q), _u45(q))
        gp = np.pi ** 2 * TWO_PI * np.column_stack([
            np.cos(TWO_PI * x) * np.cos(TWO_PI * y),
            -np.sin(TWO_PI * x) * np.sin(TWO_PI * y),
        ])
        return -nu * _lap_u45(q) + conv - gp
    return load


register(BenchmarkCase(
    name="test4",
    domain="square", nu=0.1, stokes=False,
    velocity=_u45, grad=_grad_u45,
    pressure=lambda q: np.pi ** 2 * np.sin(TWO_PI * q[:, 0]) * np.cos(TWO_PI * q[:, 1]),
    load=_make_load4(0.1),
    meshes=(MeshSpec("T", "tri", (5, 10, 20)),
            MeshSpec("W", "web", (5, 10, 20), seed=3)),
    description="trigonometric vortex array, Navier-Stokes rates",
))


def _load5(q):
    x, y = q[:, 0], q[:, 1]
    gp = TWO_PI * np.column_stack([
        np.cos(TWO_PI * x) * np.cos(TWO_PI * y),
        -np.sin(TWO_PI * x) * np.sin(TWO_PI * y),
    ])
    return -_lap_u45(q) - gp


register(BenchmarkCase(
    name="test5",
    domain="square", nu=1.0, stokes=True,
    velocity=_u45, grad=_grad_u45,
    pressure=lambda q: np.sin(TWO_PI * q[:, 0]) * np.cos(TWO_PI * q[:, 1]),
    load=_load5,
    meshes=Q_MESHES + U_MESHES,
    description="Stokes vortex array, distortion robustness",
))
