"""Mesh family generators: distorted quads, triangles, WEB hexagons, CVT Voronoi, disk.

All randomness goes through numpy's PCG64 (`np.random.default_rng(seed)`), so a
(parameters, seed) pair reproduces a bit-identical mesh.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import Voronoi

from ..polyquad import polygon_centroid, signed_area
from .core import MeshError, PolyMesh, is_simple_polygon


def gen_square_quads(n: int, distortion: float = 0.0, seed: int = 0) -> PolyMesh:
    """n x n quadrilateral mesh of [0,1]^2 with randomly displaced interior vertices.

    Each interior vertex moves by a per-coordinate uniform draw of magnitude
    <= distortion/(2n); boundary vertices stay fixed.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0.0 <= distortion < 1.0:
        raise ValueError("distortion must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    interior = [vid(i, j) for i in range(1, n) for j in range(1, n)]
    delta = distortion / (2.0 * n)
    if delta > 0:
        verts[interior] += rng.uniform(-delta, delta, (len(interior), 2))

    cells = [
        [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
        for i in range(n)
        for j in range(n)
    ]

    # distortion < 1 keeps the displaced corners in disjoint boxes, so cells
    # stay simple; the retry sweep guards the boundary of that regime
    for _ in range(100):
        bad = [c for c in cells if not is_simple_polygon(verts[np.asarray(c)])]
        if not bad:
            break
        for c in bad:
            for v in c:
                if v in interior:
                    i, j = divmod(v, n + 1)
                    verts[v] = np.array([xs[i], xs[j]]) + rng.uniform(-delta, delta, 2)
    else:
        raise MeshError("could not produce simple quadrilaterals")
    return PolyMesh(verts, cells, domain_tag="square")


def gen_square_triangles(n: int) -> PolyMesh:
    """Structured triangulation of [0,1]^2: each of n^2 squares split by a diagonal."""
    if n < 1:
        raise ValueError("need n >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    cells = []
    for i in range(n):
        for j in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            cells.append([v00, v10, v11])
            cells.append([v00, v11, v01])
    return PolyMesh(verts, cells, domain_tag="square")


def gen_web_hexagons(n: int, seed: int = 0) -> PolyMesh:
    """Non-convex hexagonal mesh: triangle edge midpoints, interior ones displaced.

    Every triangle of the structured n-triangulation becomes a hexagon whose
    extra vertices are the edge midpoints; each non-boundary midpoint moves by
    a random vector of magnitude <= 0.2 x edge length (shared consistently by
    both neighbor cells).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    base = gen_square_triangles(n)
    rng = np.random.default_rng(seed)

    nv = base.n_vertices
    mid_id = nv + np.arange(base.n_edges)
    everts = base.vertices[base.edges]
    midpoints = everts.mean(axis=1)
    elen = np.linalg.norm(everts[:, 1] - everts[:, 0], axis=1)

    def draw(e):
        r = 0.2 * elen[e] * np.sqrt(rng.uniform())
        th = rng.uniform(0.0, 2.0 * np.pi)
        return midpoints[e] + r * np.array([np.cos(th), np.sin(th)])

    coords = np.vstack([base.vertices, midpoints])
    interior_edges = np.flatnonzero(~base.boundary_edge)
    for e in interior_edges:
        coords[mid_id[e]] = draw(e)

    cells = []
    for ci, tri in enumerate(base.cells):
        eids = base.cell_edges[ci]
        hexa = []
        for j in range(3):
            hexa.append(int(tri[j]))
            hexa.append(int(mid_id[eids[j]]))
        cells.append(hexa)

    edge_of_mid = {int(mid_id[e]): e for e in interior_edges}
    for _ in range(100):
        bad = [c for c in cells if not is_simple_polygon(coords[np.asarray(c)])]
        if not bad:
            break
        for c in bad:
            for v in c:
                if v in edge_of_mid:
                    coords[v] = draw(edge_of_mid[v])
    else:
        raise MeshError("could not produce simple hexagons")
    return PolyMesh(coords, cells, domain_tag="square")


def gen_disk_triangles(n: int) -> PolyMesh:
    """Polar-structured triangulation of the unit disk, ~1/n target edge length.

    Ring i of n carries 6i equispaced vertices at radius i/n; boundary vertices
    sit exactly on the unit circle. Rings are stitched by an angular two-pointer
    sweep, giving 6n^2 well-shaped triangles.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    verts = [np.array([0.0, 0.0])]
    rings = [[0]]
    for i in range(1, n + 1):
        m = 6 * i
        ang = 2.0 * np.pi * np.arange(m) / m
        r = i / n
        ids = list(range(len(verts), len(verts) + m))
        verts.extend(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
        rings.append(ids)
    verts = np.asarray(verts)

    cells = []
    ring1 = rings[1]
    for j in range(6):
        cells.append([0, ring1[j], ring1[(j + 1) % 6]])
    for i in range(1, n):
        A, B = rings[i], rings[i + 1]
        na, nb = len(A), len(B)
        a = b = 0
        while a < na or b < nb:
            next_a = (a + 1) / na if a < na else np.inf
            next_b = (b + 1) / nb if b < nb else np.inf
            if next_b <= next_a:
                cells.append([A[a % na], B[b % nb], B[(b + 1) % nb]])
                b += 1
            else:
                cells.append([A[a % na], B[b % nb], A[(a + 1) % na]])
                a += 1
    return PolyMesh(verts, cells, domain_tag="disk")


# ---------------------------------------------------------------------------
# Lloyd-relaxed clipped Voronoi
# ---------------------------------------------------------------------------

def _mirror_seeds(seeds: np.ndarray, domain: str) -> np.ndarray:
    if domain == "square":
        m = [seeds.copy() for _ in range(4)]
        m[0][:, 0] = -m[0][:, 0]
        m[1][:, 0] = 2.0 - m[1][:, 0]
        m[2][:, 1] = -m[2][:, 1]
        m[3][:, 1] = 2.0 - m[3][:, 1]
        return np.vstack(m)
    r = np.linalg.norm(seeds, axis=1, keepdims=True)
    r = np.maximum(r, 1e-12)
    return seeds / r * (2.0 - r)


def _voronoi_cells(seeds: np.ndarray, domain: str):
    """Bounded Voronoi cells of the seeds, obtained by boundary mirroring."""
    allpts = np.vstack([seeds, _mirror_seeds(seeds, domain)])
    vor = Voronoi(allpts)
    polys = []
    for s in range(len(seeds)):
        region = vor.regions[vor.point_region[s]]
        if -1 in region or len(region) < 3:
            raise MeshError("unbounded Voronoi region; seed mirroring failed")
        pts = vor.vertices[region]
        ang = np.arctan2(pts[:, 1] - seeds[s, 1], pts[:, 0] - seeds[s, 0])
        order = np.argsort(ang)
        polys.append([region[o] for o in order])
    return vor.vertices, polys


def _collapse_short_edges(coords: np.ndarray, cells, tol: float):
    """Merge vertex clusters closer than tol (union-find); dedupe cell rings."""
    parent = list(range(len(coords)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for cell in cells:
        for j in range(len(cell)):
            a, b = cell[j], cell[(j + 1) % len(cell)]
            if np.linalg.norm(coords[a] - coords[b]) < tol:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra
    clusters: dict[int, list[int]] = {}
    for v in range(len(coords)):
        clusters.setdefault(find(v), []).append(v)
    new_id = {}
    new_coords = []
    for root, members in clusters.items():
        for v in members:
            new_id[v] = len(new_coords)
        new_coords.append(coords[members].mean(axis=0))
    new_cells = []
    for cell in cells:
        ring = []
        for v in cell:
            nv = new_id[v]
            if not ring or ring[-1] != nv:
                ring.append(nv)
        if len(ring) > 1 and ring[0] == ring[-1]:
            ring.pop()
        new_cells.append(ring)
    return np.asarray(new_coords), new_cells


def _assemble_voronoi_mesh(vertices: np.ndarray, polys, domain: str) -> PolyMesh:
    used = sorted({v for poly in polys for v in poly})
    remap = {v: i for i, v in enumerate(used)}
    coords = vertices[used].copy()
    if domain == "square":
        snap = 1e-9
        for ax in (0, 1):
            coords[np.abs(coords[:, ax]) < snap, ax] = 0.0
            coords[np.abs(coords[:, ax] - 1.0) < snap, ax] = 1.0
    cells = [[remap[v] for v in poly] for poly in polys]
    mean_area = abs(sum(signed_area(coords[np.asarray(c)]) for c in cells)) / len(cells)
    # qhull leaves near-degenerate corners on cocircular seed patterns; collapse
    # them like Polymesher does, backing off if a merge breaks a cell
    for frac in (0.05, 0.02, 0.0):
        try:
            if frac > 0:
                cc, cl = _collapse_short_edges(coords, cells, frac * np.sqrt(mean_area))
            else:
                cc, cl = coords, cells
            return PolyMesh(cc, cl, domain_tag=domain)
        except MeshError:
            continue
    raise MeshError("Voronoi mesh assembly failed")


def gen_voronoi_cvt(domain: str, n_seeds: int, lloyd_iters: int = 0,
                    seed: int = 0, seeds: np.ndarray | None = None) -> PolyMesh:
    """Clipped Voronoi mesh after `lloyd_iters` centroidal relaxation sweeps.

    `seeds` overrides the random initialization (used for reproducing
    symmetric configurations); duplicates are re-jittered.
    """
    if domain not in ("square", "disk"):
        raise ValueError("domain must be 'square' or 'disk'")
    if n_seeds < 4:
        raise ValueError("need at least 4 seeds")
    rng = np.random.default_rng(seed)
    if seeds is None:
        if domain == "square":
            seeds = rng.uniform(0.0, 1.0, (n_seeds, 2))
        else:
            r = np.sqrt(rng.uniform(0.0, 1.0, n_seeds))
            th = rng.uniform(0.0, 2.0 * np.pi, n_seeds)
            seeds = np.column_stack([r * np.cos(th), r * np.sin(th)])
    else:
        seeds = np.asarray(seeds, dtype=float).copy()
        if len(seeds) != n_seeds:
            raise ValueError("len(seeds) must equal n_seeds")

    for _ in range(100):
        d = seeds[:, None, :] - seeds[None, :, :]
        dist = np.sqrt((d ** 2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        dup = np.unique(np.argwhere(dist < 1e-9)[:, 0])
        if len(dup) == 0:
            break
        seeds[dup] += rng.uniform(-1e-6, 1e-6, (len(dup), 2))
    else:
        raise MeshError("could not separate duplicate seeds")

    for sweep in range(lloyd_iters + 1):
        vertices, polys = _voronoi_cells(seeds, domain)
        if sweep == lloyd_iters:
            break
        seeds = np.array([polygon_centroid(vertices[p])[0] for p in polys])
    return _assemble_voronoi_mesh(vertices, polys, domain)
