"""Polygonal mesh data model, validity checks and shape-quality diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..polyquad import cross2, polygon_centroid, quad_rule, signed_area


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class CellGeometry:
    centroid: np.ndarray
    diameter: float
    area: float
    edge_lengths: np.ndarray
    edge_normals: np.ndarray  # outward unit normals, one per edge
    edge_tangents: np.ndarray


def cell_geometry(verts: np.ndarray) -> CellGeometry:
    verts = np.asarray(verts, dtype=float)
    centroid, area = polygon_centroid(verts)
    if area <= 0:
        raise MeshError("cell has non-positive area or clockwise orientation")
    d = verts[:, None, :] - verts[None, :, :]
    diameter = float(np.sqrt((d ** 2).sum(-1)).max())
    edge_vec = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(edge_vec, axis=1)
    if (lengths <= 0).any():
        raise MeshError("cell has a zero-length edge")
    tangents = edge_vec / lengths[:, None]
    # CCW polygon: outward normal is the clockwise rotation of the tangent
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])
    return CellGeometry(centroid, diameter, area, lengths, normals, tangents)


def _segments_intersect(p1, p2, p3, p4, eps=1e-14):
    """Proper or touching intersection of open segments p1p2 and p3p4."""
    d1 = cross2(p2 - p1, p3 - p1)
    d2 = cross2(p2 - p1, p4 - p1)
    d3 = cross2(p4 - p3, p1 - p3)
    d4 = cross2(p4 - p3, p2 - p3)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and \
       ((d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)):
        return True
    return False


def is_simple_polygon(verts: np.ndarray) -> bool:
    verts = np.asarray(verts, dtype=float)
    n = len(verts)
    if n < 3:
        return False
    for i in range(n):
        a1, a2 = verts[i], verts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared endpoint
            b1, b2 = verts[j], verts[(j + 1) % n]
            if _segments_intersect(a1, a2, b1, b2):
                return False
    return True


class PolyMesh:
    """Immutable polygonal mesh: vertices, CCW cells and derived edge topology.

    Construction validates the structural invariants: every cell a simple CCW
    polygon with positive area, every interior edge shared by exactly two
    cells and every boundary edge by one.
    """

    def __init__(self, vertices, cells, domain_tag: str = "custom", validate: bool = True):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        self.cells = [np.asarray(c, dtype=int) for c in cells]
        self.domain_tag = domain_tag
        if validate:
            self._validate_cells()
        self._build_edges()
        self.vertices.flags.writeable = False
        for c in self.cells:
            c.flags.writeable = False

    # -- derived sizes --------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def cell_coords(self, i: int) -> np.ndarray:
        return self.vertices[self.cells[i]]

    def geometry(self, i: int) -> CellGeometry:
        return cell_geometry(self.cell_coords(i))

    def mesh_size(self) -> float:
        return max(self.geometry(i).diameter for i in range(self.n_cells))

    def total_area(self) -> float:
        return sum(signed_area(self.cell_coords(i)) for i in range(self.n_cells))

    # -- validation / topology -------------------------------------------
    def _validate_cells(self):
        nv = self.n_vertices
        for ci, cell in enumerate(self.cells):
            if len(cell) < 3:
                raise MeshError(f"cell {ci}: fewer than 3 vertices")
            if (cell < 0).any() or (cell >= nv).any():
                bad = cell[(cell < 0) | (cell >= nv)][0]
                raise MeshError(f"cell {ci}: vertex index {bad} out of range")
            if len(np.unique(cell)) != len(cell):
                raise MeshError(f"cell {ci}: repeated vertex index")
            coords = self.vertices[cell]
            if signed_area(coords) <= 0:
                raise MeshError(f"cell {ci}: non-positive area (clockwise or degenerate)")
            if not is_simple_polygon(coords):
                raise MeshError(f"cell {ci}: self-intersecting polygon")

    def _build_edges(self):
        edge_ids: dict[tuple[int, int], int] = {}
        edges = []
        edge_cells = []
        cell_edges = []
        for ci, cell in enumerate(self.cells):
            eids = np.empty(len(cell), dtype=int)
            for j in range(len(cell)):
                a, b = int(cell[j]), int(cell[(j + 1) % len(cell)])
                key = (a, b) if a < b else (b, a)
                if key not in edge_ids:
                    edge_ids[key] = len(edges)
                    edges.append(key)
                    edge_cells.append([ci, -1])
                else:
                    e = edge_ids[key]
                    if edge_cells[e][1] != -1:
                        raise MeshError(f"edge {key} shared by more than two cells")
                    edge_cells[e][1] = ci
                eids[j] = edge_ids[key]
            cell_edges.append(eids)
        self.edges = np.array(edges, dtype=int).reshape(-1, 2)
        self.edge_cells = np.array(edge_cells, dtype=int).reshape(-1, 2)
        self.cell_edges = cell_edges
        self.boundary_edge = self.edge_cells[:, 1] == -1
        self.boundary_vertex = np.zeros(self.n_vertices, dtype=bool)
        if self.boundary_edge.any():
            self.boundary_vertex[self.edges[self.boundary_edge].ravel()] = True
        for arr in (self.edges, self.edge_cells, self.boundary_edge, self.boundary_vertex):
            arr.flags.writeable = False


# ---------------------------------------------------------------------------
# quality diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QualityReport:
    star_ratio: np.ndarray       # inscribed-ball-radius proxy / h_E, per cell
    separation_ratio: np.ndarray  # min vertex distance / h_E, per cell
    min_star_ratio: float
    min_separation_ratio: float


def _point_segment_distance(p, a, b):
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def _min_boundary_distance(p, verts):
    n = len(verts)
    return min(_point_segment_distance(p, verts[i], verts[(i + 1) % n]) for i in range(n))


def _in_kernel(p, verts, tol):
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if cross2(b - a, p - a) < tol:
            return False
    return True


def mesh_quality(mesh: PolyMesh) -> QualityReport:
    """Per-cell proxies for the star-shapedness and vertex-separation assumptions.

    The star proxy is the radius of the largest boundary-clear circle centered
    at the centroid; when the centroid is outside the kernel (non-convex cells)
    the kernel is sampled at sub-triangulation quadrature points instead.
    """
    star = np.empty(mesh.n_cells)
    sep = np.empty(mesh.n_cells)
    for i in range(mesh.n_cells):
        verts = mesh.cell_coords(i)
        geo = mesh.geometry(i)
        tol = 1e-12 * geo.diameter ** 2
        if _in_kernel(geo.centroid, verts, tol):
            r = _min_boundary_distance(geo.centroid, verts)
        else:
            rule = quad_rule(verts, 2, refine=1)
            candidates = [q for q in rule.points if _in_kernel(q, verts, tol)]
            r = max((_min_boundary_distance(q, verts) for q in candidates), default=0.0)
        star[i] = r / geo.diameter
        d = verts[:, None, :] - verts[None, :, :]
        dist = np.sqrt((d ** 2).sum(-1))
        sep[i] = dist[np.triu_indices(len(verts), 1)].min() / geo.diameter
    return QualityReport(star, sep, float(star.min()), float(sep.min()))
