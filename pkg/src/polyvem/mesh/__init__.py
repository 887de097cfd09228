from .core import CellGeometry, MeshError, PolyMesh, QualityReport, cell_geometry, mesh_quality
from .generators import (
    gen_disk_triangles,
    gen_square_quads,
    gen_square_triangles,
    gen_voronoi_cvt,
    gen_web_hexagons,
)
from .meshio import MeshFormatError, read_mesh, write_mesh

__all__ = [
    "CellGeometry",
    "MeshError",
    "MeshFormatError",
    "PolyMesh",
    "QualityReport",
    "cell_geometry",
    "gen_disk_triangles",
    "gen_square_quads",
    "gen_square_triangles",
    "gen_voronoi_cvt",
    "gen_web_hexagons",
    "mesh_quality",
    "read_mesh",
    "write_mesh",
]
