"""Text serialization of polygonal meshes.

Format (`polyvem-mesh v1`):

    polyvem-mesh v1
    vertices N
    x y          (N lines, full float precision)
    cells M
    k i1 ... ik  (M lines, 0-based CCW vertex indices)
"""

from __future__ import annotations

import warnings

import numpy as np

from ..polyquad import signed_area
from .core import PolyMesh

HEADER = "polyvem-mesh v1"


class MeshFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def write_mesh(mesh: PolyMesh, path) -> None:
    with open(path, "w") as f:
        f.write(HEADER + "\n")
        f.write(f"vertices {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        f.write(f"cells {mesh.n_cells}\n")
        for cell in mesh.cells:
            f.write(" ".join([str(len(cell))] + [str(int(v)) for v in cell]) + "\n")


def read_mesh(path) -> PolyMesh:
    with open(path) as f:
        lines = f.read().splitlines()

    def get(lineno):
        if lineno > len(lines):
            raise MeshFormatError(lineno, "unexpected end of file")
        return lines[lineno - 1].strip()

    if get(1) != HEADER:
        raise MeshFormatError(1, f"expected header '{HEADER}'")
    parts = get(2).split()
    if len(parts) != 2 or parts[0] != "vertices":
        raise MeshFormatError(2, "expected 'vertices N'")
    try:
        nv = int(parts[1])
    except ValueError:
        raise MeshFormatError(2, f"bad vertex count {parts[1]!r}") from None

    verts = np.empty((nv, 2))
    for i in range(nv):
        lineno = 3 + i
        parts = get(lineno).split()
        if len(parts) != 2:
            raise MeshFormatError(lineno, "expected 'x y'")
        try:
            verts[i] = [float(parts[0]), float(parts[1])]
        except ValueError:
            raise MeshFormatError(lineno, f"bad coordinate in {parts!r}") from None

    lineno = 3 + nv
    parts = get(lineno).split()
    if len(parts) != 2 or parts[0] != "cells":
        raise MeshFormatError(lineno, "expected 'cells M'")
    try:
        nc = int(parts[1])
    except ValueError:
        raise MeshFormatError(lineno, f"bad cell count {parts[1]!r}") from None

    cells = []
    for c in range(nc):
        lineno = 4 + nv + c
        parts = get(lineno).split()
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise MeshFormatError(lineno, f"bad cell line {get(lineno)!r}") from None
        if not vals or len(vals) != vals[0] + 1:
            raise MeshFormatError(lineno, "expected 'k i1 ... ik'")
        cell = vals[1:]
        if len(cell) < 3:
            raise MeshFormatError(lineno, f"cell {c}: fewer than 3 vertices")
        for v in cell:
            if v < 0 or v >= nv:
                raise MeshFormatError(lineno, f"cell {c}: vertex index {v} out of range")
        if signed_area(verts[np.asarray(cell)]) < 0:
            warnings.warn(f"cell {c}: clockwise orientation fixed", stacklevel=2)
            cell = cell[::-1]
        cells.append(cell)
    return PolyMesh(verts, cells)
