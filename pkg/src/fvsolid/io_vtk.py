"""Legacy ASCII VTK output of cell-centred fields.

2D cells are written as polygons (vertex rings chained from their edges),
3D cells as polyhedra with an explicit face stream, both straight from
the face-addressed mesh.  All fields live on cells: scalars for (Nc,)
arrays, vectors for (Nc, 3), tensors for (Nc, 3, 3).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import Mesh, MeshError

__all__ = ["write_vtk"]

_POLYGON = 7
_POLYHEDRON = 42


def _polygon_ring(edges: list[np.ndarray]) -> list[int]:
    """Order a cell's edges into a closed vertex ring."""
    link: dict[int, list[int]] = {}
    for a, b in edges:
        link.setdefault(int(a), []).append(int(b))
        link.setdefault(int(b), []).append(int(a))
    start = min(link)
    ring = [start]
    prev = -1
    while True:
        nxt = [v for v in link[ring[-1]] if v != prev]
        if not nxt:
            raise MeshError("cell edges do not close into a ring")
        prev, cur = ring[-1], nxt[0]
        if cur == start:
            break
        ring.append(cur)
        if len(ring) > len(edges):
            raise MeshError("cell edges do not close into a ring")
    if len(ring) != len(edges):
        raise MeshError("cell edges do not close into a ring")
    return ring


def _cell_faces(mesh: Mesh) -> list[list[int]]:
    table: list[list[int]] = [[] for _ in range(mesh.n_cells)]
    for f, (o, n) in enumerate(zip(mesh.owner, mesh.neighbour)):
        table[o].append(f)
        if n >= 0:
            table[n].append(f)
    return table


def _cell_entries(mesh: Mesh) -> tuple[list[list[int]], int]:
    entries = []
    for cfaces in _cell_faces(mesh):
        if mesh.dim == 2:
            ring = _polygon_ring([mesh.face(f) for f in cfaces])
            entries.append([len(ring), *ring])
        else:
            stream = [len(cfaces)]
            for f in cfaces:
                verts = mesh.face(f)
                stream.append(len(verts))
                stream.extend(int(v) for v in verts)
            entries.append([len(stream), *stream])
    ctype = _POLYGON if mesh.dim == 2 else _POLYHEDRON
    return entries, ctype


def _fmt_row(row: np.ndarray) -> str:
    return " ".join(f"{v:.10e}" for v in row)


def write_vtk(
    path: str | Path,
    mesh: Mesh,
    cell_data: dict[str, np.ndarray] | None = None,
    *,
    title: str = "fvsolid fields",
) -> None:
    """Write the mesh and optional cell-centred fields as legacy ASCII VTK."""
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(mesh.points)} double",
    ]
    lines.extend(_fmt_row(p) for p in mesh.points)

    entries, ctype = _cell_entries(mesh)
    total = sum(len(e) for e in entries)
    lines.append(f"CELLS {mesh.n_cells} {total}")
    lines.extend(" ".join(str(v) for v in e) for e in entries)
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines.extend(str(ctype) for _ in range(mesh.n_cells))

    if cell_data:
        lines.append(f"CELL_DATA {mesh.n_cells}")
        for name, arr in cell_data.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape == (mesh.n_cells,):
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(f"{v:.10e}" for v in arr)
            elif arr.shape == (mesh.n_cells, 3):
                lines.append(f"VECTORS {name} double")
                lines.extend(_fmt_row(r) for r in arr)
            elif arr.shape == (mesh.n_cells, 3, 3):
                lines.append(f"TENSORS {name} double")
                lines.extend(_fmt_row(r.ravel()) for r in arr)
            else:
                raise ValueError(
                    f"field '{name}' has shape {arr.shape}; expected "
                    f"({mesh.n_cells},), ({mesh.n_cells}, 3) or ({mesh.n_cells}, 3, 3)"
                )
    Path(path).write_text("\n".join(lines) + "\n")
