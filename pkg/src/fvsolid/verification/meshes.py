"""Structured mesh generators for the benchmark problems.

All generators return a `Mesh` with named boundary patches.  Patch kinds
default to traction; pass ``kinds={"left": "displacement", ...}`` to
override per patch.  Names not listed keep the default.
"""

from __future__ import annotations

import numpy as np

from ..mesh import BoundaryKind, Mesh, MeshError, Patch

__all__ = [
    "mesh_from_cells",
    "rectangle_quads",
    "rectangle_tris",
    "box_hexes",
    "box_tets",
    "perturb",
    "quarter_annulus",
    "plate_with_hole",
]

# local face tables keyed by (dim, vertex count); vertex orderings follow the
# gmsh convention so the same tables serve generated and imported cells
_FACE_TABLES = {
    (2, 3): ((0, 1), (1, 2), (2, 0)),
    (2, 4): ((0, 1), (1, 2), (2, 3), (3, 0)),
    (3, 4): ((0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)),
    (3, 8): (
        (0, 3, 2, 1),
        (4, 5, 6, 7),
        (0, 1, 5, 4),
        (1, 2, 6, 5),
        (2, 3, 7, 6),
        (3, 0, 4, 7),
    ),
}


def mesh_from_cells(dim, points, cells, classify, kinds) -> Mesh:
    """Assemble a face-addressed mesh from cell vertex lists.

    `classify(centroid) -> str` names the patch of each boundary face; the
    patch order follows the key order of `kinds` (name -> kind string).
    """
    points = np.asarray(points, dtype=float)
    if points.shape[1] == 2:
        points = np.column_stack([points, np.zeros(len(points))])
    face_map: dict[tuple, list] = {}
    keys_in_order: list[tuple] = []
    for ci, vs in enumerate(cells):
        for lf in _FACE_TABLES[(dim, len(vs))]:
            fv = [vs[k] for k in lf]
            key = tuple(sorted(fv))
            entry = face_map.get(key)
            if entry is None:
                face_map[key] = [ci, -1, fv]
                keys_in_order.append(key)
            else:
                if entry[1] != -1:
                    raise MeshError(f"face {key} shared by more than two cells")
                entry[1] = ci

    internal, boundary = [], []
    for key in keys_in_order:
        own, nb, fv = face_map[key]
        if nb >= 0:
            internal.append((own, nb, fv))
        else:
            fc = points[list(key)].mean(axis=0)
            name = classify(fc)
            if name not in kinds:
                raise MeshError(f"classifier returned unknown patch '{name}' at {fc}")
            boundary.append((name, own, fv))

    patch_names = list(kinds)
    boundary.sort(key=lambda t: patch_names.index(t[0]))

    offsets, verts, owner, neigh = [0], [], [], []
    for own, nb, fv in internal:
        verts.extend(fv)
        offsets.append(len(verts))
        owner.append(own)
        neigh.append(nb)
    patches = []
    for name in patch_names:
        start = len(owner)
        for bname, own, fv in boundary:
            if bname != name:
                continue
            verts.extend(fv)
            offsets.append(len(verts))
            owner.append(own)
            neigh.append(-1)
        count = len(owner) - start
        if count:
            patches.append(Patch(name, BoundaryKind.parse(kinds[name]), start, count))

    return Mesh(
        dim,
        points,
        np.array(offsets, dtype=np.int64),
        np.array(verts, dtype=np.int64),
        np.array(owner, dtype=np.int64),
        np.array(neigh, dtype=np.int64),
        patches,
    )


def _side_kinds(names, kinds):
    table = {n: "traction" for n in names}
    if kinds:
        for name, kind in kinds.items():
            if name not in table:
                raise MeshError(f"unknown patch name '{name}' (have {sorted(table)})")
            table[name] = kind
    return table


def _subdivisions(**counts):
    for name, n in counts.items():
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise MeshError(f"{name} must be a positive integer, got {n!r}")


def _rect_points_cells(nx, ny, lx, ly, x0, y0):
    _subdivisions(nx=nx, ny=ny)
    xs = x0 + lx * np.arange(nx + 1) / nx
    ys = y0 + ly * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    points = np.column_stack([X.ravel(), Y.ravel()])

    def pid(i, j):
        return i * (ny + 1) + j

    quads = [
        (pid(i, j), pid(i + 1, j), pid(i + 1, j + 1), pid(i, j + 1))
        for i in range(nx)
        for j in range(ny)
    ]
    return points, quads


def _rect_classifier(lx, ly, x0, y0):
    tol = 1e-9 * max(lx, ly)

    def classify(fc):
        if abs(fc[0] - x0) < tol:
            return "left"
        if abs(fc[0] - (x0 + lx)) < tol:
            return "right"
        if abs(fc[1] - y0) < tol:
            return "bottom"
        return "top"

    return classify


def rectangle_quads(nx, ny, *, lx=1.0, ly=1.0, x0=0.0, y0=0.0, kinds=None) -> Mesh:
    """Structured quadrilateral mesh of an axis-aligned rectangle."""
    points, quads = _rect_points_cells(nx, ny, lx, ly, x0, y0)
    table = _side_kinds(("left", "right", "bottom", "top"), kinds)
    return mesh_from_cells(2, points, quads, _rect_classifier(lx, ly, x0, y0), table)


def rectangle_tris(nx, ny, *, lx=1.0, ly=1.0, x0=0.0, y0=0.0, kinds=None) -> Mesh:
    """Structured triangle mesh (each quad split along a consistent diagonal)."""
    points, quads = _rect_points_cells(nx, ny, lx, ly, x0, y0)
    tris = []
    for a, b, c, d in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    table = _side_kinds(("left", "right", "bottom", "top"), kinds)
    return mesh_from_cells(2, points, tris, _rect_classifier(lx, ly, x0, y0), table)


def _box_points(nx, ny, nz, lx, ly, lz, origin):
    _subdivisions(nx=nx, ny=ny, nz=nz)
    xs = origin[0] + lx * np.arange(nx + 1) / nx
    ys = origin[1] + ly * np.arange(ny + 1) / ny
    zs = origin[2] + lz * np.arange(nz + 1) / nz
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    points = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def pid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    return points, pid


def _box_classifier(lx, ly, lz, origin):
    tol = 1e-9 * max(lx, ly, lz)
    x0, y0, z0 = origin

    def classify(fc):
        if abs(fc[0] - x0) < tol:
            return "xmin"
        if abs(fc[0] - (x0 + lx)) < tol:
            return "xmax"
        if abs(fc[1] - y0) < tol:
            return "ymin"
        if abs(fc[1] - (y0 + ly)) < tol:
            return "ymax"
        if abs(fc[2] - z0) < tol:
            return "zmin"
        return "zmax"

    return classify


_BOX_SIDES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")


def box_hexes(nx, ny, nz, *, lx=1.0, ly=1.0, lz=1.0, origin=(0.0, 0.0, 0.0), kinds=None) -> Mesh:
    """Structured hexahedral mesh of an axis-aligned box."""
    points, pid = _box_points(nx, ny, nz, lx, ly, lz, origin)
    cells = [
        (
            pid(i, j, k),
            pid(i + 1, j, k),
            pid(i + 1, j + 1, k),
            pid(i, j + 1, k),
            pid(i, j, k + 1),
            pid(i + 1, j, k + 1),
            pid(i + 1, j + 1, k + 1),
            pid(i, j + 1, k + 1),
        )
        for i in range(nx)
        for j in range(ny)
        for k in range(nz)
    ]
    table = _side_kinds(_BOX_SIDES, kinds)
    return mesh_from_cells(3, points, cells, _box_classifier(lx, ly, lz, origin), table)


# six-tetrahedra split of the unit cube sharing the (000)-(111) diagonal;
# the split is translation invariant, so neighbouring cubes conform
_KUHN_PATHS = (
    (0, 1, 2),
    (0, 2, 1),
    (1, 0, 2),
    (1, 2, 0),
    (2, 0, 1),
    (2, 1, 0),
)


def box_tets(nx, ny, nz, *, lx=1.0, ly=1.0, lz=1.0, origin=(0.0, 0.0, 0.0), kinds=None) -> Mesh:
    """Structured tetrahedral mesh (each cube split into six tetrahedra)."""
    points, pid = _box_points(nx, ny, nz, lx, ly, lz, origin)
    cells = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                base = np.array([i, j, k])
                for path in _KUHN_PATHS:
                    corner = base.copy()
                    tet = [pid(*corner)]
                    for axis in path:
                        corner[axis] += 1
                        tet.append(pid(*corner))
                    cells.append(tuple(tet))
    # enforce positive orientation for the local face tables
    pts = points
    fixed = []
    for a, b, c, d in cells:
        det = np.dot(np.cross(pts[b] - pts[a], pts[c] - pts[a]), pts[d] - pts[a])
        fixed.append((a, b, c, d) if det > 0 else (a, c, b, d))
    table = _side_kinds(_BOX_SIDES, kinds)
    return mesh_from_cells(3, points, fixed, _box_classifier(lx, ly, lz, origin), table)


def perturb(mesh: Mesh, amplitude: float, seed: int) -> Mesh:
    """Randomly displace interior vertices by up to amplitude x min edge length.

    Boundary vertices stay fixed, so patch geometry is preserved.  Amplitudes
    up to about 0.25 keep structured cells convex.
    """
    rng = np.random.default_rng(seed)
    pts = mesh.points.copy()

    # min edge length over all faces (consecutive vertex pairs)
    h = np.inf
    for f in range(mesh.n_faces):
        vs = mesh.face(f)
        nxt = np.roll(vs, -1) if mesh.dim == 3 else vs[::-1]
        seg = np.linalg.norm(pts[vs] - pts[nxt], axis=1)
        if mesh.dim == 2:
            seg = seg[:1]
        h = min(h, seg.min())

    n_int = mesh.n_internal_faces
    boundary_verts = np.unique(mesh.face_vertices[mesh.face_offsets[n_int] :])
    interior = np.ones(len(pts), dtype=bool)
    interior[boundary_verts] = False

    shift = rng.uniform(-amplitude * h, amplitude * h, size=(len(pts), 3))
    if mesh.dim == 2:
        shift[:, 2] = 0.0
    pts[interior] += shift[interior]

    return Mesh(
        mesh.dim,
        pts,
        mesh.face_offsets.copy(),
        mesh.face_vertices.copy(),
        mesh.owner.copy(),
        mesh.neighbour.copy(),
        list(mesh.patches),
    )


def quarter_annulus(nr, nt, r_inner, r_outer, *, tris=False, kinds=None) -> Mesh:
    """Structured mesh of a quarter annulus in the first quadrant.

    With `tris`, every polar quad is split along a diagonal.
    """
    _subdivisions(nr=nr, nt=nt)
    rs = r_inner + (r_outer - r_inner) * np.arange(nr + 1) / nr
    thetas = 0.5 * np.pi * np.arange(nt + 1) / nt
    R, T = np.meshgrid(rs, thetas, indexing="ij")
    points = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])

    def pid(i, j):
        return i * (nt + 1) + j

    cells = []
    for i in range(nr):
        for j in range(nt):
            quad = (pid(i, j), pid(i + 1, j), pid(i + 1, j + 1), pid(i, j + 1))
            if tris:
                cells.append((quad[0], quad[1], quad[2]))
                cells.append((quad[0], quad[2], quad[3]))
            else:
                cells.append(quad)
    tol = 1e-9 * r_outer

    def classify(fc):
        # straight sides are exact; arc chords sit slightly inside the arcs,
        # so split the rest by radius alone
        if abs(fc[1]) < tol:
            return "xaxis"
        if abs(fc[0]) < tol:
            return "yaxis"
        r = np.hypot(fc[0], fc[1])
        return "inner" if r < 0.5 * (r_inner + r_outer) else "outer"

    table = _side_kinds(("inner", "outer", "xaxis", "yaxis"), kinds)
    return mesh_from_cells(2, points, cells, classify, table)


def plate_with_hole(n, hole_radius, half_width, *, kinds=None) -> Mesh:
    """Quarter plate with a circular hole at the origin, mapped quads.

    Radial grid lines sweep from the hole arc to the outer square boundary
    of side `half_width`; angular resolution is ``2n``, radial is ``n``.
    """
    _subdivisions(n=n)
    a, w = hole_radius, half_width
    nt = 2 * n
    nr = n
    thetas = 0.5 * np.pi * np.arange(nt + 1) / nt
    outer = np.empty((nt + 1, 2))
    for j, th in enumerate(thetas):
        if th <= 0.25 * np.pi:
            outer[j] = (w, w * np.tan(th))
        else:
            outer[j] = (w * np.tan(0.5 * np.pi - th), w)
    inner = a * np.column_stack([np.cos(thetas), np.sin(thetas)])

    points = np.empty(((nr + 1) * (nt + 1), 2))
    for i in range(nr + 1):
        s = i / nr
        points[i * (nt + 1) : (i + 1) * (nt + 1)] = (1 - s) * inner + s * outer

    def pid(i, j):
        return i * (nt + 1) + j

    cells = [
        (pid(i, j), pid(i + 1, j), pid(i + 1, j + 1), pid(i, j + 1))
        for i in range(nr)
        for j in range(nt)
    ]
    tol = 1e-9 * w

    def classify(fc):
        # straight sides are exact; anything left is a hole-arc chord
        if abs(fc[1]) < tol:
            return "bottom"
        if abs(fc[0]) < tol:
            return "left"
        if abs(fc[0] - w) < tol:
            return "right"
        if abs(fc[1] - w) < tol:
            return "top"
        return "hole"

    table = _side_kinds(("hole", "right", "top", "bottom", "left"), kinds)
    return mesh_from_cells(2, points, cells, classify, table)
