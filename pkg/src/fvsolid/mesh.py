"""Unstructured mesh ingestion, geometry, and quadrature point placement.

Meshes are face-addressed in the owner/neighbour style: every face stores an
ordered vertex list, the owning cell, and (for internal faces) the neighbour
cell.  Two-dimensional meshes are planar: cells are polygons in the z=0 plane
with unit thickness, faces are two-point edges, and the implicit front/back
planes carry no faces.

All geometric quantities derive from one decomposition: faces are fan
triangulated from their first vertex, and cells are decomposed into
sub-tetrahedra (sub-triangles in 2D) joining the cell centroid to those face
triangles.  Face areas, cell volumes, and quadrature weights therefore agree
exactly with each other.

Native mesh format (plain text, ``#`` comments allowed)::

    dim 2
    points 4
    0.0 0.0 [0.0]
    ...
    faces 5
    2 0 2 0 1        # nverts v0 v1 ... owner neighbour(-1 = boundary)
    ...
    patches 2
    left displacement 1 2   # name kind first_face n_faces

Internal faces must precede boundary faces, and patch ranges must tile the
boundary faces exactly.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

import numpy as np

from .quadrature import edge_rule, tet_rule, triangle_rule

__all__ = [
    "BoundaryKind",
    "Patch",
    "Mesh",
    "GeometricData",
    "QuadraturePointSet",
    "MeshError",
    "read_mesh",
    "read_native",
    "write_native",
    "read_gmsh",
    "build_geometry",
    "face_quadrature",
    "cell_quadrature",
    "mesh_quality",
]


class MeshError(Exception):
    """Raised for parse failures, invariant violations, or bad geometry."""


class BoundaryKind(enum.Enum):
    DISPLACEMENT = "displacement"
    TRACTION = "traction"
    SYMMETRY = "symmetry"

    @classmethod
    def parse(cls, text: str) -> "BoundaryKind":
        try:
            return cls(text.lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise MeshError(f"unknown boundary kind '{text}' (expected one of: {valid})")


@dataclass(frozen=True)
class Patch:
    name: str
    kind: BoundaryKind
    start: int
    count: int

    @property
    def faces(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.count)


@dataclass
class Mesh:
    """Face-addressed unstructured mesh (immutable after construction)."""

    dim: int
    points: np.ndarray  # (n_points, 3), metres
    face_offsets: np.ndarray  # (n_faces + 1,)
    face_vertices: np.ndarray  # flat vertex ids
    owner: np.ndarray  # (n_faces,)
    neighbour: np.ndarray  # (n_faces,), -1 on boundary faces
    patches: list[Patch]

    def __post_init__(self) -> None:
        self.points = np.ascontiguousarray(self.points, dtype=float)
        self.face_offsets = np.asarray(self.face_offsets, dtype=np.int64)
        self.face_vertices = np.asarray(self.face_vertices, dtype=np.int64)
        self.owner = np.asarray(self.owner, dtype=np.int64)
        self.neighbour = np.asarray(self.neighbour, dtype=np.int64)
        self._validate()

    # -- basic queries ----------------------------------------------------
    @property
    def n_faces(self) -> int:
        return len(self.owner)

    @property
    def n_cells(self) -> int:
        return int(max(self.owner.max(initial=-1), self.neighbour.max(initial=-1))) + 1

    @property
    def n_internal_faces(self) -> int:
        return int(np.count_nonzero(self.neighbour >= 0))

    def face(self, i: int) -> np.ndarray:
        return self.face_vertices[self.face_offsets[i] : self.face_offsets[i + 1]]

    def patch_of_face(self) -> np.ndarray:
        """Patch index per face (-1 for internal faces)."""
        out = np.full(self.n_faces, -1, dtype=np.int64)
        for i, p in enumerate(self.patches):
            out[p.start : p.start + p.count] = i
        return out

    # -- invariants --------------------------------------------------------
    def _validate(self) -> None:
        nf = self.n_faces
        if self.dim not in (2, 3):
            raise MeshError(f"mesh dimension must be 2 or 3, got {self.dim}")
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise MeshError("points must be an (n, 3) array")
        if self.face_offsets.shape != (nf + 1,):
            raise MeshError("face offsets inconsistent with face count")
        counts = np.diff(self.face_offsets)
        min_verts = 2 if self.dim == 2 else 3
        if nf and counts.min() < min_verts:
            bad = int(np.argmin(counts))
            raise MeshError(f"face {bad} has {counts[bad]} vertices, needs >= {min_verts}")
        if self.dim == 2 and nf and counts.max() > 2:
            bad = int(np.argmax(counts))
            raise MeshError(f"face {bad}: 2D faces are edges with exactly 2 vertices")
        if self.face_vertices.size and (
            self.face_vertices.min() < 0 or self.face_vertices.max() >= len(self.points)
        ):
            raise MeshError("face vertex id out of range")
        if np.any(self.owner < 0):
            raise MeshError("every face needs an owner cell")
        if np.any(self.owner == self.neighbour):
            bad = int(np.nonzero(self.owner == self.neighbour)[0][0])
            raise MeshError(f"face {bad} owns and neighbours the same cell")
        internal = self.neighbour >= 0
        n_int = int(np.count_nonzero(internal))
        if not np.all(internal[:n_int]):
            raise MeshError("internal faces must precede boundary faces")
        covered = np.zeros(nf, dtype=bool)
        for p in self.patches:
            if p.start < n_int or p.start + p.count > nf:
                raise MeshError(f"patch '{p.name}' range covers non-boundary faces")
            if covered[p.start : p.start + p.count].any():
                raise MeshError(f"patch '{p.name}' overlaps another patch")
            covered[p.start : p.start + p.count] = True
        if not covered[n_int:].all():
            missing = int(np.nonzero(~covered[n_int:])[0][0]) + n_int
            raise MeshError(f"boundary face {missing} belongs to no patch")
        if self.dim == 2 and nf and np.abs(self.points[:, 2]).max() > 0:
            raise MeshError("2D mesh points must lie in the z=0 plane")

    def cell_face_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-cell face lists: (offsets, face ids, signs), sign +1 if owner."""
        nf = self.n_faces
        internal = self.neighbour >= 0
        cells = np.concatenate([self.owner, self.neighbour[internal]])
        faces = np.concatenate([np.arange(nf), np.nonzero(internal)[0]])
        signs = np.concatenate(
            [np.ones(nf, dtype=np.int64), -np.ones(int(internal.sum()), dtype=np.int64)]
        )
        order = np.argsort(cells, kind="stable")
        cells, faces, signs = cells[order], faces[order], signs[order]
        offsets = np.zeros(self.n_cells + 1, dtype=np.int64)
        np.add.at(offsets, cells + 1, 1)
        np.cumsum(offsets, out=offsets)
        return offsets, faces, signs


@dataclass
class GeometricData:
    """Derived geometry shared by every discretisation stage."""

    cell_centroid: np.ndarray  # (nc, 3)
    cell_volume: np.ndarray  # (nc,)
    face_centroid: np.ndarray  # (nf, 3)
    face_area: np.ndarray  # (nf,)
    face_normal: np.ndarray  # (nf, 3), unit, outward from owner
    d_pn: np.ndarray  # (nf, 3) x_N - x_P (zero rows on boundary faces)
    d_pf: np.ndarray  # (nf, 3) x_f - x_P (this is d_Pb on boundary faces)
    d_nf: np.ndarray  # (nf, 3) x_f - x_N (zero rows on boundary faces)
    # face fan triangulation (3D only; empty in 2D)
    tri_face: np.ndarray  # (nt,) host face id
    tri_verts: np.ndarray  # (nt, 3) vertex ids
    # cell decomposition bookkeeping: one sub-element per (cell face-triangle)
    sub_cell: np.ndarray  # (ns,) host cell id, sorted
    sub_tri: np.ndarray  # (ns,) face-triangle id (3D) or face id (2D)
    sub_volume: np.ndarray  # (ns,) positive sub-element measures
    closure: np.ndarray  # (nc,) |sum of signed area vectors| / surface area


def _fan_triangles(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Fan triangulation of every face from its first vertex (3D)."""
    counts = np.diff(mesh.face_offsets)
    tri_face: list[np.ndarray] = []
    tri_verts: list[np.ndarray] = []
    for nv in np.unique(counts):
        faces = np.nonzero(counts == nv)[0]
        starts = mesh.face_offsets[faces]
        # vertex table (nfaces_group, nv)
        vt = mesh.face_vertices[starts[:, None] + np.arange(nv)[None, :]]
        for k in range(1, nv - 1):
            tri_face.append(faces)
            tri_verts.append(np.column_stack([vt[:, 0], vt[:, k], vt[:, k + 1]]))
    tf = np.concatenate(tri_face)
    tv = np.vstack(tri_verts)
    order = np.argsort(tf, kind="stable")
    return tf[order], tv[order]


def build_geometry(mesh: Mesh) -> GeometricData:
    """Compute centroids, measures, normals, and the shared decomposition.

    Face normals are re-oriented to point outward from the owner cell where
    the input vertex ordering disagrees (the vertex list is reversed so the
    stored ordering stays consistent with the normal).
    """
    pts = mesh.points
    nf = mesh.n_faces
    nc = mesh.n_cells

    if mesh.dim == 2:
        v0 = mesh.face_vertices[mesh.face_offsets[:-1]]
        v1 = mesh.face_vertices[mesh.face_offsets[:-1] + 1]
        t = pts[v1] - pts[v0]
        length = np.linalg.norm(t, axis=1)
        if np.any(length <= 0):
            bad = int(np.argmin(length))
            raise MeshError(f"face {bad} is degenerate (zero length)")
        normal = np.column_stack([t[:, 1], -t[:, 0], np.zeros(nf)]) / length[:, None]
        face_centroid = 0.5 * (pts[v0] + pts[v1])
        face_area = length
        tri_face = np.arange(nf)
        tri_verts = np.empty((0, 3), dtype=np.int64)
        tri_area = face_area
        vec_area = normal * face_area[:, None]
    else:
        tri_face, tri_verts = _fan_triangles(mesh)
        p0, p1, p2 = (pts[tri_verts[:, k]] for k in range(3))
        cross = np.cross(p1 - p0, p2 - p0)
        tri_vec = 0.5 * cross
        tri_area = np.linalg.norm(tri_vec, axis=1)
        scale = np.maximum.reduce(
            [np.linalg.norm(p1 - p0, axis=1), np.linalg.norm(p2 - p0, axis=1)]
        )
        degenerate = tri_area <= 1e-14 * scale**2
        if np.any(degenerate):
            bad = int(tri_face[np.nonzero(degenerate)[0][0]])
            raise MeshError(f"face {bad} has a degenerate fan triangle")
        face_area = np.bincount(tri_face, weights=tri_area, minlength=nf)
        vec_area = np.zeros((nf, 3))
        tri_centroid = (p0 + p1 + p2) / 3.0
        for k in range(3):
            vec_area[:, k] = np.bincount(tri_face, weights=tri_vec[:, k], minlength=nf)
            # area-weighted centroid of the fan
        face_centroid = np.zeros((nf, 3))
        for k in range(3):
            face_centroid[:, k] = np.bincount(
                tri_face, weights=tri_area * tri_centroid[:, k], minlength=nf
            )
        face_centroid /= face_area[:, None]
        vec_norm = np.linalg.norm(vec_area, axis=1)
        if np.any(vec_norm <= 0):
            bad = int(np.argmin(vec_norm))
            raise MeshError(f"face {bad} has vanishing area vector")
        normal = vec_area / vec_norm[:, None]

    # orient normals outward from the owner using a provisional cell centre
    approx = np.zeros((nc, 3))
    counts = np.zeros(nc)
    np.add.at(approx, mesh.owner, face_centroid)
    np.add.at(counts, mesh.owner, 1.0)
    internal = mesh.neighbour >= 0
    np.add.at(approx, mesh.neighbour[internal], face_centroid[internal])
    np.add.at(counts, mesh.neighbour[internal], 1.0)
    approx /= counts[:, None]
    flip = np.einsum("ij,ij->i", normal, face_centroid - approx[mesh.owner]) < 0.0
    if np.any(flip):
        normal[flip] *= -1.0
        if mesh.dim == 3:
            # reverse vertex order (keeping the fan apex) so the stored
            # ordering and the normal stay right-handed together
            for f in np.nonzero(flip)[0]:
                vs = mesh.face_vertices[mesh.face_offsets[f] : mesh.face_offsets[f + 1]]
                mesh.face_vertices[mesh.face_offsets[f] + 1 : mesh.face_offsets[f + 1]] = vs[
                    1:
                ][::-1]
            tri_face, tri_verts = _fan_triangles(mesh)
        else:
            for f in np.nonzero(flip)[0]:
                o = mesh.face_offsets[f]
                mesh.face_vertices[[o, o + 1]] = mesh.face_vertices[[o + 1, o]]

    # exact volume and centroid from the closed decomposed surface
    offsets, cf_faces, cf_signs = mesh.cell_face_table()
    if mesh.dim == 2:
        edge_first = mesh.face_vertices[mesh.face_offsets[:-1]]
        sub_cell = np.repeat(np.arange(nc), np.diff(offsets))
        sub_tri = cf_faces
        sgn = cf_signs.astype(float)
        n_sub = normal[sub_tri] * sgn[:, None]
        a_sub = face_area[sub_tri]
        ref = pts[edge_first[sub_tri]]
        apex0 = approx[sub_cell]
        vol0 = 0.5 * a_sub * np.einsum("ij,ij->i", n_sub, ref - apex0)
        c0 = (apex0 + pts[edge_first[sub_tri]] + pts[mesh.face_vertices[mesh.face_offsets[sub_tri] + 1]]) / 3.0
    else:
        tri_of_face_offsets = np.zeros(nf + 1, dtype=np.int64)
        np.add.at(tri_of_face_offsets, tri_face + 1, 1)
        np.cumsum(tri_of_face_offsets, out=tri_of_face_offsets)
        tri_count = np.diff(tri_of_face_offsets)
        reps = tri_count[cf_faces]
        sub_cell = np.repeat(np.repeat(np.arange(nc), np.diff(offsets)), reps)
        # triangle ids grouped per (cell, face) pair: ragged arange into the
        # contiguous triangle range of each face
        ends = np.cumsum(reps)
        sub_tri = (
            np.arange(int(ends[-1])) - np.repeat(ends - reps, reps) + np.repeat(
                tri_of_face_offsets[cf_faces], reps
            )
            if len(cf_faces)
            else np.empty(0, dtype=np.int64)
        )
        sgn = np.repeat(cf_signs, reps).astype(float)
        p0 = pts[tri_verts[sub_tri, 0]]
        # triangle area vectors follow the stored (owner-outward) vertex order
        tri_vec_all = 0.5 * np.cross(
            pts[tri_verts[:, 1]] - pts[tri_verts[:, 0]],
            pts[tri_verts[:, 2]] - pts[tri_verts[:, 0]],
        )
        apex0 = approx[sub_cell]
        vol0 = sgn * np.einsum("ij,ij->i", tri_vec_all[sub_tri], p0 - apex0) / 3.0
        c0 = (
            apex0
            + pts[tri_verts[sub_tri, 0]]
            + pts[tri_verts[sub_tri, 1]]
            + pts[tri_verts[sub_tri, 2]]
        ) / 4.0

    cell_volume = np.bincount(sub_cell, weights=vol0, minlength=nc)
    if np.any(cell_volume <= 0):
        bad = int(np.argmin(cell_volume))
        raise MeshError(f"cell {bad} has non-positive volume {cell_volume[bad]:.3e}")
    cell_centroid = np.zeros((nc, 3))
    # signed sub-element moments telescope to the exact volume integral, so
    # the centroid is exact even with the provisional apex
    for k in range(3):
        cell_centroid[:, k] = np.bincount(sub_cell, weights=vol0 * c0[:, k], minlength=nc)
    cell_centroid /= cell_volume[:, None]

    # final decomposition from the true centroid; measures must be positive
    apex = cell_centroid[sub_cell]
    if mesh.dim == 2:
        sub_volume = 0.5 * a_sub * np.einsum("ij,ij->i", n_sub, ref - apex)
    else:
        sub_volume = sgn * np.einsum("ij,ij->i", tri_vec_all[sub_tri], p0 - apex) / 3.0
    if np.any(sub_volume <= 0):
        bad = int(sub_cell[np.nonzero(sub_volume <= 0)[0][0]])
        raise MeshError(f"cell {bad}: non-convex or mis-oriented (negative sub-volume)")
    cell_volume = np.bincount(sub_cell, weights=sub_volume, minlength=nc)

    d_pn = np.zeros((nf, 3))
    d_pn[internal] = cell_centroid[mesh.neighbour[internal]] - cell_centroid[mesh.owner[internal]]
    d_pf = face_centroid - cell_centroid[mesh.owner]
    d_nf = np.zeros((nf, 3))
    d_nf[internal] = face_centroid[internal] - cell_centroid[mesh.neighbour[internal]]

    # closure residual per cell: signed area vectors of a closed cell cancel
    signed_area = np.zeros((nc, 3))
    surf = np.zeros(nc)
    for k in range(3):
        np.add.at(signed_area[:, k], mesh.owner, face_area * normal[:, k])
        np.add.at(signed_area[:, k], mesh.neighbour[internal], -(face_area * normal[:, k])[internal])
    np.add.at(surf, mesh.owner, face_area)
    np.add.at(surf, mesh.neighbour[internal], face_area[internal])
    closure = np.linalg.norm(signed_area, axis=1) / surf

    return GeometricData(
        cell_centroid=cell_centroid,
        cell_volume=cell_volume,
        face_centroid=face_centroid,
        face_area=face_area,
        face_normal=normal,
        d_pn=d_pn,
        d_pf=d_pf,
        d_nf=d_nf,
        tri_face=tri_face,
        tri_verts=tri_verts if mesh.dim == 3 else np.empty((0, 3), dtype=np.int64),
        sub_cell=sub_cell,
        sub_tri=sub_tri,
        sub_volume=sub_volume,
        closure=closure,
    )


@dataclass
class QuadraturePointSet:
    """Physical quadrature points with unit-sum weights per host entity."""

    x: np.ndarray  # (nq, 3)
    w: np.ndarray  # (nq,), sums to 1 over each host's slice
    offsets: np.ndarray  # (n_hosts + 1,) host id -> slice into x, w

    @property
    def host(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.offsets) - 1), np.diff(self.offsets))


def face_quadrature(mesh: Mesh, geom: GeometricData, degree: int) -> QuadraturePointSet:
    """Quadrature points on every face, weights rescaled by sub-area fraction."""
    pts = mesh.points
    nf = mesh.n_faces
    if mesh.dim == 2:
        rule = edge_rule(degree)
        v0 = mesh.face_vertices[mesh.face_offsets[:-1]]
        v1 = mesh.face_vertices[mesh.face_offsets[:-1] + 1]
        # (nf, nq, 3)
        x = rule.points[None, :, 0, None] * pts[v0][:, None, :] + rule.points[
            None, :, 1, None
        ] * pts[v1][:, None, :]
        w = np.tile(rule.weights, nf)
        offsets = np.arange(nf + 1, dtype=np.int64) * rule.npoints
        return QuadraturePointSet(x.reshape(-1, 3), w, offsets)

    rule = triangle_rule(degree)
    tf, tv = geom.tri_face, geom.tri_verts
    p = pts[tv]  # (nt, 3verts, 3)
    x = np.einsum("qb,tbk->tqk", rule.points, p)  # (nt, nq, 3)
    tri_vec = 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    tri_area = np.linalg.norm(tri_vec, axis=1)
    frac = tri_area / geom.face_area[tf]
    w = (rule.weights[None, :] * frac[:, None]).ravel()
    nq_per_face = np.bincount(tf, minlength=nf) * rule.npoints
    offsets = np.zeros(nf + 1, dtype=np.int64)
    np.cumsum(nq_per_face, out=offsets[1:])
    return QuadraturePointSet(x.reshape(-1, 3), w, offsets)


def cell_quadrature(mesh: Mesh, geom: GeometricData, degree: int) -> QuadraturePointSet:
    """Quadrature points in every cell via the centroid decomposition."""
    pts = mesh.points
    nc = mesh.n_cells
    apex = geom.cell_centroid[geom.sub_cell]
    if mesh.dim == 2:
        rule = triangle_rule(degree)
        v0 = mesh.face_vertices[mesh.face_offsets[geom.sub_tri]]
        v1 = mesh.face_vertices[mesh.face_offsets[geom.sub_tri] + 1]
        corners = np.stack([apex, pts[v0], pts[v1]], axis=1)  # (ns, 3, 3)
    else:
        rule = tet_rule(degree)
        tv = geom.tri_verts[geom.sub_tri]
        corners = np.stack([apex, pts[tv[:, 0]], pts[tv[:, 1]], pts[tv[:, 2]]], axis=1)
    x = np.einsum("qb,sbk->sqk", rule.points, corners)
    cellvol = np.bincount(geom.sub_cell, weights=geom.sub_volume, minlength=nc)
    frac = geom.sub_volume / cellvol[geom.sub_cell]
    w = (rule.weights[None, :] * frac[:, None]).ravel()
    nq_per_cell = np.bincount(geom.sub_cell, minlength=nc) * rule.npoints
    offsets = np.zeros(nc + 1, dtype=np.int64)
    np.cumsum(nq_per_cell, out=offsets[1:])
    return QuadraturePointSet(x.reshape(-1, 3), w, offsets)


def mesh_quality(mesh: Mesh, geom: GeometricData) -> dict:
    """Counts, closure residuals, and skewness range for reporting."""
    internal = mesh.neighbour >= 0
    out = {
        "cells": mesh.n_cells,
        "faces": mesh.n_faces,
        "internal_faces": mesh.n_internal_faces,
        "points": len(mesh.points),
        "dim": mesh.dim,
        "max_closure": float(geom.closure.max()) if mesh.n_cells else 0.0,
    }
    if internal.any():
        d = geom.d_pn[internal]
        n = geom.face_normal[internal]
        skew = np.abs(np.einsum("ij,ij->i", d, n)) / np.linalg.norm(d, axis=1)
        out["min_skewness"] = float(skew.min())
        out["max_skewness"] = float(skew.max())
    return out


# ---------------------------------------------------------------------------
# Readers and writers
# ---------------------------------------------------------------------------


def read_mesh(path: str, fmt: str = "native", patch_kinds: dict[str, str] | None = None) -> Mesh:
    if fmt == "native":
        return read_native(path)
    if fmt in ("gmsh", "gmsh-ascii"):
        return read_gmsh(path, patch_kinds or {})
    raise MeshError(f"unknown mesh format '{fmt}' (expected 'native' or 'gmsh-ascii')")


class _Lines:
    """Token stream over meaningful lines, tracking line numbers for errors."""

    def __init__(self, path: str):
        self.path = path
        with open(path) as fh:
            raw = fh.readlines()
        self.rows = [
            (i + 1, line.split("#", 1)[0].split())
            for i, line in enumerate(raw)
        ]
        self.rows = [(n, toks) for n, toks in self.rows if toks]
        self.i = 0

    def next(self, what: str) -> tuple[int, list[str]]:
        if self.i >= len(self.rows):
            raise MeshError(f"{self.path}: unexpected end of file while reading {what}")
        row = self.rows[self.i]
        self.i += 1
        return row

    def fail(self, lineno: int, msg: str):
        raise MeshError(f"{self.path}:{lineno}: {msg}")


def read_native(path: str) -> Mesh:
    src = _Lines(path)

    def expect_count(keyword: str) -> int:
        n, toks = src.next(keyword)
        if len(toks) != 2 or toks[0] != keyword:
            src.fail(n, f"expected '{keyword} <count>', got '{' '.join(toks)}'")
        try:
            return int(toks[1])
        except ValueError:
            src.fail(n, f"{keyword} count must be an integer")

    n, toks = src.next("dim")
    if len(toks) != 2 or toks[0] != "dim" or toks[1] not in ("2", "3"):
        src.fail(n, "expected 'dim 2' or 'dim 3'")
    dim = int(toks[1])

    npts = expect_count("points")
    pts = np.zeros((npts, 3))
    for i in range(npts):
        n, toks = src.next("points")
        if len(toks) not in (2, 3):
            src.fail(n, f"point {i}: expected 2 or 3 coordinates")
        try:
            vals = [float(t) for t in toks]
        except ValueError:
            src.fail(n, f"point {i}: non-numeric coordinate")
        pts[i, : len(vals)] = vals

    nfaces = expect_count("faces")
    offsets = [0]
    verts: list[int] = []
    owner = np.empty(nfaces, dtype=np.int64)
    neigh = np.empty(nfaces, dtype=np.int64)
    for i in range(nfaces):
        n, toks = src.next("faces")
        try:
            nums = [int(t) for t in toks]
        except ValueError:
            src.fail(n, f"face {i}: non-integer token")
        if len(nums) < 1 or len(nums) != nums[0] + 3:
            src.fail(n, f"face {i}: expected 'nverts v... owner neighbour'")
        nv = nums[0]
        verts.extend(nums[1 : 1 + nv])
        owner[i], neigh[i] = nums[1 + nv], nums[2 + nv]
        offsets.append(len(verts))

    npatches = expect_count("patches")
    patches = []
    for i in range(npatches):
        n, toks = src.next("patches")
        if len(toks) != 4:
            src.fail(n, f"patch {i}: expected 'name kind start count'")
        try:
            kind = BoundaryKind.parse(toks[1])
        except MeshError as e:
            src.fail(n, str(e))
        try:
            patches.append(Patch(toks[0], kind, int(toks[2]), int(toks[3])))
        except ValueError:
            src.fail(n, f"patch {i}: start/count must be integers")

    try:
        return Mesh(dim, pts, np.array(offsets), np.array(verts), owner, neigh, patches)
    except MeshError as e:
        raise MeshError(f"{path}: {e}") from e


def write_native(mesh: Mesh, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"dim {mesh.dim}\n")
        fh.write(f"points {len(mesh.points)}\n")
        coords = mesh.points[:, : mesh.dim if mesh.dim == 2 else 3]
        for p in coords:
            fh.write(" ".join(repr(float(v)) for v in p) + "\n")
        fh.write(f"faces {mesh.n_faces}\n")
        for i in range(mesh.n_faces):
            vs = mesh.face(i)
            fh.write(
                f"{len(vs)} "
                + " ".join(str(int(v)) for v in vs)
                + f" {int(mesh.owner[i])} {int(mesh.neighbour[i])}\n"
            )
        fh.write(f"patches {len(mesh.patches)}\n")
        for p in mesh.patches:
            fh.write(f"{p.name} {p.kind.value} {p.start} {p.count}\n")


# Gmsh ASCII v2.2 element types: intrinsic dimension and, for cell types,
# the local face vertex lists (gmsh node ordering)
_GMSH_ELEMENT_DIM = {1: 1, 2: 2, 3: 2, 4: 3, 5: 3}
_GMSH_CELL_FACES = {
    2: [(0, 1), (1, 2), (2, 0)],  # triangle
    3: [(0, 1), (1, 2), (2, 3), (3, 0)],  # quadrangle
    4: [(0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)],  # tetrahedron
    5: [
        (0, 3, 2, 1),
        (4, 5, 6, 7),
        (0, 1, 5, 4),
        (1, 2, 6, 5),
        (2, 3, 7, 6),
        (3, 0, 4, 7),
    ],  # hexahedron
}


def read_gmsh(path: str, patch_kinds: dict[str, str]) -> Mesh:
    """Read a Gmsh ASCII v2.2 file; physical names map to patches.

    `patch_kinds` maps physical-group names to boundary kinds
    (displacement / traction / symmetry).  Every boundary element must carry
    a physical group named in the table.
    """
    src = _Lines(path)
    phys_names: dict[int, str] = {}
    nodes: dict[int, int] = {}
    points: list[list[float]] = []
    elements: list[tuple[int, int, list[int]]] = []  # (gmsh type, physical id, vertex ids)

    while src.i < len(src.rows):
        n, toks = src.next("section")
        section = toks[0]
        if section == "$MeshFormat":
            n, toks = src.next("format")
            if not toks or not toks[0].startswith("2.2"):
                src.fail(n, f"unsupported Gmsh format '{' '.join(toks)}' (need ASCII 2.2)")
            src.next("$EndMeshFormat")
        elif section == "$PhysicalNames":
            n, toks = src.next("count")
            for _ in range(int(toks[0])):
                n, toks = src.next("physical name")
                if len(toks) < 3:
                    src.fail(n, "physical name line needs 'dim id name'")
                m = re.match(r'"(.*)"', " ".join(toks[2:]))
                phys_names[int(toks[1])] = m.group(1) if m else toks[2].strip('"')
            src.next("$EndPhysicalNames")
        elif section == "$Nodes":
            n, toks = src.next("node count")
            for i in range(int(toks[0])):
                n, toks = src.next("node")
                if len(toks) != 4:
                    src.fail(n, "node line needs 'id x y z'")
                nodes[int(toks[0])] = len(points)
                points.append([float(toks[1]), float(toks[2]), float(toks[3])])
            src.next("$EndNodes")
        elif section == "$Elements":
            n, toks = src.next("element count")
            for _ in range(int(toks[0])):
                n, toks = src.next("element")
                nums = [int(t) for t in toks]
                etype, ntags = nums[1], nums[2]
                phys = nums[3] if ntags >= 1 else 0
                vs = nums[3 + ntags :]
                if etype == 15:  # isolated point element: ignore
                    continue
                if etype not in _GMSH_ELEMENT_DIM:
                    src.fail(n, f"unsupported Gmsh element type {etype}")
                elements.append((etype, phys, [nodes[v] for v in vs]))
            src.next("$EndElements")
        else:
            # skip unknown section until its matching end tag
            end = "$End" + section.lstrip("$")
            while True:
                n, toks = src.next(section)
                if toks[0] == end:
                    break

    if not elements:
        raise MeshError(f"{path}: no elements found")
    vol_dim = max(_GMSH_ELEMENT_DIM[t] for t, _, _ in elements)
    if vol_dim < 2:
        raise MeshError(f"{path}: no surface or volume cells found")
    # highest-dimensional elements are the cells; one dimension lower are
    # boundary faces carrying their physical group; anything lower is ignored
    cells = [(t, vs) for t, _, vs in elements if _GMSH_ELEMENT_DIM[t] == vol_dim]
    belems = [
        (phys, vs) for t, phys, vs in elements if _GMSH_ELEMENT_DIM[t] == vol_dim - 1
    ]
    pts = np.array(points)
    if vol_dim == 2:
        if np.abs(pts[:, 2]).max(initial=0.0) > 1e-12:
            raise MeshError(f"{path}: 2D mesh has out-of-plane nodes")
        pts[:, 2] = 0.0

    # enumerate faces of every cell, matching shared ones
    face_map: dict[tuple, list] = {}
    for ci, (etype, vs) in enumerate(cells):
        for lf in _GMSH_CELL_FACES[etype]:
            fv = [vs[k] for k in lf]
            key = tuple(sorted(fv))
            entry = face_map.get(key)
            if entry is None:
                face_map[key] = [ci, -1, fv]
            else:
                if entry[1] != -1:
                    raise MeshError(f"{path}: non-manifold face shared by 3+ cells")
                entry[1] = ci

    bnd_phys: dict[tuple, int] = {}
    for phys, vs in belems:
        bnd_phys[tuple(sorted(vs))] = phys

    internal, boundary = [], []
    for key, (own, nb, fv) in face_map.items():
        if nb >= 0:
            if nb < own:
                own, nb = nb, own
                fv = fv[::-1]
            internal.append((own, nb, fv))
        else:
            phys = bnd_phys.get(key)
            if phys is None:
                raise MeshError(f"{path}: boundary face {key} has no boundary element")
            name = phys_names.get(phys, str(phys))
            if name not in patch_kinds:
                raise MeshError(
                    f"{path}: physical group '{name}' has no boundary-kind mapping"
                )
            boundary.append((name, own, fv))

    internal.sort(key=lambda t: (t[0], t[1]))
    names = sorted({name for name, _, _ in boundary})
    boundary.sort(key=lambda t: (names.index(t[0]), t[1]))

    offsets, verts, owner, neigh = [0], [], [], []
    for own, nb, fv in internal:
        verts.extend(fv)
        offsets.append(len(verts))
        owner.append(own)
        neigh.append(nb)
    patches = []
    for name in names:
        start = len(owner)
        for bname, own, fv in boundary:
            if bname != name:
                continue
            verts.extend(fv)
            offsets.append(len(verts))
            owner.append(own)
            neigh.append(-1)
        patches.append(
            Patch(name, BoundaryKind.parse(patch_kinds[name]), start, len(owner) - start)
        )

    return Mesh(
        vol_dim,
        pts,
        np.array(offsets),
        np.array(verts, dtype=np.int64),
        np.array(owner, dtype=np.int64),
        np.array(neigh, dtype=np.int64),
        patches,
    )
