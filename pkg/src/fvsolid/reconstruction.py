"""Stencil construction and weighted least-squares Taylor reconstruction.

Every reconstruction site (cell centre or face centre) carries a stencil of
nearby cell centroids.  Fitting a scaled Taylor polynomial through the cell
values in the weighted least-squares sense yields coefficient rows that map
node values to the value and derivatives of the field at the site.  The rows
depend only on geometry, so they are assembled once and reused for every
field and every Newton iteration.

Basis ordering (2D drops all z entries)::

    1, x, y, z, xx, xy, xz, yy, yz, zz, xxx, xxy, xxz, xyy, xyz, xzz, ...

where each monomial (dx/h)^a (dy/h)^b (dz/h)^c carries the Taylor factor
1/(a! b! c!) and h = 2 r_s is the stencil diameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import BoundaryKind, GeometricData, Mesh, QuadraturePointSet

__all__ = [
    "ReconstructionError",
    "StencilSpec",
    "multi_indices",
    "weight",
    "taylor_basis",
    "solve_lre",
    "condition_estimate",
    "Reconstruction",
    "build_reconstruction",
    "dump_stencil_diagnostics",
    "face_kinds",
    "FACE_INTERNAL",
    "FACE_DISPLACEMENT",
    "FACE_SYMMETRY",
    "FACE_TRACTION",
]

COND_FLAG_THRESHOLD = 1e12
_WEIGHT_FLOOR = 1e-12


class ReconstructionError(Exception):
    """Raised for unusable stencils or rank-deficient reconstruction systems."""


@dataclass(frozen=True)
class StencilSpec:
    """Reconstruction order and stencil surplus."""

    dim: int
    p: int
    n_plus: int
    k: float = 6.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ReconstructionError(f"dim must be 2 or 3, got {self.dim}")
        if self.p not in (1, 2, 3):
            raise ReconstructionError(f"order p must be 1, 2, or 3, got {self.p}")
        if self.n_plus < 0:
            raise ReconstructionError("stencil surplus n_plus must be >= 0")

    @property
    def n_terms(self) -> int:
        d, p = self.dim, self.p
        return math.comb(d + p, p)

    @property
    def size(self) -> int:
        return self.n_terms + self.n_plus

    @staticmethod
    def default_n_plus(dim: int, p: int) -> int:
        if dim == 2:
            return 10
        return {1: 45, 2: 55, 3: 65}[p]

    @classmethod
    def default(cls, dim: int, p: int) -> "StencilSpec":
        return cls(dim, p, cls.default_n_plus(dim, p))


def multi_indices(dim: int, p: int) -> np.ndarray:
    """Exponent triples (a, b, c) in the documented order, shape (N_t, 3)."""
    out = []
    for total in range(p + 1):
        for a in range(total, -1, -1):
            for b in range(total - a, -1, -1):
                c = total - a - b
                if dim == 2 and c > 0:
                    continue
                out.append((a, b, c))
    return np.array(out, dtype=np.int64)


def _inv_factorials(indices: np.ndarray) -> np.ndarray:
    f = np.array([math.factorial(k) for k in range(int(indices.max()) + 1)])
    return 1.0 / (f[indices[:, 0]] * f[indices[:, 1]] * f[indices[:, 2]])


def weight(d, d_s, k: float = 6.0):
    """Radial stencil weight, 1 at the site and 0 at distance d_s."""
    x = np.asarray(d, dtype=float) / d_s
    w = (np.exp(-(x * k) ** 2) - np.exp(-(k**2))) / (1.0 - np.exp(-(k**2)))
    return np.maximum(w, 0.0)


def taylor_basis(delta: np.ndarray, indices: np.ndarray, h: float | np.ndarray) -> np.ndarray:
    """Scaled Taylor basis rows for offsets delta (..., 3) -> (..., N_t)."""
    delta = np.asarray(delta, dtype=float)
    scaled = delta / np.asarray(h)[..., None]
    invf = _inv_factorials(indices)
    out = np.empty(delta.shape[:-1] + (len(indices),))
    for j, (a, b, c) in enumerate(indices):
        out[..., j] = scaled[..., 0] ** a * scaled[..., 1] ** b * scaled[..., 2] ** c
    return out * invf


def _derivative_transfer(
    delta: np.ndarray,
    indices: np.ndarray,
    h: float | np.ndarray,
    order: tuple[int, int, int],
) -> np.ndarray:
    """Rows mapping scaled coefficients to D^order u at site + delta.

    Entry j is h^-|a_j| * delta^(a_j - order) / (a_j - order)! when the
    subtraction stays non-negative, else 0.  order = (0,0,0) gives plain
    evaluation of the Taylor polynomial.  `h` broadcasts against the leading
    axes of `delta`.
    """
    delta = np.asarray(delta, dtype=float)
    h = np.asarray(h, dtype=float)
    out = np.zeros(delta.shape[:-1] + (len(indices),))
    order = np.asarray(order)
    for j, alpha in enumerate(indices):
        beta = alpha - order
        if np.any(beta < 0):
            continue
        invf = 1.0 / (
            math.factorial(beta[0]) * math.factorial(beta[1]) * math.factorial(beta[2])
        )
        term = (
            delta[..., 0] ** beta[0]
            * delta[..., 1] ** beta[1]
            * delta[..., 2] ** beta[2]
        )
        out[..., j] = term * invf * h ** (-float(alpha.sum()))
    return out


def condition_estimate(M: np.ndarray) -> float:
    """1-norm condition estimate of the moment matrix."""
    norm1 = np.abs(M).sum(axis=0).max()
    try:
        inv = np.linalg.inv(M)
    except np.linalg.LinAlgError:
        return np.inf
    return float(norm1 * np.abs(inv).sum(axis=0).max())


@dataclass
class _SiteSolution:
    members: np.ndarray  # stencil cell ids (mirrored entries repeat the source)
    mirrored: np.ndarray  # bool per member
    r_s: float
    h: float
    abar: np.ndarray  # (N_t, m [+1 ghost]) coefficient rows, still h-scaled
    ghost: bool
    cond: float
    indices: np.ndarray  # multi-index table matching abar rows

    @property
    def value_row(self) -> np.ndarray:
        return self.abar[0]

    def derivative_row(self, alpha: tuple[int, int, int]) -> np.ndarray:
        """Coefficient row for D^alpha u at the site, h-unscaled."""
        j = np.nonzero((self.indices == np.asarray(alpha)).all(axis=1))[0]
        if len(j) == 0:
            raise ReconstructionError(f"derivative {alpha} beyond order p")
        return self.abar[int(j[0])] * self.h ** (-float(sum(alpha)))


def solve_lre(
    positions: np.ndarray,
    site: np.ndarray,
    spec: StencilSpec,
    ghost: bool = False,
    site_id: str = "site",
) -> _SiteSolution:
    """Weighted least-squares Taylor fit at one site (reference solver).

    `positions` holds the member coordinates (already reflected for mirrored
    members).  With `ghost`, one prescribed-value row with basis [1, 0, ...]
    and unit weight is appended; its coefficient column comes last.
    """
    indices = multi_indices(spec.dim, spec.p)
    delta = positions - site
    dist = np.linalg.norm(delta, axis=1)
    r_s = float(dist.max())
    h = 2.0 * r_s
    w = np.maximum(weight(dist, h, spec.k), _WEIGHT_FLOOR)
    q = taylor_basis(delta, indices, h)
    if ghost:
        gq = np.zeros((1, len(indices)))
        gq[0, 0] = 1.0
        q = np.vstack([q, gq])
        w = np.append(w, 1.0)
    sw = np.sqrt(w)
    B = sw[:, None] * q
    Q, R = np.linalg.qr(B)
    diag = np.abs(np.diag(R))
    cond = condition_estimate(B.T @ B)
    if diag.min() <= 1e-14 * diag.max():
        raise ReconstructionError(
            f"rank-deficient reconstruction at {site_id} "
            f"(condition estimate {cond:.3e}); increase n_plus or lower p"
        )
    abar = np.linalg.solve(R, Q.T) * sw[None, :]
    m = len(positions)
    return _SiteSolution(
        members=np.arange(m),
        mirrored=np.zeros(m, dtype=bool),
        r_s=r_s,
        h=h,
        abar=abar,
        ghost=ghost,
        cond=cond,
        indices=indices,
    )


# ---------------------------------------------------------------------------
# batched construction over all sites of a mesh
# ---------------------------------------------------------------------------


def _nearest_members(
    centroids: np.ndarray, sites: np.ndarray, count: int, chunk: int = 512
) -> np.ndarray:
    """k-nearest cell ids per site, ties at equal distance to the lower id.

    Brute force over centroids; candidates are pre-sorted by id so a stable
    distance sort resolves ties deterministically.
    """
    nc = len(centroids)
    if count > nc:
        raise ReconstructionError(
            f"stencil needs {count} cells but the mesh has {nc}; "
            "lower p or reduce n_plus"
        )
    k_cand = min(nc, count + 24)
    out = np.empty((len(sites), count), dtype=np.int64)
    for lo in range(0, len(sites), chunk):
        hi = min(lo + chunk, len(sites))
        d2 = ((sites[lo:hi, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        cand = np.argpartition(d2, k_cand - 1, axis=1)[:, :k_cand]
        cand.sort(axis=1)  # ascending id, so the stable sort below breaks ties
        dcand = np.take_along_axis(d2, cand, axis=1)
        order = np.argsort(dcand, axis=1, kind="stable")[:, :count]
        out[lo:hi] = np.take_along_axis(cand, order, axis=1)
    return out


def _batched_solve(
    positions: np.ndarray,  # (S, m, 3) member positions
    sites: np.ndarray,  # (S, 3)
    spec: StencilSpec,
    ghost: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised LRE solve for sites sharing a member count.

    Returns (abar (S, N_t, m+ghost), r_s (S,), cond (S,)).
    """
    indices = multi_indices(spec.dim, spec.p)
    nt = len(indices)
    delta = positions - sites[:, None, :]
    dist = np.linalg.norm(delta, axis=2)
    r_s = dist.max(axis=1)
    h = 2.0 * r_s
    w = np.maximum(weight(dist, h[:, None], spec.k), _WEIGHT_FLOOR)
    q = taylor_basis(delta, indices, h[:, None])
    if ghost:
        gq = np.zeros((len(sites), 1, nt))
        gq[:, 0, 0] = 1.0
        q = np.concatenate([q, gq], axis=1)
        w = np.concatenate([w, np.ones((len(sites), 1))], axis=1)
    sw = np.sqrt(w)
    B = sw[:, :, None] * q
    Q, R = np.linalg.qr(B)
    diag = np.abs(np.diagonal(R, axis1=1, axis2=2))
    bad = diag.min(axis=1) <= 1e-14 * diag.max(axis=1)
    M = np.einsum("smi,smj->sij", B, B)
    norm1 = np.abs(M).sum(axis=1).max(axis=1)
    try:
        inv = np.linalg.inv(M)
        cond = norm1 * np.abs(inv).sum(axis=1).max(axis=1)
    except np.linalg.LinAlgError:
        cond = np.full(len(sites), np.inf)
        bad = bad | True
    if np.any(bad):
        s = int(np.nonzero(bad)[0][0])
        raise ReconstructionError(
            f"rank-deficient reconstruction at site {s} of batch "
            f"(condition estimate {cond[s]:.3e}); increase n_plus or lower p"
        )
    abar = np.linalg.solve(R, np.transpose(Q, (0, 2, 1))) * sw[:, None, :]
    return abar, r_s, cond


def weight_at_half_diameter(k: float = 6.0) -> float:
    """Weight of the farthest stencil member (d = r_s = d_s / 2)."""
    return float(weight(0.5, 1.0, k))


FACE_INTERNAL = 0
FACE_DISPLACEMENT = 1
FACE_SYMMETRY = 2
FACE_TRACTION = 3


@dataclass
class Reconstruction:
    """Assembled reconstruction operators for one mesh and order.

    Gradients act on the extended value vector [cell values; mirror values];
    `extend` produces it from cell values.  Ghost contributions (prescribed
    displacement faces) are separate coefficient arrays applied against the
    boundary value at each quadrature point.
    """

    spec: StencilSpec
    n_cells: int
    # mirror slots: value = R @ u[source]
    mirror_src: np.ndarray  # (n_m,)
    mirror_R: np.ndarray  # (n_m, 3, 3)
    # gradient operators at face quadrature points, (Nq_face, n_ext) each
    face_grad: tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]
    ghost_grad: np.ndarray  # (3, Nq_face) coefficients on the boundary value
    # Taylor extrapolation of cell fields to face centres (stabilisation)
    ustar_own: sp.csr_matrix  # (Nf, Nc)
    ustar_nb: sp.csr_matrix  # (Nf, Nc)
    # cell-centre gradients, (Nc, Nc) each
    cell_grad: tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]
    face_kind: np.ndarray  # (Nf,) internal/displacement/symmetry/traction
    face_cond: np.ndarray  # (Nf,) nan where no stencil exists
    cell_cond: np.ndarray  # (Nc,)
    face_members: np.ndarray  # (Nf,) member count, 0 where no stencil
    cell_members: np.ndarray  # (Nc,)
    face_r_s: np.ndarray  # (Nf,)
    cell_r_s: np.ndarray  # (Nc,)
    cell_abar: list  # per-cell (abar, member ids) for value extrapolation
    cell_h: np.ndarray  # (Nc,)

    @property
    def n_ext(self) -> int:
        return self.n_cells + len(self.mirror_src)

    def extend(self, u: np.ndarray) -> np.ndarray:
        """[u; mirror values] for a (Nc, 3) cell field."""
        if len(self.mirror_src) == 0:
            return u
        mirrored = np.einsum("mij,mj->mi", self.mirror_R, u[self.mirror_src])
        return np.concatenate([u, mirrored], axis=0)

    def flagged_sites(self) -> list[str]:
        out = [
            f"cell:{i}" for i in np.nonzero(self.cell_cond > COND_FLAG_THRESHOLD)[0]
        ]
        ok = ~np.isnan(self.face_cond)
        out += [
            f"face:{i}"
            for i in np.nonzero(ok & (self.face_cond > COND_FLAG_THRESHOLD))[0]
        ]
        return out

    def cell_value_operator(self, cell_q: QuadraturePointSet, centroids: np.ndarray) -> sp.csr_matrix:
        """Rows evaluating the cell Taylor polynomial at volume quadrature
        points, with the cell's own value as the constant term."""
        indices = multi_indices(self.spec.dim, self.spec.p)
        rows, cols, vals = [], [], []
        nq_total = len(cell_q.x)
        for c in range(self.n_cells):
            abar, members = self.cell_abar[c]
            s = slice(cell_q.offsets[c], cell_q.offsets[c + 1])
            delta = cell_q.x[s] - centroids[c]
            t = _derivative_transfer(delta, indices, self.cell_h[c], (0, 0, 0))
            t[:, 0] = 0.0  # constant term is the cell unknown itself
            block = t @ abar  # (nq, m)
            for qi, r in enumerate(range(cell_q.offsets[c], cell_q.offsets[c + 1])):
                rows.extend([r] * (len(members) + 1))
                cols.extend(members.tolist() + [c])
                vals.extend(block[qi].tolist() + [1.0])
        return sp.csr_matrix(
            (vals, (rows, cols)), shape=(nq_total, self.n_cells)
        )


def face_kinds(mesh: Mesh) -> np.ndarray:
    kinds = np.full(mesh.n_faces, FACE_INTERNAL, dtype=np.int64)
    table = {
        BoundaryKind.DISPLACEMENT: FACE_DISPLACEMENT,
        BoundaryKind.SYMMETRY: FACE_SYMMETRY,
        BoundaryKind.TRACTION: FACE_TRACTION,
    }
    for p in mesh.patches:
        kinds[p.start : p.start + p.count] = table[p.kind]
    return kinds


def build_reconstruction(
    mesh: Mesh,
    geom: GeometricData,
    spec: StencilSpec,
    face_q: QuadraturePointSet,
) -> Reconstruction:
    """Build stencils and assemble all reconstruction operators."""
    centroids = geom.cell_centroid
    nc = mesh.n_cells
    nf = mesh.n_faces
    if nc < spec.n_terms:
        raise ReconstructionError(
            f"mesh has {nc} cells but p={spec.p} needs at least {spec.n_terms}; "
            "lower p or refine the mesh"
        )
    size = min(spec.size, nc)
    indices = multi_indices(spec.dim, spec.p)
    kinds = face_kinds(mesh)

    # --- select members -------------------------------------------------
    cell_members = _nearest_members(centroids, centroids, size)
    has_face_stencil = kinds != FACE_TRACTION
    stencil_faces = np.nonzero(has_face_stencil)[0]
    fsites = geom.face_centroid[stencil_faces]
    n_half = (size + 1) // 2
    face_sel = _nearest_members(centroids, fsites, size)

    # mirror slots for symmetry faces; member lists per face with positions
    mirror_src: list[int] = []
    mirror_R: list[np.ndarray] = []
    face_member_ids: dict[int, np.ndarray] = {}
    face_member_pos: dict[int, np.ndarray] = {}
    face_member_ext: dict[int, np.ndarray] = {}
    for row, f in enumerate(stencil_faces):
        if kinds[f] == FACE_SYMMETRY:
            phys = face_sel[row, :n_half]
            n_b = geom.face_normal[f]
            R = np.eye(3) - 2.0 * np.outer(n_b, n_b)
            x_b = geom.face_centroid[f]
            pos_phys = centroids[phys]
            pos_mirror = pos_phys - 2.0 * ((pos_phys - x_b) @ n_b)[:, None] * n_b
            slot0 = nc + len(mirror_src)
            mirror_src.extend(phys.tolist())
            mirror_R.extend([R] * len(phys))
            face_member_ids[f] = np.concatenate([phys, phys])
            face_member_pos[f] = np.vstack([pos_phys, pos_mirror])
            face_member_ext[f] = np.concatenate(
                [phys, np.arange(slot0, slot0 + len(phys))]
            )
        else:
            ids = face_sel[row]
            face_member_ids[f] = ids
            face_member_pos[f] = centroids[ids]
            face_member_ext[f] = ids

    mirror_src_arr = np.array(mirror_src, dtype=np.int64)
    mirror_R_arr = (
        np.array(mirror_R) if mirror_R else np.empty((0, 3, 3))
    )

    # --- batched LRE solves ----------------------------------------------
    # group sites by (member count, ghost) so each group solves as one stack
    face_cond = np.full(nf, np.nan)
    face_r_s = np.zeros(nf)
    face_nm = np.zeros(nf, dtype=np.int64)
    face_abar: dict[int, np.ndarray] = {}
    groups: dict[tuple[int, bool], list[int]] = {}
    for f in stencil_faces:
        key = (len(face_member_ids[f]), kinds[f] == FACE_DISPLACEMENT)
        groups.setdefault(key, []).append(int(f))
    for (m, ghost), faces in groups.items():
        faces_arr = np.array(faces)
        pos = np.stack([face_member_pos[f] for f in faces])
        abar, r_s, cond = _batched_solve(
            pos, geom.face_centroid[faces_arr], spec, ghost
        )
        for i, f in enumerate(faces):
            face_abar[f] = abar[i]
        face_cond[faces_arr] = cond
        face_r_s[faces_arr] = r_s
        face_nm[faces_arr] = m

    cell_pos = centroids[cell_members]
    cell_abar_arr, cell_r_s, cell_cond = _batched_solve(
        cell_pos, centroids, spec, ghost=False
    )
    cell_h = 2.0 * cell_r_s

    # --- face gradient operator at quadrature points ----------------------
    n_ext = nc + len(mirror_src_arr)
    nq_total = len(face_q.x)
    grad_parts: list[list[np.ndarray]] = [[], [], []]  # (rows, cols, vals) per axis
    grad_rows: list[list[np.ndarray]] = [[], [], []]
    grad_cols: list[list[np.ndarray]] = [[], [], []]
    ghost_grad = np.zeros((3, nq_total))
    axes = [(1, 0, 0), (0, 1, 0), (0, 0, 1)][: spec.dim]
    for f in stencil_faces:
        abar = face_abar[f]
        ext_cols = face_member_ext[f]
        m = len(ext_cols)
        s0, s1 = int(face_q.offsets[f]), int(face_q.offsets[f + 1])
        delta = face_q.x[s0:s1] - geom.face_centroid[f]
        h = 2.0 * face_r_s[f]
        ghost = kinds[f] == FACE_DISPLACEMENT
        for ax, order in enumerate(axes):
            t = _derivative_transfer(delta, indices, h, order)
            block = t @ abar  # (nq, m [+ghost])
            grad_rows[ax].append(np.repeat(np.arange(s0, s1), m))
            grad_cols[ax].append(np.tile(ext_cols, s1 - s0))
            grad_parts[ax].append(block[:, :m].ravel())
            if ghost:
                ghost_grad[ax, s0:s1] = block[:, m]
    face_grad = tuple(
        sp.csr_matrix(
            (
                np.concatenate(grad_parts[ax]) if grad_parts[ax] else [],
                (
                    np.concatenate(grad_rows[ax]) if grad_rows[ax] else [],
                    np.concatenate(grad_cols[ax]) if grad_cols[ax] else [],
                ),
            ),
            shape=(nq_total, n_ext),
        )
        for ax in range(3)
    )

    # --- cell-centre gradients (delta = 0: derivative rows directly) ------
    ax_rows = [
        int(np.nonzero((indices == a).all(axis=1))[0][0])
        for a in [(1, 0, 0), (0, 1, 0)] + ([(0, 0, 1)] if spec.dim == 3 else [])
    ]
    cg_row = np.repeat(np.arange(nc), size)
    cg_col = cell_members.ravel()
    cell_grad_list = []
    for ax in range(3):
        if ax < len(ax_rows):
            vals = (cell_abar_arr[:, ax_rows[ax], :] / cell_h[:, None]).ravel()
            cell_grad_list.append(
                sp.csr_matrix((vals, (cg_row, cg_col)), shape=(nc, nc))
            )
        else:
            cell_grad_list.append(sp.csr_matrix((nc, nc)))
    cell_grad = tuple(cell_grad_list)

    # --- Taylor extrapolation of cell fields to face centres --------------
    internal = mesh.neighbour >= 0
    stab_faces = np.nonzero(internal | (kinds == FACE_DISPLACEMENT))[0]

    def _extrapolation_rows(faces: np.ndarray, cells: np.ndarray) -> sp.csr_matrix:
        delta = geom.face_centroid[faces] - centroids[cells]
        t = _derivative_transfer(delta, indices, cell_h[cells], (0, 0, 0))
        t[:, 0] = 0.0  # the constant term is the cell unknown itself
        block = np.einsum("fj,fjm->fm", t, cell_abar_arr[cells])
        rows = np.repeat(faces, size + 1)
        cols = np.column_stack([cell_members[cells], cells]).ravel()
        vals = np.column_stack([block, np.ones(len(faces))]).ravel()
        return sp.csr_matrix((vals, (rows, cols)), shape=(nf, nc))

    ustar_own = _extrapolation_rows(stab_faces, mesh.owner[stab_faces])
    int_faces = np.nonzero(internal)[0]
    ustar_nb = _extrapolation_rows(int_faces, mesh.neighbour[int_faces])

    return Reconstruction(
        spec=spec,
        n_cells=nc,
        mirror_src=mirror_src_arr,
        mirror_R=mirror_R_arr,
        face_grad=face_grad,
        ghost_grad=ghost_grad,
        ustar_own=ustar_own,
        ustar_nb=ustar_nb,
        cell_grad=cell_grad,
        face_kind=kinds,
        face_cond=face_cond,
        cell_cond=cell_cond,
        face_members=face_nm,
        cell_members=np.full(nc, size, dtype=np.int64),
        face_r_s=face_r_s,
        cell_r_s=cell_r_s,
        cell_abar=[(cell_abar_arr[c], cell_members[c]) for c in range(nc)],
        cell_h=cell_h,
    )


def dump_stencil_diagnostics(recon: Reconstruction, path: str) -> None:
    """CSV of per-site stencil size, radius, and condition estimate."""
    with open(path, "w") as fh:
        fh.write("site,members,r_s,condition,flagged\n")
        for c in range(recon.n_cells):
            fh.write(
                f"cell:{c},{recon.cell_members[c]},{recon.cell_r_s[c]:.8e},"
                f"{recon.cell_cond[c]:.8e},{int(recon.cell_cond[c] > COND_FLAG_THRESHOLD)}\n"
            )
        for f in range(len(recon.face_cond)):
            if np.isnan(recon.face_cond[f]):
                continue
            fh.write(
                f"face:{f},{recon.face_members[f]},{recon.face_r_s[f]:.8e},"
                f"{recon.face_cond[f]:.8e},{int(recon.face_cond[f] > COND_FLAG_THRESHOLD)}\n"
            )
