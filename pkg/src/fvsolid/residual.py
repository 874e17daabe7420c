"""Discrete momentum residual: fluxes, body forces, stabilisation, inertia.

The residual of cell P is

    R_P = inertia_P - surface_P - stabilisation_P - body_P

so R = 0 at equilibrium.  Internal faces are evaluated once: the owner
receives the flux with a positive sign and the neighbour with a negative
sign, which makes the internal contributions telescope exactly.  All
scatters run through `np.bincount`, so identical inputs give bit-identical
residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constitutive import (
    MaterialModel,
    deformation_gradient,
    mooney_rivlin_cauchy,
    neo_hookean_cauchy,
)
from .mesh import BoundaryKind, GeometricData, Mesh, cell_quadrature, face_quadrature
from .reconstruction import (
    FACE_DISPLACEMENT,
    FACE_TRACTION,
    Reconstruction,
    StencilSpec,
    build_reconstruction,
    face_kinds,
)

__all__ = [
    "BoundaryData",
    "ResidualConfig",
    "DiscreteState",
    "ResidualOperator",
    "quadrature_degrees",
]

VectorField = Callable[[np.ndarray], np.ndarray]


@dataclass
class BoundaryData:
    """Prescribed boundary fields keyed by patch name.

    Displacement and traction patches need a value function x -> (n, 3);
    symmetry patches must not carry one.  Load stepping scales the returned
    values (and the body force) by the current load factor.
    """

    values: dict[str, VectorField] = field(default_factory=dict)
    body_force: VectorField | None = None


@dataclass
class ResidualConfig:
    p: int
    alpha: float = 0.1
    stabilisation: str = "alpha"  # "alpha" or "over-integration"
    n_plus: int | None = None  # default depends on dim, p, and mode
    dynamic: bool = False
    density: float = 0.0

    def __post_init__(self):
        if self.p not in (1, 2, 3):
            raise ValueError(f"order p must be 1, 2, or 3, got {self.p}")
        if self.alpha < 0:
            raise ValueError("stabilisation alpha must be >= 0")
        if self.stabilisation not in ("alpha", "over-integration"):
            raise ValueError(f"unknown stabilisation mode '{self.stabilisation}'")
        if self.stabilisation == "over-integration":
            self.alpha = 0.0
        if self.dynamic and self.density <= 0:
            raise ValueError("dynamic runs need a positive density")


@dataclass
class DiscreteState:
    """Time history for the BDF2 inertia term (cell-centred values)."""

    u_old: np.ndarray
    u_oldold: np.ndarray
    v_old: np.ndarray
    v_oldold: np.ndarray
    dt: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("time step must be positive")

    def velocity(self, u_new: np.ndarray) -> np.ndarray:
        return (3.0 * u_new - 4.0 * self.u_old + self.u_oldold) / (2.0 * self.dt)

    def acceleration(self, u_new: np.ndarray) -> np.ndarray:
        v_new = self.velocity(u_new)
        return (3.0 * v_new - 4.0 * self.v_old + self.v_oldold) / (2.0 * self.dt)


def quadrature_degrees(p: int, stabilisation: str) -> tuple[int, int]:
    """(face degree, volume degree) for the reconstruction order."""
    if stabilisation == "over-integration":
        return 6, 6
    return (1, 1) if p <= 2 else (2, 2)


def surplus_for_mode(dim: int, p: int, stabilisation: str) -> int:
    if stabilisation == "over-integration":
        return {1: 60, 2: 70, 3: 80}[p]
    return StencilSpec.default_n_plus(dim, p)


class _QpointLabels:
    """Lazy 'face f, point q' labels for constitutive error reports."""

    def __init__(self, host: np.ndarray, offsets: np.ndarray, what: str):
        self.host = host
        self.offsets = offsets
        self.what = what

    def __getitem__(self, idx: int) -> str:
        h = int(self.host[idx])
        return f"{self.what} {h}, point {idx - int(self.offsets[h])}"


class ResidualOperator:
    """Precomputed discrete residual for one mesh, material, and load program.

    Everything independent of the displacement field is assembled once;
    `residual(u, load_factor)` then runs in a handful of sparse products.
    """

    def __init__(
        self,
        mesh: Mesh,
        geom: GeometricData,
        material: MaterialModel,
        boundary: BoundaryData,
        config: ResidualConfig,
    ):
        self.mesh = mesh
        self.geom = geom
        self.material = material
        self.boundary = boundary
        self.config = config

        face_deg, vol_deg = quadrature_degrees(config.p, config.stabilisation)
        self.face_q = face_quadrature(mesh, geom, face_deg)
        self.cell_q = cell_quadrature(mesh, geom, vol_deg)
        n_plus = (
            config.n_plus
            if config.n_plus is not None
            else surplus_for_mode(mesh.dim, config.p, config.stabilisation)
        )
        self.spec = StencilSpec(mesh.dim, config.p, n_plus)
        self.face_kind = face_kinds(mesh)
        # reconstruction is built on first use: a pure-traction problem with
        # no internal faces needs none at all
        self._recon: Reconstruction | None = None

        mu, lam = material.small_strain_moduli()
        self.kbar = 2.0 * mu + lam

        self._prepare_boundary()
        self._prepare_face_integration()
        self._prepare_stabilisation()
        self._prepare_body()
        if config.dynamic:
            self.vol_value = self.recon.cell_value_operator(
                self.cell_q, geom.cell_centroid
            )

    @property
    def recon(self) -> Reconstruction:
        if self._recon is None:
            self._recon = build_reconstruction(
                self.mesh, self.geom, self.spec, self.face_q
            )
        return self._recon

    # -- precomputation -----------------------------------------------------
    def _prepare_boundary(self) -> None:
        mesh, fq = self.mesh, self.face_q
        nq = len(fq.x)
        self.ub_q = np.zeros((nq, 3))  # displacement BC at face q-points
        self.traction_q = np.zeros((nq, 3))  # prescribed traction at q-points
        self.ub_face = np.zeros((mesh.n_faces, 3))  # BC at face centroids (stab)
        for patch in mesh.patches:
            fn = self.boundary.values.get(patch.name)
            if patch.kind is BoundaryKind.SYMMETRY:
                if fn is not None:
                    raise ValueError(f"symmetry patch '{patch.name}' must not carry data")
                continue
            if fn is None:
                raise ValueError(f"patch '{patch.name}' ({patch.kind.value}) needs a value")
            faces = patch.faces
            s = slice(int(fq.offsets[faces[0]]), int(fq.offsets[faces[-1] + 1]))
            vals = np.asarray(fn(fq.x[s]), dtype=float)
            if vals.shape != (s.stop - s.start, 3):
                raise ValueError(
                    f"boundary value for '{patch.name}' returned shape {vals.shape}"
                )
            if patch.kind is BoundaryKind.DISPLACEMENT:
                self.ub_face[faces] = np.asarray(fn(self.geom.face_centroid[faces]))
                # the ghost row was fitted at the face centre, so its
                # coefficient must multiply the centre value at every
                # quadrature point; anything else loses consistency
                self.ub_q[s] = self.ub_face[fq.host[s]]
            else:
                self.traction_q[s] = vals

    def _prepare_face_integration(self) -> None:
        fq, geom = self.face_q, self.geom
        host = fq.host
        self.q_host = host
        # quadrature weight times face area, per q-point
        self.qw_area = fq.w * geom.face_area[host]
        self.n_q = geom.face_normal[host]
        self.q_traction_rows = self.face_kind[host] == FACE_TRACTION
        self.any_stencil_faces = bool(np.any(self.face_kind != FACE_TRACTION))
        self._labels = _QpointLabels(host, fq.offsets, "face")

    def _prepare_stabilisation(self) -> None:
        mesh, geom = self.mesh, self.geom
        internal = mesh.neighbour >= 0
        disp = self.face_kind == FACE_DISPLACEMENT
        self.stab_internal = np.nonzero(internal)[0]
        self.stab_disp = np.nonzero(disp)[0]
        d_int = geom.d_pn[self.stab_internal]
        d_dis = geom.d_pf[self.stab_disp]
        for faces, d in ((self.stab_internal, d_int), (self.stab_disp, d_dis)):
            dn = np.abs(np.einsum("ij,ij->i", d, geom.face_normal[faces]))
            norm = np.linalg.norm(d, axis=1)
            bad = dn < 1e-14 * norm
            if np.any(bad):
                f = int(faces[np.nonzero(bad)[0][0]])
                raise ValueError(
                    f"face {f}: centre-to-centre direction is tangent to the face "
                    "(degenerate skewness), stabilisation undefined"
                )
        a = self.config.alpha * self.kbar
        dn_int = np.abs(np.einsum("ij,ij->i", d_int, geom.face_normal[self.stab_internal]))
        dn_dis = np.abs(np.einsum("ij,ij->i", d_dis, geom.face_normal[self.stab_disp]))
        self.stab_coeff_internal = a * geom.face_area[self.stab_internal] / dn_int
        self.stab_coeff_disp = a * geom.face_area[self.stab_disp] / dn_dis

    def _prepare_body(self) -> None:
        geom, cq = self.geom, self.cell_q
        self.body_cells = np.zeros((self.mesh.n_cells, 3))
        if self.boundary.body_force is None:
            return
        f_q = np.asarray(self.boundary.body_force(cq.x), dtype=float)
        host = cq.host
        w = cq.w * geom.cell_volume[host]
        for k in range(3):
            self.body_cells[:, k] = np.bincount(
                host, weights=w * f_q[:, k], minlength=self.mesh.n_cells
            )

    # -- field evaluation ---------------------------------------------------
    def face_gradient(self, u: np.ndarray, load_factor: float = 1.0) -> np.ndarray:
        """Displacement gradient at every face quadrature point, (Nq, 3, 3).

        Rows of traction faces are zero (no stencil is defined there).
        """
        g = np.zeros((len(self.face_q.x), 3, 3))
        if not self.any_stencil_faces:
            return g
        ue = self.recon.extend(u)
        for j in range(3 if self.mesh.dim == 3 else 2):
            g[:, :, j] = self.recon.face_grad[j] @ ue
            g[:, :, j] += (
                self.recon.ghost_grad[j][:, None] * (load_factor * self.ub_q)
            )
        return g

    def _flux_stress(self, grad: np.ndarray) -> np.ndarray:
        return self.material.flux_stress(grad, labels=self._labels)

    def cell_gradient(self, u: np.ndarray) -> np.ndarray:
        """Cell-centre displacement gradient, (Nc, 3, 3)."""
        g = np.zeros((self.mesh.n_cells, 3, 3))
        for j in range(3 if self.mesh.dim == 3 else 2):
            g[:, :, j] = self.recon.cell_grad[j] @ u
        return g

    def cell_cauchy_stress(self, u: np.ndarray) -> np.ndarray:
        """Cauchy stress from the cell-centre gradient, (Nc, 3, 3)."""
        grad = self.cell_gradient(u)
        m = self.material
        if m.is_linear:
            # for the linear law the flux stress already is the Cauchy stress
            return m.flux_stress(grad)
        F = deformation_gradient(grad)
        labels = [f"cell {c}" for c in range(len(grad))]
        if hasattr(m, "c10"):
            return mooney_rivlin_cauchy(F, m.c10, m.c01, m.c11, m.kappa, labels=labels)
        return neo_hookean_cauchy(F, m.mu, m.kappa, labels=labels)

    # -- residual -----------------------------------------------------------
    def residual(
        self,
        u: np.ndarray,
        load_factor: float = 1.0,
        state: DiscreteState | None = None,
    ) -> np.ndarray:
        """Per-cell force imbalance (Nc, 3); zero at equilibrium."""
        mesh, geom = self.mesh, self.geom
        nc = mesh.n_cells

        grad = self.face_gradient(u, load_factor)
        sigma = self._flux_stress(grad)
        flux = np.einsum("qij,qj->qi", sigma, self.n_q)
        flux[self.q_traction_rows] = (
            load_factor * self.traction_q[self.q_traction_rows]
        )
        # per-face integral of the traction vector
        wf = self.qw_area[:, None] * flux
        face_force = np.add.reduceat(wf, self.face_q.offsets[:-1], axis=0)

        fi, fd = self.stab_internal, self.stab_disp
        if self.config.alpha > 0.0 and (len(fi) or len(fd)):
            ustar_own = self.recon.ustar_own @ u
            ustar_nb = self.recon.ustar_nb @ u
            face_force[fi] += self.stab_coeff_internal[:, None] * (
                ustar_nb[fi] - ustar_own[fi]
            )
            face_force[fd] += self.stab_coeff_disp[:, None] * (
                load_factor * self.ub_face[fd] - ustar_own[fd]
            )

        internal = np.nonzero(mesh.neighbour >= 0)[0]
        surface = np.zeros((nc, 3))
        for k in range(3):
            surface[:, k] = np.bincount(
                mesh.owner, weights=face_force[:, k], minlength=nc
            )
            surface[:, k] -= np.bincount(
                mesh.neighbour[internal],
                weights=face_force[internal, k],
                minlength=nc,
            )

        r = -surface - load_factor * self.body_cells

        if self.config.dynamic:
            if state is None:
                raise ValueError("dynamic residual needs a DiscreteState history")
            acc_cells = state.acceleration(u)
            acc_q = self.vol_value @ acc_cells
            host = self.cell_q.host
            w = self.cell_q.w * geom.cell_volume[host]
            inertia = np.zeros((nc, 3))
            for k in range(3):
                inertia[:, k] = np.bincount(
                    host, weights=w * acc_q[:, k], minlength=nc
                )
            r += self.config.density * inertia

        if mesh.dim == 2:
            r[:, 2] = 0.0
        return r

    @property
    def n_unknowns(self) -> int:
        return self.mesh.n_cells * self.mesh.dim

    def pack(self, u: np.ndarray) -> np.ndarray:
        """Flatten the solved components of a (Nc, 3) field."""
        return u[:, : self.mesh.dim].ravel()

    def unpack(self, x: np.ndarray) -> np.ndarray:
        u = np.zeros((self.mesh.n_cells, 3))
        u[:, : self.mesh.dim] = x.reshape(self.mesh.n_cells, self.mesh.dim)
        return u
