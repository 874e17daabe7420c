"""Benchmark case definitions: mesh sequences, loads, and exact fields.

Each case bundles a strictly refining mesh sequence with the material,
the boundary program, and the closed-form solution it is verified
against.  Mesh builders are lazy so a study can construct only the
levels it actually runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from ..constitutive import LinearElastic, MaterialModel
from ..mesh import Mesh
from ..residual import BoundaryData
from ..solver import SolverConfig
from .fields import (
    ExactFields,
    cantilever_fields,
    kirsch_stress,
    lame_fields,
    mms_2d_fields,
    mms_3d_fields,
)
from .meshes import (
    box_hexes,
    box_tets,
    perturb,
    plate_with_hole,
    quarter_annulus,
    rectangle_tris,
)

__all__ = [
    "BenchmarkCase",
    "cantilever_case",
    "mms_2d_case",
    "mms_3d_case",
    "mms_3d_hex_case",
    "plate_hole_case",
    "preset",
    "PRESETS",
    "pressurised_cylinder_case",
]

MeshBuilder = Callable[[], Mesh]


@dataclass(frozen=True)
class BenchmarkCase:
    """One verification problem over a refining family of meshes."""

    name: str
    dim: int
    material: MaterialModel
    boundary: BoundaryData
    fields: ExactFields
    mesh_builders: tuple[MeshBuilder, ...]
    solver: SolverConfig = field(default_factory=SolverConfig)

    def with_meshes(self, builders: Sequence[MeshBuilder]) -> "BenchmarkCase":
        return replace(self, mesh_builders=tuple(builders))


def _zero(x: np.ndarray) -> np.ndarray:
    return np.zeros((len(x), 3))


# Tight Newton tolerances keep the algebraic error well below the
# discretisation error of the finest p=3 levels.  The linear tolerance
# per Krylov solve stays above the finite-difference noise floor of the
# Jacobian action; the outer loop does the polishing.
# The generous restart matters: the near-exact Jacobian omits the
# stabilisation term, and on stretched stencils GMRES needs a deep
# Krylov space before that mismatch is resolved.
_STUDY_SOLVER_2D = SolverConfig(
    newton_tol=1e-10,
    newton_max=4,
    preconditioner="nej",
    factorisation="lu",
    gmres_tol=1e-6,
    gmres_restart=400,
)
# NEJ rows couple whole union-of-stencil neighbourhoods, which is too
# dense to factor at 3D study sizes; the compact AJ with ILU is the
# fitting preconditioner there.
_STUDY_SOLVER_3D = SolverConfig(
    newton_tol=1e-9,
    newton_max=5,
    preconditioner="aj",
    factorisation="ilu",
    gmres_restart=120,
)


def mms_2d_case(
    levels: Sequence[int] = (4, 8, 16, 31),
    *,
    amplitude: float = 0.25,
    seed: int = 23,
) -> BenchmarkCase:
    """Manufactured plane-strain field on the 0.2 m square, Dirichlet all round.

    Meshes are structured triangulations with interior vertices jittered,
    so the stencils see genuinely irregular neighbourhoods.
    """
    mat = LinearElastic(E=200e9, nu=0.3)
    fields = mms_2d_fields(mat.mu, mat.lam)
    kinds = {s: "displacement" for s in ("left", "right", "bottom", "top")}
    builders = tuple(
        (
            lambda n=n, k=k: perturb(
                rectangle_tris(n, n, lx=0.2, ly=0.2, kinds=kinds),
                amplitude,
                seed=seed + k,
            )
        )
        for k, n in enumerate(levels)
    )
    boundary = BoundaryData(
        values={name: fields.displacement for name in kinds},
        body_force=fields.body_force,
    )
    return BenchmarkCase(
        name="mms2d",
        dim=2,
        material=mat,
        boundary=boundary,
        fields=fields,
        mesh_builders=builders,
        solver=_STUDY_SOLVER_2D,
    )


_BOX_SIDES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")


def mms_3d_case(
    levels: Sequence[int] = (4, 8, 16),
    *,
    irregular: bool = False,
    amplitude: float = 0.15,
    seed: int = 11,
) -> BenchmarkCase:
    """Manufactured trigonometric field on the 0.2 m cube, Dirichlet all round.

    The structured tetrahedral family is the convergence workhorse; the
    `irregular` variant jitters interior vertices and is the mesh the
    stabilisation study runs on.
    """
    mat = LinearElastic(E=200e9, nu=0.3)
    fields = mms_3d_fields(mat.mu, mat.lam)
    kinds = {s: "displacement" for s in _BOX_SIDES}

    def builder(n: int, k: int) -> MeshBuilder:
        def build() -> Mesh:
            mesh = box_tets(n, n, n, lx=0.2, ly=0.2, lz=0.2, kinds=kinds)
            if irregular:
                return perturb(mesh, amplitude, seed=seed + k)
            return mesh

        return build

    boundary = BoundaryData(
        values={name: fields.displacement for name in kinds},
        body_force=fields.body_force,
    )
    return BenchmarkCase(
        name="mms3d-irregular" if irregular else "mms3d",
        dim=3,
        material=mat,
        boundary=boundary,
        fields=fields,
        mesh_builders=tuple(builder(n, k) for k, n in enumerate(levels)),
        solver=_STUDY_SOLVER_3D,
    )


def mms_3d_hex_case(levels: Sequence[int] = (5, 8, 12)) -> BenchmarkCase:
    """The 3D manufactured field on regular hexahedral meshes."""
    mat = LinearElastic(E=200e9, nu=0.3)
    fields = mms_3d_fields(mat.mu, mat.lam)
    kinds = {s: "displacement" for s in _BOX_SIDES}
    builders = tuple(
        (lambda n=n: box_hexes(n, n, n, lx=0.2, ly=0.2, lz=0.2, kinds=kinds))
        for n in levels
    )
    boundary = BoundaryData(
        values={name: fields.displacement for name in kinds},
        body_force=fields.body_force,
    )
    return BenchmarkCase(
        name="mms3d-hex",
        dim=3,
        material=mat,
        boundary=boundary,
        fields=fields,
        mesh_builders=builders,
        solver=_STUDY_SOLVER_3D,
    )


def cantilever_case(
    levels: Sequence[tuple[int, int]] = ((20, 2), (40, 4), (80, 8)),
    *,
    amplitude: float = 0.1,
    seed: int = 3,
) -> BenchmarkCase:
    """End-loaded slender beam with the classical polynomial solution.

    The root cross-section gets the exact displacement, the tip carries
    the parabolic shear traction, and the long edges are traction free.
    The solution is cubic in the coordinates, so p=3 must reproduce it
    to round-off.
    """
    E, nu, load = 200e9, 0.3, 1e5
    length, depth = 2.0, 0.1
    mat = LinearElastic(E=E, nu=nu)
    fields = cantilever_fields(E=E, nu=nu, load=load, length=length, depth=depth)
    kinds = {
        "left": "displacement",
        "right": "traction",
        "bottom": "traction",
        "top": "traction",
    }
    builders = tuple(
        (
            lambda nx=nx, ny=ny, k=k: perturb(
                rectangle_tris(
                    nx, ny, lx=length, ly=depth, y0=-depth / 2.0, kinds=kinds
                ),
                amplitude,
                seed=seed + k,
            )
        )
        for k, (nx, ny) in enumerate(levels)
    )
    inertia = depth**3 / 12.0

    def tip_shear(x: np.ndarray) -> np.ndarray:
        t = np.zeros((len(x), 3))
        t[:, 1] = load / (2.0 * inertia) * (depth**2 / 4.0 - x[:, 1] ** 2)
        return t

    boundary = BoundaryData(
        values={
            "left": fields.displacement,
            "right": tip_shear,
            "bottom": _zero,
            "top": _zero,
        }
    )
    # Traction-loaded problems have a small initial residual, so the
    # attainable relative reduction is bounded by the noise floor of the
    # finite-difference Jacobian action; 1e-9 sits safely above it while
    # leaving the discrete solution at round-off for this cubic field.
    return BenchmarkCase(
        name="cantilever",
        dim=2,
        material=mat,
        boundary=boundary,
        fields=fields,
        mesh_builders=builders,
        solver=replace(_STUDY_SOLVER_2D, newton_tol=1e-9),
    )


def pressurised_cylinder_case(
    levels: Sequence[tuple[int, int]] = ((6, 12), (12, 24), (24, 48)),
    *,
    amplitude: float = 0.12,
    seed: int = 5,
) -> BenchmarkCase:
    """Thick-walled cylinder under internal pressure, plane stress.

    A quarter annulus with symmetry planes on both axes; the bore carries
    the pressure as an exact radial traction and the outer rim is free.
    The curved boundaries are left as polygons on purpose: the case
    demonstrates that this does not degrade the observed orders.
    """
    E, nu, p = 10e9, 0.3, 100e6
    ri, ro = 7.0, 18.625
    mat = LinearElastic(E=E, nu=nu, plane_stress=True)
    fields = lame_fields(E=E, nu=nu, pressure=p, r_inner=ri, r_outer=ro)
    kinds = {
        "inner": "traction",
        "outer": "traction",
        "xaxis": "symmetry",
        "yaxis": "symmetry",
    }
    builders = tuple(
        (
            lambda nr=nr, nt=nt, k=k: perturb(
                quarter_annulus(nr, nt, ri, ro, tris=True, kinds=kinds),
                amplitude,
                seed=seed + k,
            )
        )
        for k, (nr, nt) in enumerate(levels)
    )

    def bore_pressure(x: np.ndarray) -> np.ndarray:
        r = np.hypot(x[:, 0], x[:, 1])
        t = np.zeros((len(x), 3))
        t[:, 0] = p * x[:, 0] / r
        t[:, 1] = p * x[:, 1] / r
        return t

    boundary = BoundaryData(values={"inner": bore_pressure, "outer": _zero})
    return BenchmarkCase(
        name="cylinder",
        dim=2,
        material=mat,
        boundary=boundary,
        fields=fields,
        mesh_builders=builders,
        solver=_STUDY_SOLVER_2D,
    )


def plate_hole_case(levels: Sequence[int] = (8, 12, 16)) -> BenchmarkCase:
    """Quarter plate with a circular hole under remote uniaxial tension.

    Structured quadrilateral meshes; the outer edges carry the exact
    traction of the infinite-plate solution, so that solution is also
    the exact one for the finite quarter model.
    """
    T, a, w = 1e6, 0.5, 2.0
    mat = LinearElastic(E=200e9, nu=0.3, plane_stress=True)
    stress = kirsch_stress(tension=T, hole_radius=a)
    fields = ExactFields(displacement=None, stress=stress, body_force=None)
    kinds = {
        "hole": "traction",
        "right": "traction",
        "top": "traction",
        "bottom": "symmetry",
        "left": "symmetry",
    }
    builders = tuple(
        (lambda n=n: plate_with_hole(n, a, w, kinds=kinds)) for n in levels
    )

    def edge_traction(x: np.ndarray, normal: np.ndarray) -> np.ndarray:
        return np.einsum("kij,j->ki", stress(x), normal)

    boundary = BoundaryData(
        values={
            "hole": _zero,
            "right": lambda x: edge_traction(x, np.array([1.0, 0.0, 0.0])),
            "top": lambda x: edge_traction(x, np.array([0.0, 1.0, 0.0])),
        }
    )
    return BenchmarkCase(
        name="plate-hole",
        dim=2,
        material=mat,
        boundary=boundary,
        fields=fields,
        mesh_builders=builders,
        solver=_STUDY_SOLVER_2D,
    )


PRESETS: dict[str, Callable[[], BenchmarkCase]] = {
    "mms2d": mms_2d_case,
    "mms3d": mms_3d_case,
    "cantilever": cantilever_case,
    "cylinder": pressurised_cylinder_case,
    "plate-hole": plate_hole_case,
}


def preset(name: str) -> BenchmarkCase:
    try:
        return PRESETS[name]()
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown case preset '{name}' (known: {known})") from None
