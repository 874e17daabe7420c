"""Case configuration: a single YAML file describing mesh, material,
boundary program, discretisation, solver, and output.

Validation is exhaustive: `load_config` collects every problem it can
find and reports them all at once instead of failing on the first.
Value expressions in the boundary block are either constant vectors or
names of built-in fields; resolution happens against the parsed material
so manufactured body forces pick up the right moduli.

CSV artifacts derived from a config are deterministic: identical config
and mesh give bit-identical files.  Timing always goes to JSON, never
into a CSV.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from .constitutive import ConstitutiveError, MaterialModel, material_from_dict
from .mesh import Mesh, MeshError
from .residual import BoundaryData, ResidualConfig
from .solver import SolverConfig
from .verification import fields as exact_fields
from .verification import meshes as meshgen

__all__ = [
    "CaseConfig",
    "ConfigError",
    "load_config",
    "parse_config",
    "dump_config",
    "builtin_field_names",
]


class ConfigError(Exception):
    """All validation problems of one config, reported together."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(f"- {e}" for e in self.errors))


_GENERATORS: dict[str, Callable[..., Mesh]] = {
    "rectangle_quads": meshgen.rectangle_quads,
    "rectangle_tris": meshgen.rectangle_tris,
    "box_hexes": meshgen.box_hexes,
    "box_tets": meshgen.box_tets,
    "quarter_annulus": meshgen.quarter_annulus,
    "plate_with_hole": meshgen.plate_with_hole,
}

_KINDS = ("displacement", "traction", "symmetry")
_DEFAULT_MATERIAL = {"law": "linear", "E": 1.0, "nu": 0.3}


@dataclass(frozen=True)
class MeshSpec:
    generator: str
    args: dict[str, Any] = field(default_factory=dict)
    perturb_amplitude: float = 0.0
    perturb_seed: int = 0

    def build(self, kinds: dict[str, str] | None = None) -> Mesh:
        mesh = _GENERATORS[self.generator](**self.args, kinds=kinds)
        if self.perturb_amplitude > 0.0:
            mesh = meshgen.perturb(mesh, self.perturb_amplitude, self.perturb_seed)
        return mesh


@dataclass(frozen=True)
class PatchSpec:
    kind: str
    value: Any = None  # constant [x, y, z] or built-in field name


@dataclass(frozen=True)
class DiscretisationSpec:
    p: int = 2
    alpha: float = 0.1
    stabilisation: str = "alpha"
    n_plus: int | None = None

    def build(self) -> ResidualConfig:
        return ResidualConfig(
            p=self.p,
            alpha=self.alpha,
            stabilisation=self.stabilisation,
            n_plus=self.n_plus,
        )


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    vtk: bool = True
    write_every: int = 1  # increment output cadence


@dataclass(frozen=True)
class CaseConfig:
    name: str
    mesh: MeshSpec
    material: dict[str, Any] = field(default_factory=lambda: dict(_DEFAULT_MATERIAL))
    boundary: dict[str, PatchSpec] = field(default_factory=dict)
    body_force: Any = None
    discretisation: DiscretisationSpec = field(default_factory=DiscretisationSpec)
    solver: dict[str, Any] = field(default_factory=dict)
    output: OutputSpec = field(default_factory=OutputSpec)

    def build_material(self) -> MaterialModel:
        return material_from_dict(self.material)

    def build_mesh(self) -> Mesh:
        kinds = {patch: spec.kind for patch, spec in self.boundary.items()}
        return self.mesh.build(kinds)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(**self.solver)

    def boundary_data(self) -> BoundaryData:
        material = self.build_material()
        values = {
            patch: _resolve_value(spec.value, material)
            for patch, spec in self.boundary.items()
            if spec.kind != "symmetry"
        }
        body = None
        if self.body_force is not None:
            body = _resolve_value(self.body_force, material)
        return BoundaryData(values=values, body_force=body)


# -- built-in field registry ---------------------------------------------------
def _builtin_fields(material) -> dict[str, Callable[[np.ndarray], np.ndarray]]:
    from .verification.cases import cantilever_case, pressurised_cylinder_case

    def lazy(maker):
        # deferred so listing names never pays for building a case
        def value(x: np.ndarray) -> np.ndarray:
            return maker()(x)

        return value

    mu, lam = material.small_strain_moduli()
    return {
        "zero": lambda x: np.zeros((len(x), 3)),
        "mms2d-displacement": lazy(
            lambda: exact_fields.mms_2d_fields(mu, lam).displacement
        ),
        "mms2d-body-force": lazy(
            lambda: exact_fields.mms_2d_fields(mu, lam).body_force
        ),
        "mms3d-displacement": lazy(
            lambda: exact_fields.mms_3d_fields(mu, lam).displacement
        ),
        "mms3d-body-force": lazy(
            lambda: exact_fields.mms_3d_fields(mu, lam).body_force
        ),
        "cantilever-displacement": lazy(
            lambda: cantilever_case().fields.displacement
        ),
        "cantilever-tip-shear": lazy(
            lambda: cantilever_case().boundary.values["right"]
        ),
        "cylinder-bore-pressure": lazy(
            lambda: pressurised_cylinder_case().boundary.values["inner"]
        ),
    }


def builtin_field_names() -> list[str]:
    return sorted(_builtin_fields(material_from_dict(_DEFAULT_MATERIAL)))


def _resolve_value(value: Any, material) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(value, str):
        return _builtin_fields(material)[value]
    vec = np.zeros(3)
    vec[: len(value)] = np.asarray(value, dtype=float)

    def constant(x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(vec, (len(x), 3)).copy()

    return constant


# -- parsing with exhaustive validation ----------------------------------------
def _check_mesh(raw: Any, errors: list[str]) -> tuple[MeshSpec | None, Mesh | None]:
    if not isinstance(raw, dict):
        errors.append("mesh: block missing or not a mapping")
        return None, None
    gen = raw.get("generator")
    if gen not in _GENERATORS:
        known = ", ".join(sorted(_GENERATORS))
        errors.append(f"mesh.generator: unknown generator '{gen}' (known: {known})")
        return None, None
    args = raw.get("args", {})
    if not isinstance(args, dict):
        errors.append("mesh.args: must be a mapping of generator arguments")
        return None, None
    perturb = raw.get("perturb") or {}
    spec = MeshSpec(
        generator=gen,
        args=dict(args),
        perturb_amplitude=float(perturb.get("amplitude", 0.0)),
        perturb_seed=int(perturb.get("seed", 0)),
    )
    try:
        # built once without kinds: patch names are needed to cross-check
        # the boundary block, and kind errors are collected there instead
        return spec, spec.build()
    except (MeshError, TypeError, ValueError) as e:
        errors.append(f"mesh: generator failed to build: {e}")
        return None, None


def _numbers(raw: dict[str, Any]) -> dict[str, Any]:
    """Coerce numeric-looking strings to float: YAML resolves floats only
    when the exponent carries a sign, so '1.0e9' arrives as a string."""
    out: dict[str, Any] = {}
    for k, v in raw.items():
        if isinstance(v, str):
            try:
                out[k] = float(v)
                continue
            except ValueError:
                pass
        out[k] = v
    return out


def _check_material(raw: Any, errors: list[str]) -> dict[str, Any]:
    if raw is None:
        return dict(_DEFAULT_MATERIAL)
    if not isinstance(raw, dict):
        errors.append("material: block must be a mapping")
        return dict(_DEFAULT_MATERIAL)
    raw = _numbers(raw)
    try:
        material_from_dict(raw)
    except ConstitutiveError as e:
        errors.append(f"material: {e}")
    return raw


def _check_boundary(
    raw: Any, mesh: Mesh | None, errors: list[str]
) -> dict[str, PatchSpec]:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        errors.append("boundary: block must be a mapping of patch name to spec")
        return {}
    out: dict[str, PatchSpec] = {}
    mesh_patches = {p.name for p in mesh.patches} if mesh is not None else None
    names = builtin_field_names()
    for patch, raw_spec in raw.items():
        if not isinstance(raw_spec, dict) or "kind" not in raw_spec:
            errors.append(f"boundary.{patch}: needs a mapping with a 'kind'")
            continue
        kind = raw_spec["kind"]
        value = raw_spec.get("value")
        if kind not in _KINDS:
            errors.append(
                f"boundary.{patch}: unknown kind '{kind}' (known: {', '.join(_KINDS)})"
            )
            continue
        if mesh_patches is not None and patch not in mesh_patches:
            errors.append(
                f"boundary.{patch}: mesh has no patch of that name "
                f"(mesh patches: {', '.join(sorted(mesh_patches))})"
            )
        if kind == "symmetry":
            if value is not None:
                errors.append(f"boundary.{patch}: symmetry patches carry no value")
        elif not _check_value(value, names, f"boundary.{patch}.value", errors):
            continue
        out[patch] = PatchSpec(kind=kind, value=value)
    if mesh_patches is not None:
        for name in sorted(mesh_patches - set(raw)):
            errors.append(f"boundary: mesh patch '{name}' has no boundary spec")
    return out


def _check_value(value: Any, names: list[str], where: str, errors: list[str]) -> bool:
    if isinstance(value, str):
        if value not in names:
            errors.append(
                f"{where}: unknown built-in field '{value}' "
                f"(known: {', '.join(sorted(names))})"
            )
            return False
        return True
    if isinstance(value, (list, tuple)) and len(value) in (2, 3):
        try:
            [float(v) for v in value]
            return True
        except (TypeError, ValueError):
            pass
    errors.append(
        f"{where}: expected a built-in field name or a constant vector "
        f"of 2 or 3 components, got {value!r}"
    )
    return False


def _check_discretisation(raw: Any, errors: list[str]) -> DiscretisationSpec:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        errors.append("discretisation: block must be a mapping")
        return DiscretisationSpec()
    known = {"p", "alpha", "stabilisation", "n_plus"}
    for key in sorted(set(raw) - known):
        errors.append(
            f"discretisation.{key}: unknown option (known: {', '.join(sorted(known))})"
        )
    spec = DiscretisationSpec(
        p=raw.get("p", 2),
        alpha=float(raw.get("alpha", 0.1)),
        stabilisation=raw.get("stabilisation", "alpha"),
        n_plus=raw.get("n_plus"),
    )
    try:
        spec.build()
    except ValueError as e:
        errors.append(f"discretisation: {e}")
    return spec


def _check_solver(raw: Any, errors: list[str]) -> dict[str, Any]:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        errors.append("solver: block must be a mapping")
        return {}
    known = set(SolverConfig.__dataclass_fields__)
    for key in sorted(set(raw) - known):
        errors.append(
            f"solver.{key}: unknown option (known: {', '.join(sorted(known))})"
        )
    clean = _numbers({k: v for k, v in raw.items() if k in known})
    try:
        SolverConfig(**clean)
    except ValueError as e:
        errors.append(f"solver: {e}")
    return clean


_SECTIONS = (
    "case", "mesh", "material", "boundary", "body_force",
    "discretisation", "solver", "output",
)


def parse_config(raw: dict[str, Any]) -> CaseConfig:
    """Validate a parsed YAML mapping; raises ConfigError listing every problem."""
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a mapping"])
    errors: list[str] = []
    for key in sorted(set(raw) - set(_SECTIONS)):
        errors.append(f"{key}: unknown top-level section")

    name = raw.get("case", "case")
    mesh_spec, mesh = _check_mesh(raw.get("mesh"), errors)
    material = _check_material(raw.get("material"), errors)
    boundary = _check_boundary(raw.get("boundary"), mesh, errors)
    body = raw.get("body_force")
    if body is not None:
        _check_value(body, builtin_field_names(), "body_force", errors)
    disc = _check_discretisation(raw.get("discretisation"), errors)
    solver = _check_solver(raw.get("solver"), errors)

    raw_out = raw.get("output") or {}
    output = OutputSpec(
        directory=str(raw_out.get("directory", "out")),
        vtk=bool(raw_out.get("vtk", True)),
        write_every=int(raw_out.get("write_every", 1)),
    )

    if errors:
        raise ConfigError(errors)
    return CaseConfig(
        name=str(name),
        mesh=mesh_spec,
        material=material,
        boundary=boundary,
        body_force=body,
        discretisation=disc,
        solver=solver,
        output=output,
    )


def load_config(path: str | Path) -> CaseConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return parse_config(raw)


def dump_config(config: CaseConfig) -> str:
    """Serialise back to YAML; `parse_config(yaml.safe_load(...))` round-trips."""
    d = asdict(config)
    raw: dict[str, Any] = {
        "case": d["name"],
        "mesh": {"generator": d["mesh"]["generator"], "args": d["mesh"]["args"]},
        "material": d["material"],
        "boundary": {
            patch: {k: v for k, v in spec.items() if v is not None}
            for patch, spec in d["boundary"].items()
        },
        "discretisation": d["discretisation"],
        "solver": d["solver"],
        "output": d["output"],
    }
    if config.mesh.perturb_amplitude > 0.0:
        raw["mesh"]["perturb"] = {
            "amplitude": d["mesh"]["perturb_amplitude"],
            "seed": d["mesh"]["perturb_seed"],
        }
    if config.body_force is not None:
        raw["body_force"] = d["body_force"]
    return yaml.safe_dump(raw, sort_keys=False)
