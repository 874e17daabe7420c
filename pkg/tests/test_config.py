"""Config parsing: exhaustive validation, round-trip, value resolution."""

import numpy as np
import pytest
import yaml

from fvsolid.config import (
    CaseConfig,
    ConfigError,
    builtin_field_names,
    dump_config,
    load_config,
    parse_config,
)

GOOD = """
case: smoke
mesh:
  generator: rectangle_tris
  args: {nx: 4, ny: 4, lx: 0.2, ly: 0.2}
material: {law: linear, E: 200.0e9, nu: 0.3}
boundary:
  left:   {kind: displacement, value: mms2d-displacement}
  right:  {kind: displacement, value: mms2d-displacement}
  bottom: {kind: displacement, value: mms2d-displacement}
  top:    {kind: displacement, value: mms2d-displacement}
body_force: mms2d-body-force
discretisation: {p: 1, alpha: 0.1}
solver: {newton_tol: 1.0e-9}
output: {directory: out, vtk: true}
"""


def parse(text):
    return parse_config(yaml.safe_load(text))


class TestParsing:
    def test_good_config(self):
        cfg = parse(GOOD)
        assert cfg.name == "smoke"
        assert cfg.discretisation.p == 1
        assert cfg.solver_config().newton_tol == 1e-9

    def test_yaml_unsigned_exponent_floats(self):
        # YAML only resolves floats with a signed exponent; the parser
        # must coerce the string form
        cfg = parse(GOOD)
        assert cfg.material["E"] == 200.0e9
        assert isinstance(cfg.material["E"], float)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "case.yaml"
        path.write_text(GOOD)
        assert load_config(path) == parse(GOOD)

    def test_round_trip(self):
        cfg = parse(GOOD)
        again = parse(dump_config(cfg))
        assert again == cfg

    def test_round_trip_with_perturbation(self):
        raw = yaml.safe_load(GOOD)
        raw["mesh"]["perturb"] = {"amplitude": 0.2, "seed": 7}
        cfg = parse_config(raw)
        assert parse(dump_config(cfg)) == cfg
        assert cfg.mesh.perturb_amplitude == 0.2

    def test_defaults(self):
        cfg = parse(
            """
mesh: {generator: rectangle_quads, args: {nx: 2, ny: 2}}
boundary:
  left: {kind: traction, value: zero}
  right: {kind: traction, value: zero}
  bottom: {kind: traction, value: zero}
  top: {kind: traction, value: zero}
"""
        )
        assert cfg.name == "case"
        assert cfg.discretisation.p == 2
        assert cfg.output.directory == "out"


class TestValidation:
    def test_errors_are_collected_not_first_failure(self):
        with pytest.raises(ConfigError) as err:
            parse(
                """
case: broken
mesh: {generator: rectangle_tris, args: {nx: 2, ny: 2}}
material: {law: linear, E: -5.0, nu: 0.3}
boundary:
  left:  {kind: clamp}
  wall:  {kind: traction, value: [0, 1, 0]}
  right: {kind: traction, value: no-such-field}
  top:   {kind: symmetry, value: [1, 0, 0]}
discretisation: {p: 4}
solver: {newton_tol: -2.0, bogus: 1}
"""
            )
        messages = err.value.errors
        assert len(messages) >= 7
        joined = "\n".join(messages)
        assert "Young's modulus" in joined
        assert "unknown kind 'clamp'" in joined
        assert "wall" in joined and "no patch of that name" in joined
        assert "no-such-field" in joined
        assert "p must be 1, 2, or 3" in joined
        assert "solver.bogus" in joined
        assert "newton_tol" in joined

    def test_unknown_patch_error_names_the_patch(self):
        with pytest.raises(ConfigError, match="boundary.flank"):
            parse(
                """
mesh: {generator: rectangle_tris, args: {nx: 2, ny: 2}}
boundary:
  flank: {kind: traction, value: zero}
  left: {kind: traction, value: zero}
  right: {kind: traction, value: zero}
  bottom: {kind: traction, value: zero}
  top: {kind: traction, value: zero}
"""
            )

    def test_order_four_rejected(self):
        with pytest.raises(ConfigError, match="p must be 1, 2, or 3"):
            parse(GOOD.replace("p: 1", "p: 4"))

    def test_missing_patch_spec_reported(self):
        with pytest.raises(ConfigError, match="mesh patch 'top' has no boundary spec"):
            parse(
                """
mesh: {generator: rectangle_tris, args: {nx: 2, ny: 2}}
boundary:
  left: {kind: traction, value: zero}
  right: {kind: traction, value: zero}
  bottom: {kind: traction, value: zero}
"""
            )

    def test_unknown_generator(self):
        with pytest.raises(ConfigError, match="unknown generator 'voronoi'"):
            parse("mesh: {generator: voronoi}")

    def test_generator_build_failure_reported(self):
        with pytest.raises(ConfigError, match="generator failed to build"):
            parse("mesh: {generator: rectangle_tris, args: {nx: 0, ny: 2}}")

    def test_missing_mesh_block(self):
        with pytest.raises(ConfigError, match="mesh: block missing"):
            parse("case: nothing")

    def test_root_must_be_mapping(self):
        with pytest.raises(ConfigError, match="root must be a mapping"):
            parse_config(["not", "a", "mapping"])

    def test_symmetry_with_value_rejected(self):
        with pytest.raises(ConfigError, match="symmetry patches carry no value"):
            parse(GOOD.replace(
                "top:    {kind: displacement, value: mms2d-displacement}",
                "top:    {kind: symmetry, value: [0, 0, 0]}",
            ))

    def test_unknown_stabilisation(self):
        with pytest.raises(ConfigError, match="stabilisation"):
            parse(GOOD.replace(
                "discretisation: {p: 1, alpha: 0.1}",
                "discretisation: {p: 1, stabilisation: upwind}",
            ))


class TestBuilding:
    def test_mesh_gets_boundary_kinds(self):
        cfg = parse(
            """
mesh: {generator: rectangle_tris, args: {nx: 2, ny: 2}}
boundary:
  left: {kind: displacement, value: zero}
  right: {kind: traction, value: [0, 1.0e6, 0]}
  bottom: {kind: symmetry}
  top: {kind: symmetry}
"""
        )
        mesh = cfg.build_mesh()
        kinds = {p.name: p.kind.name for p in mesh.patches}
        assert kinds == {
            "left": "DISPLACEMENT",
            "right": "TRACTION",
            "bottom": "SYMMETRY",
            "top": "SYMMETRY",
        }

    def test_constant_vector_value(self):
        cfg = parse(
            """
mesh: {generator: rectangle_tris, args: {nx: 2, ny: 2}}
boundary:
  left: {kind: displacement, value: zero}
  right: {kind: traction, value: [0, 2.5, 0]}
  bottom: {kind: symmetry}
  top: {kind: symmetry}
"""
        )
        bd = cfg.boundary_data()
        x = np.zeros((4, 3))
        np.testing.assert_allclose(bd.values["right"](x), [[0, 2.5, 0]] * 4)
        assert "bottom" not in bd.values

    def test_two_component_vector_padded(self):
        cfg = parse(
            """
mesh: {generator: rectangle_tris, args: {nx: 2, ny: 2}}
boundary:
  left: {kind: displacement, value: zero}
  right: {kind: traction, value: [1.0, 2.0]}
  bottom: {kind: symmetry}
  top: {kind: symmetry}
"""
        )
        bd = cfg.boundary_data()
        np.testing.assert_allclose(bd.values["right"](np.zeros((1, 3))), [[1, 2, 0]])

    def test_named_body_force_uses_config_material(self):
        cfg = parse(GOOD)
        bd = cfg.boundary_data()
        from fvsolid.verification.fields import mms_2d_fields

        mu = 200e9 / 2.6
        lam = 200e9 * 0.3 / (1.3 * 0.4)
        pts = np.array([[0.05, 0.1, 0.0], [0.12, 0.03, 0.0]])
        np.testing.assert_allclose(
            bd.body_force(pts), mms_2d_fields(mu, lam).body_force(pts), rtol=1e-12
        )

    def test_builtin_names_sorted_and_stable(self):
        names = builtin_field_names()
        assert names == sorted(names)
        assert "zero" in names
        assert "mms2d-body-force" in names
