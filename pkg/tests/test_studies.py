"""Study orchestration: level runs, order estimates, CSV artifacts."""

import dataclasses

import numpy as np
import pytest

from fvsolid.mesh import build_geometry
from fvsolid.verification.cases import mms_2d_case
from fvsolid.verification.studies import (
    LevelResult,
    alpha_study,
    conditioning_study,
    convergence_study,
    run_level,
    write_convergence_csv,
)

CASE = mms_2d_case(levels=(4, 8, 16))


def make_result(**kw):
    base = dict(
        case="x", p=1, level=0, h=0.1, n_cells=8, norms=None,
        converged=True, message="ok", newton_iters=1, reduction=1e-9,
        krylov=5, wall=0.0, res_history=(),
    )
    base.update(kw)
    return LevelResult(**base)


class TestLevelResult:
    def test_six_order_within_two(self):
        r = make_result(res_history=(1.0, 2e-3, 5e-7))
        assert r.six_order_within(2)

    def test_six_order_needs_three(self):
        r = make_result(res_history=(1.0, 0.5, 0.1, 1e-7))
        assert not r.six_order_within(2)
        assert r.six_order_within(3)

    def test_six_order_scales_with_start(self):
        r = make_result(res_history=(1e6, 0.9))
        assert r.six_order_within(2)

    def test_empty_history(self):
        assert not make_result(res_history=()).six_order_within(2)

    def test_stalled_flag(self):
        assert make_result(message="linear solver stalled twice").stalled
        assert not make_result(message="1 increment(s) converged").stalled


class TestRunLevel:
    def test_converges_on_coarse_mesh(self):
        result = run_level(CASE, 1, CASE.mesh_builders[0]())
        assert result.converged
        assert result.norms is not None
        assert result.norms.l2_u > 0
        assert result.n_cells == 32

    def test_infeasible_basis_becomes_failed_level(self):
        # 8 cells cannot carry a 10-term cubic basis; the failure must be
        # recorded, not raised
        tiny = mms_2d_case(levels=(2, 4, 8))
        result = run_level(tiny, 3, tiny.mesh_builders[0]())
        assert not result.converged
        assert result.norms is None
        assert "needs at least" in result.message


class TestStudyGuards:
    def test_needs_three_meshes(self):
        case = mms_2d_case(levels=(4, 8))
        with pytest.raises(ValueError, match="at least 3"):
            convergence_study(case, ps=(1,))

    def test_meshes_must_refine(self):
        case = mms_2d_case(levels=(8, 8, 16))
        with pytest.raises(ValueError, match="refine strictly"):
            convergence_study(case, ps=(1,))


class TestConvergenceStudy:
    @pytest.fixture(scope="class")
    def study(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("study")
        return convergence_study(CASE, ps=(1,), out_dir=out), out

    def test_rows_and_orders(self, study):
        result, _ = study
        rows = result.rows(1)
        assert len(rows) == 3
        assert all(r.converged for r in rows)
        hs = [r.h for r in rows]
        assert hs == sorted(hs, reverse=True)
        # disp converges one order above stress at p=1
        assert result.final_order(1, "l2_u") > result.final_order(1, "l2_s")

    def test_csv_schema(self, study):
        result, out = study
        path = out / f"{CASE.name}_convergence.csv"
        lines = path.read_text().splitlines()
        assert lines[0] == "case,p,h,N_c,L2_u,Linf_u,L2_s,Linf_s,order_u,order_s"
        assert len(lines) == 4  # header + one row per level
        first = lines[1].split(",")
        assert first[0] == CASE.name
        assert first[8] == "" and first[9] == ""  # no order on coarsest
        assert float(lines[2].split(",")[9]) > 0

    def test_dat_mirror(self, study):
        result, out = study
        dat = (out / f"{CASE.name}_convergence.dat").read_text()
        assert dat.startswith(f"# {CASE.name} p=1")
        lines = dat.strip().splitlines()
        assert sum(1 for ln in lines if not ln.startswith("#")) == 3  # one per level

    def test_rerun_is_bit_identical(self, study, tmp_path):
        result, out = study
        again = convergence_study(CASE, ps=(1,), out_dir=tmp_path)
        a = (out / f"{CASE.name}_convergence.csv").read_bytes()
        b = (tmp_path / f"{CASE.name}_convergence.csv").read_bytes()
        assert a == b

    def test_failed_level_leaves_gap_not_abort(self, tmp_path):
        # an infeasible coarsest level must still let the finer levels
        # report, with order estimates skipping the gap
        tiny = mms_2d_case(levels=(2, 4, 8))
        study = convergence_study(tiny, ps=(3,), out_dir=tmp_path)
        rows = study.rows(3)
        assert not rows[0].converged
        assert rows[1].converged and rows[2].converged
        orders = study.orders(3, "l2_s")
        assert np.isnan(orders[0])
        assert np.isfinite(orders[1])
        csv_lines = (tmp_path / f"{tiny.name}_convergence.csv").read_text().splitlines()
        assert len(csv_lines) == 4
        assert csv_lines[1].split(",")[4] == ""  # failed level has empty norms


class TestAlphaStudy:
    def test_structure_and_recommendation(self, tmp_path):
        result = alpha_study(CASE, alphas=(0.01, 0.1), p=1, out_dir=tmp_path)
        assert [e.alpha for e in result.entries] == [0.01, 0.1]
        assert result.recommended_alpha == 0.1
        assert result.nonconvergent_alphas == []
        assert result.entry(0.1).converged_everywhere
        assert result.entry(0.1).wall > 0
        for a in (0.01, 0.1):
            csv = tmp_path / f"{CASE.name}_alpha{a}_convergence.csv"
            assert csv.exists()


class TestConditioningStudy:
    def test_boundary_worse_than_interior(self, tmp_path):
        result = conditioning_study(
            CASE, p=2, n_plus_values=(10,), level=0, out_dir=tmp_path
        )
        row = result.row(10)
        assert row.converged
        assert row.boundary_cond_max > row.interior_cond_median
        csv = tmp_path / f"{CASE.name}_conditioning.csv"
        header = csv.read_text().splitlines()[0]
        assert header.startswith("case,p,n_plus,N_c,converged,stalled")
