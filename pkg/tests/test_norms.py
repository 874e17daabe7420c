"""Error-norm and convergence-order arithmetic."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fvsolid.mesh import build_geometry
from fvsolid.verification.fields import ExactFields
from fvsolid.verification.meshes import rectangle_quads
from fvsolid.verification.norms import (
    average_spacing,
    error_norms,
    least_squares_order,
    observed_orders,
    von_mises,
)


def test_von_mises_uniaxial() -> None:
    s = np.zeros((1, 3, 3))
    s[0, 0, 0] = 7.0
    assert von_mises(s)[0] == pytest.approx(7.0)


def test_von_mises_pure_shear() -> None:
    s = np.zeros((1, 3, 3))
    s[0, 0, 1] = s[0, 1, 0] = 2.0
    assert von_mises(s)[0] == pytest.approx(2.0 * np.sqrt(3.0))


def test_von_mises_hydrostatic_is_zero() -> None:
    s = np.eye(3)[None, :, :] * 5.0
    assert von_mises(s)[0] == pytest.approx(0.0, abs=1e-12)


def test_average_spacing_uniform_grid() -> None:
    mesh = rectangle_quads(5, 4, lx=1.0, ly=0.8)
    geom = build_geometry(mesh)
    assert average_spacing(geom, mesh.dim) == pytest.approx(0.2)


def _fields(u_cells: np.ndarray, s_cells: np.ndarray) -> ExactFields:
    return ExactFields(
        displacement=lambda x: u_cells,
        stress=lambda x: s_cells,
        body_force=None,
    )


def test_error_norms_single_cell() -> None:
    u = np.array([[3.0, 0.0, 0.0]])
    s = np.zeros((1, 3, 3))
    exact = _fields(np.zeros((1, 3)), np.zeros((1, 3, 3)))
    row = error_norms(u, s, np.zeros((1, 3)), exact, h=0.1)
    assert row.l2_u == pytest.approx(3.0)
    assert row.linf_u == pytest.approx(3.0)


def test_error_norms_two_cells() -> None:
    u = np.array([[0.0, 0.0, 0.0], [0.0, 4.0, 0.0]])
    s = np.zeros((2, 3, 3))
    exact = _fields(np.zeros((2, 3)), np.zeros((2, 3, 3)))
    row = error_norms(u, s, np.zeros((2, 3)), exact, h=0.1)
    assert row.l2_u == pytest.approx(np.sqrt(8.0))
    assert row.linf_u == pytest.approx(4.0)
    assert row.n_cells == 2


def test_error_norms_exact_match_is_zero() -> None:
    rng = np.random.default_rng(3)
    u = rng.normal(size=(5, 3))
    s = rng.normal(size=(5, 3, 3))
    s = s + np.transpose(s, (0, 2, 1))
    row = error_norms(u, s, np.zeros((5, 3)), _fields(u, s), h=0.1)
    assert row.l2_u == 0.0 and row.linf_s == 0.0


def test_observed_orders_exact_power_law() -> None:
    h = np.array([0.4, 0.2, 0.1])
    e = 5.0 * h**3
    assert observed_orders(h, e) == pytest.approx([3.0, 3.0])


def test_observed_orders_gap_gives_nan() -> None:
    h = np.array([0.4, 0.2, 0.1])
    e = np.array([1.0, np.nan, 0.01])
    orders = observed_orders(h, e)
    assert np.isnan(orders).all()


def test_least_squares_order_matches_power_law() -> None:
    h = np.array([0.4, 0.2, 0.1, 0.05])
    assert least_squares_order(h, 2.0 * h**2) == pytest.approx(2.0)


def test_least_squares_order_skips_gaps() -> None:
    h = np.array([0.4, 0.2, 0.1, 0.05])
    e = 2.0 * h**2
    e[1] = np.nan
    assert least_squares_order(h, e) == pytest.approx(2.0)
    assert np.isnan(least_squares_order(h, np.full(4, np.nan)))


@settings(max_examples=30)
@given(
    scale=st.floats(min_value=1e-6, max_value=1e6),
    order=st.floats(min_value=0.5, max_value=4.0),
)
def test_order_estimate_is_scale_invariant(scale: float, order: float) -> None:
    h = np.array([0.4, 0.2, 0.1])
    e = scale * h**order
    assert observed_orders(h, e) == pytest.approx([order, order], rel=1e-9)


@given(perm=st.permutations(list(range(6))))
def test_norms_are_permutation_invariant(perm: list[int]) -> None:
    rng = np.random.default_rng(11)
    u = rng.normal(size=(6, 3))
    s = rng.normal(size=(6, 3, 3))
    centroids = rng.normal(size=(6, 3))
    exact = _fields(np.zeros((6, 3)), np.zeros((6, 3, 3)))
    base = error_norms(u, s, centroids, exact, h=0.1)
    p = np.asarray(perm)
    shuffled = error_norms(u[p], s[p], centroids[p], exact, h=0.1)
    assert shuffled.l2_u == pytest.approx(base.l2_u)
    assert shuffled.linf_u == pytest.approx(base.linf_u)
    assert shuffled.l2_s == pytest.approx(base.l2_s)
    assert shuffled.linf_s == pytest.approx(base.linf_s)
