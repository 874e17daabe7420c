"""Stencil and least-squares reconstruction tests."""

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fvsolid.mesh import build_geometry, face_quadrature
from fvsolid.reconstruction import (
    ReconstructionError,
    StencilSpec,
    build_reconstruction,
    condition_estimate,
    dump_stencil_diagnostics,
    multi_indices,
    solve_lre,
    taylor_basis,
    weight,
)
from fvsolid.verification.meshes import box_tets, perturb, rectangle_quads


def scattered_points(n: int, dim: int, seed: int, spread: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = np.zeros((n, 3))
    pts[:, :dim] = rng.uniform(-spread, spread, size=(n, dim))
    return pts


# ---------------------------------------------------------------------------
# sizes, weights, basis
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "dim, p, n_plus, n_terms, size",
    [(2, 1, 10, 3, 13), (2, 2, 10, 6, 16), (2, 3, 10, 10, 20), (3, 3, 65, 20, 85)],
)
def test_stencil_spec_sizes(dim, p, n_plus, n_terms, size):
    spec = StencilSpec(dim, p, n_plus)
    assert spec.n_terms == n_terms
    assert spec.size == size


def test_default_surplus():
    assert StencilSpec.default_n_plus(2, 1) == 10
    assert StencilSpec.default_n_plus(2, 3) == 10
    assert StencilSpec.default_n_plus(3, 1) == 45
    assert StencilSpec.default_n_plus(3, 2) == 55
    assert StencilSpec.default_n_plus(3, 3) == 65


def test_weight_endpoints():
    assert_allclose(weight(0.0, 1.0, 6.0), 1.0, rtol=1e-15)
    assert_allclose(weight(1.0, 1.0, 6.0), 0.0, atol=1e-15)
    assert abs(weight(0.5, 1.0, 6.0) - 1.2341e-4) < 1e-8


@settings(max_examples=50, deadline=None)
@given(
    d1=st.floats(0.0, 1.0, exclude_max=True),
    step=st.floats(1e-6, 1.0),
    k=st.floats(0.5, 10.0),
)
def test_weight_strictly_decreasing(d1, step, k):
    d2 = min(d1 + step, 1.0)
    assert weight(d1, 1.0, k) > weight(d2, 1.0, k)


def test_multi_index_order_2d():
    expected = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (2, 0, 0), (1, 1, 0), (0, 2, 0)]
    assert multi_indices(2, 2).tolist() == [list(e) for e in expected]


def test_multi_index_order_3d():
    got = multi_indices(3, 2).tolist()
    expected = [
        [0, 0, 0],
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [2, 0, 0],
        [1, 1, 0],
        [1, 0, 1],
        [0, 2, 0],
        [0, 1, 1],
        [0, 0, 2],
    ]
    assert got == expected


def test_taylor_basis_at_site():
    idx = multi_indices(2, 2)
    q = taylor_basis(np.zeros(3), idx, 0.7)
    assert_allclose(q, [1, 0, 0, 0, 0, 0], atol=0)


def test_taylor_basis_unit_offsets_p1():
    idx = multi_indices(2, 1)
    q = taylor_basis(np.array([0.5, 0.5, 0.0]), idx, 0.5)
    assert_allclose(q, [1.0, 1.0, 1.0], rtol=1e-15)


def test_taylor_basis_half_on_squares():
    idx = multi_indices(2, 2)
    q = taylor_basis(np.array([0.3, 0.0, 0.0]), idx, 0.3)
    assert_allclose(q[3], 0.5, rtol=1e-15)  # (dx/h)^2 / 2!


# ---------------------------------------------------------------------------
# single-site solves
# ---------------------------------------------------------------------------


def test_constant_reproduction():
    pts = scattered_points(13, 2, 0)
    sol = solve_lre(pts, np.zeros(3), StencilSpec(2, 2, 7))
    vals = np.full(13, 1.7)
    assert_allclose(sol.value_row @ vals, 1.7, rtol=1e-10)
    for alpha in multi_indices(2, 2)[1:]:
        assert abs(sol.derivative_row(tuple(alpha)) @ vals) < 1e-9


def test_row_sum_invariants():
    pts = scattered_points(13, 2, 1)
    sol = solve_lre(pts, np.zeros(3), StencilSpec(2, 1, 10))
    assert abs(sol.value_row.sum() - 1.0) < 1e-10
    assert abs(sol.derivative_row((1, 0, 0)).sum()) < 1e-10
    assert abs(sol.derivative_row((0, 1, 0)).sum()) < 1e-10


def test_linear_exactness():
    pts = scattered_points(13, 2, 2)
    sol = solve_lre(pts, np.zeros(3), StencilSpec(2, 1, 10))
    vals = 3.0 * pts[:, 0] + 2.0 * pts[:, 1]
    assert_allclose(sol.derivative_row((1, 0, 0)) @ vals, 3.0, atol=1e-9)
    assert_allclose(sol.derivative_row((0, 1, 0)) @ vals, 2.0, atol=1e-9)


def test_third_derivative_of_cubic():
    pts = scattered_points(20, 2, 3)
    sol = solve_lre(pts, np.zeros(3), StencilSpec(2, 3, 10))
    vals = pts[:, 0] ** 3
    assert_allclose(sol.derivative_row((3, 0, 0)) @ vals, 6.0, atol=1e-7)


@settings(max_examples=40, deadline=None)
@given(
    p=st.integers(1, 3),
    seed=st.integers(0, 100),
    a=st.integers(0, 3),
    b=st.integers(0, 3),
)
def test_monomial_reproduction(p, seed, a, b):
    # D^alpha (x^a y^b) at the origin is a! b! when alpha == (a, b), else 0
    if a + b > p:
        a = min(a, p)
        b = min(b, p - a)
    spec = StencilSpec(2, p, 10)
    pts = scattered_points(spec.size, 2, seed)
    sol = solve_lre(pts, np.zeros(3), spec)
    vals = pts[:, 0] ** a * pts[:, 1] ** b
    import math

    for alpha in multi_indices(2, p):
        exact = math.factorial(a) * math.factorial(b) if (alpha[0], alpha[1]) == (a, b) else 0.0
        got = sol.derivative_row(tuple(alpha)) @ vals if alpha.sum() else sol.value_row @ vals
        tol = 1e-6 if alpha.sum() == 3 else 1e-8
        assert abs(got - exact) < tol * max(1.0, abs(exact))


def test_rows_depend_only_on_geometry():
    spec = StencilSpec(2, 2, 10)
    pts = scattered_points(spec.size, 2, 4)
    vals = np.sin(pts[:, 0]) + pts[:, 1] ** 2
    sol = solve_lre(pts, np.zeros(3), spec)
    perm = np.random.default_rng(5).permutation(len(pts))
    sol2 = solve_lre(pts[perm], np.zeros(3), spec)
    assert_allclose(sol2.value_row @ vals[perm], sol.value_row @ vals, rtol=1e-12)
    assert_allclose(
        sol2.derivative_row((1, 0, 0)) @ vals[perm],
        sol.derivative_row((1, 0, 0)) @ vals,
        rtol=1e-10,
    )


def test_ghost_row_keeps_linear_exactness():
    spec = StencilSpec(2, 1, 10)
    pts = scattered_points(spec.size, 2, 6)
    sol = solve_lre(pts, np.zeros(3), spec, ghost=True)
    vals = 3.0 * pts[:, 0] + 2.0 * pts[:, 1]
    ghost_val = 0.0  # field value at the site
    row = sol.derivative_row((1, 0, 0))
    got = row[:-1] @ vals + row[-1] * ghost_val
    assert_allclose(got, 3.0, atol=1e-9)


def test_mirrored_members_kill_normal_displacement():
    # site on the plane y=0; mirrored members carry R = I - 2 n x n values,
    # so the fitted normal component vanishes on the plane
    rng = np.random.default_rng(7)
    phys = np.zeros((7, 3))
    phys[:, 0] = rng.uniform(-1, 1, 7)
    phys[:, 1] = rng.uniform(0.1, 1, 7)
    mirrored = phys * np.array([1.0, -1.0, 1.0])
    pts = np.vstack([phys, mirrored])
    sol = solve_lre(pts, np.zeros(3), StencilSpec(2, 2, 8))
    u_phys = rng.normal(size=(7, 3))
    u_mirror = u_phys * np.array([1.0, -1.0, 1.0])  # R_b u for n = e_y
    uy = np.concatenate([u_phys[:, 1], u_mirror[:, 1]])
    assert abs(sol.value_row @ uy) < 1e-9 * max(1.0, np.abs(uy).max())


def test_condition_estimate_values():
    assert_allclose(condition_estimate(np.eye(4)), 1.0, rtol=1e-14)
    assert_allclose(condition_estimate(np.diag([1.0, 1e-14])), 1e14, rtol=1e-6)
    pts = scattered_points(13, 2, 8)
    sol = solve_lre(pts, np.zeros(3), StencilSpec(2, 1, 10))
    assert sol.cond < 1e6


def test_rank_deficient_raises():
    pts = np.zeros((16, 3))
    pts[:, 0] = np.linspace(-1, 1, 16)  # collinear: no y information
    with pytest.raises(ReconstructionError, match="n_plus"):
        solve_lre(pts, np.zeros(3), StencilSpec(2, 2, 10))


def test_too_few_cells_raises():
    mesh = rectangle_quads(2, 1)
    geom = build_geometry(mesh)
    spec = StencilSpec(2, 3, 10)
    with pytest.raises(ReconstructionError, match="lower p"):
        build_reconstruction(mesh, geom, spec, face_quadrature(mesh, geom, 2))


# ---------------------------------------------------------------------------
# assembled operators on meshes
# ---------------------------------------------------------------------------


def _linear_field(x):
    u = np.zeros((len(x), 3))
    u[:, 0] = 1.0 + 3.0 * x[:, 0] + 2.0 * x[:, 1]
    u[:, 1] = -2.0 + x[:, 0] - 4.0 * x[:, 1]
    return u


def _linear_grad(n):
    g = np.zeros((n, 3, 3))  # g[:, i, j] = du_i/dx_j
    g[:, 0, 0], g[:, 0, 1] = 3.0, 2.0
    g[:, 1, 0], g[:, 1, 1] = 1.0, -4.0
    return g


def _quadratic_field(x):
    u = np.zeros((len(x), 3))
    u[:, 0] = x[:, 0] ** 2 + 0.5 * x[:, 0] * x[:, 1]
    u[:, 1] = x[:, 1] ** 2 - x[:, 0] ** 2
    return u


def _quadratic_grad(x):
    g = np.zeros((len(x), 3, 3))
    g[:, 0, 0] = 2.0 * x[:, 0] + 0.5 * x[:, 1]
    g[:, 0, 1] = 0.5 * x[:, 0]
    g[:, 1, 0] = -2.0 * x[:, 0]
    g[:, 1, 1] = 2.0 * x[:, 1]
    return g


def _operator_gradient(recon, u_cells, face_q, ub_q):
    """Gradient at face quadrature points: g[:, i, j] = du_i/dx_j."""
    ue = recon.extend(u_cells)
    g = np.zeros((len(face_q.x), 3, 3))
    for j in range(3):
        g[:, :, j] = recon.face_grad[j] @ ue + recon.ghost_grad[j][:, None] * ub_q
    return g


@pytest.mark.parametrize("p, field, gradf", [(1, _linear_field, _linear_grad), (2, _quadratic_field, _quadratic_grad)])
def test_face_gradients_exact_on_mixed_patches(p, field, gradf):
    kinds = {"left": "displacement", "right": "displacement"}
    mesh = perturb(rectangle_quads(6, 6, kinds=kinds), 0.15, 9)
    geom = build_geometry(mesh)
    spec = StencilSpec(2, p, 10)
    face_q = face_quadrature(mesh, geom, 1 if p < 3 else 2)
    recon = build_reconstruction(mesh, geom, spec, face_q)

    u = field(geom.cell_centroid)
    ub_q = field(face_q.x)  # prescribed values on displacement faces
    g = _operator_gradient(recon, u, face_q, ub_q)
    exact = gradf(face_q.x) if p == 2 else _linear_grad(len(face_q.x))

    host_kind = recon.face_kind[face_q.host]
    rows = host_kind != 3  # traction faces carry no stencil
    assert_allclose(g[rows], exact[rows], atol=1e-9)


def test_cell_gradients_exact():
    mesh = perturb(rectangle_quads(6, 6), 0.15, 10)
    geom = build_geometry(mesh)
    spec = StencilSpec(2, 2, 10)
    recon = build_reconstruction(mesh, geom, spec, face_quadrature(mesh, geom, 1))
    u = _quadratic_field(geom.cell_centroid)
    exact = _quadratic_grad(geom.cell_centroid)
    for j in range(2):
        got = recon.cell_grad[j] @ u
        assert_allclose(got, exact[:, :, j], atol=1e-9)


def test_face_extrapolation_exact():
    mesh = perturb(rectangle_quads(6, 6, kinds={"left": "displacement"}), 0.15, 11)
    geom = build_geometry(mesh)
    spec = StencilSpec(2, 2, 10)
    recon = build_reconstruction(mesh, geom, spec, face_quadrature(mesh, geom, 1))
    u = _quadratic_field(geom.cell_centroid)
    exact = _quadratic_field(geom.face_centroid)
    own = recon.ustar_own @ u
    nb = recon.ustar_nb @ u
    n_int = mesh.n_internal_faces
    assert_allclose(own[:n_int], exact[:n_int], atol=1e-9)
    assert_allclose(nb[:n_int], exact[:n_int], atol=1e-9)
    # displacement faces extrapolate from the owner only
    disp = np.nonzero(recon.face_kind == 1)[0]
    assert_allclose(own[disp], exact[disp], atol=1e-9)


def test_symmetry_face_tangential_invariants():
    # with mirrored members, the reconstructed normal component is odd in the
    # wall distance: its tangential derivative vanishes on the plane, as does
    # the normal derivative of the tangential component
    mesh = perturb(rectangle_quads(6, 6, kinds={"bottom": "symmetry"}), 0.1, 12)
    geom = build_geometry(mesh)
    spec = StencilSpec(2, 2, 10)
    face_q = face_quadrature(mesh, geom, 1)
    recon = build_reconstruction(mesh, geom, spec, face_q)

    rng = np.random.default_rng(13)
    u = rng.normal(size=(mesh.n_cells, 3))
    ue = recon.extend(u)
    gx = recon.face_grad[0] @ ue
    gy = recon.face_grad[1] @ ue
    sym_rows = recon.face_kind[face_q.host] == 2
    scale = np.abs(u).max() / geom.face_area.min()
    assert np.abs(gx[sym_rows, 1]).max() < 1e-9 * scale  # d u_y / dx
    assert np.abs(gy[sym_rows, 0]).max() < 1e-9 * scale  # d u_x / dy


def test_symmetry_member_counts():
    mesh = rectangle_quads(5, 5, kinds={"bottom": "symmetry"})
    geom = build_geometry(mesh)
    spec = StencilSpec(2, 1, 10)  # size 13 -> 7 physical + 7 mirrored
    recon = build_reconstruction(mesh, geom, spec, face_quadrature(mesh, geom, 1))
    sym = recon.face_kind == 2
    assert np.all(recon.face_members[sym] == 14)
    assert np.all(recon.face_members[recon.face_kind == 0] == 13)
    assert len(recon.mirror_src) == 7 * int(sym.sum())


def test_stencil_tie_break_prefers_lower_ids():
    # 3x3 grid with unit spacing: the four corner cells tie at distance
    # sqrt(2) from the centre cell; surplus 4 must pick the lower ids 0, 2
    mesh = rectangle_quads(3, 3, lx=3.0, ly=3.0)
    geom = build_geometry(mesh)
    spec = StencilSpec(2, 1, 4)  # size 7
    recon = build_reconstruction(mesh, geom, spec, face_quadrature(mesh, geom, 1))
    members = set(recon.cell_abar[4][1].tolist())
    assert members == {4, 1, 3, 5, 7, 0, 2}


def test_reconstruction_3d_linear_exactness():
    mesh = box_tets(2, 2, 2)
    geom = build_geometry(mesh)
    spec = StencilSpec(3, 1, 20)
    face_q = face_quadrature(mesh, geom, 1)
    recon = build_reconstruction(mesh, geom, spec, face_q)
    x = geom.cell_centroid
    u = np.column_stack([x[:, 0] + 2 * x[:, 2], x[:, 1] - x[:, 0], x[:, 2]])
    ue = recon.extend(u)
    gz = recon.face_grad[2] @ ue
    rows = recon.face_kind[face_q.host] != 3
    assert_allclose(gz[rows, 0], 2.0, atol=1e-9)
    assert_allclose(gz[rows, 2], 1.0, atol=1e-9)


def test_diagnostics_dump(tmp_path):
    mesh = rectangle_quads(4, 4, kinds={"left": "displacement"})
    geom = build_geometry(mesh)
    recon = build_reconstruction(
        mesh, geom, StencilSpec(2, 1, 10), face_quadrature(mesh, geom, 1)
    )
    path = tmp_path / "stencils.csv"
    dump_stencil_diagnostics(recon, str(path))
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    n_stencil_faces = int(np.sum(recon.face_kind != 3))
    assert len(rows) == mesh.n_cells + n_stencil_faces
    assert all(float(r["condition"]) >= 1.0 for r in rows)
    assert all(r["flagged"] == "0" for r in rows)
