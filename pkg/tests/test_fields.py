"""Oracle tests for the closed-form benchmark fields.

Every stress form is checked against a central-difference divergence of
itself: equilibrium demands div(sigma) + b = 0, with b = 0 for the
load-free analytical solutions.  Known point values are frozen so a
transcription slip in any formula fails loudly.
"""

from __future__ import annotations

import numpy as np
import pytest

from fvsolid.constitutive import LinearElastic
from fvsolid.verification.fields import (
    cantilever_fields,
    kirsch_stress,
    lame_fields,
    mms_2d_fields,
    mms_3d_fields,
)

RNG = np.random.default_rng(20260819)


def fd_divergence(stress, points: np.ndarray, h: float) -> np.ndarray:
    """Central-difference div(sigma), rows are points, columns components."""
    out = np.zeros((len(points), 3))
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        plus = stress(points + step)
        minus = stress(points - step)
        out += (plus[:, :, j] - minus[:, :, j]) / (2.0 * h)
    return out


def stress_scale(stress, points: np.ndarray) -> float:
    return float(np.abs(stress(points)).max())


class TestMms2d:
    mat = LinearElastic(E=200e9, nu=0.3)
    fields = mms_2d_fields(mat.mu, mat.lam)

    def points(self) -> np.ndarray:
        pts = RNG.uniform(0.02, 0.18, size=(20, 3))
        pts[:, 2] = 0.0
        return pts

    def test_equilibrium(self) -> None:
        pts = self.points()
        div = fd_divergence(self.fields.stress, pts, h=1e-6)
        body = self.fields.body_force(pts)
        scale = stress_scale(self.fields.stress, pts) / 0.2
        assert np.abs(div + body).max() < 1e-6 * scale

    def test_displacement_values(self) -> None:
        u0 = self.fields.displacement(np.array([[0.0, 0.0, 0.0]]))[0]
        assert u0 == pytest.approx([0.0, np.log(3.0), 0.0], abs=1e-14)

    def test_plane_strain_gradient(self) -> None:
        # u_z = 0 and u is independent of z, so sigma_xz = sigma_yz = 0.
        s = self.fields.stress(self.points())
        assert np.abs(s[:, 0, 2]).max() == 0.0
        assert np.abs(s[:, 1, 2]).max() == 0.0
        assert np.abs(s - np.transpose(s, (0, 2, 1))).max() == 0.0


class TestMms3d:
    mat = LinearElastic(E=200e9, nu=0.3)
    fields = mms_3d_fields(mat.mu, mat.lam)

    def points(self) -> np.ndarray:
        return RNG.uniform(0.02, 0.18, size=(20, 3))

    def test_equilibrium(self) -> None:
        pts = self.points()
        div = fd_divergence(self.fields.stress, pts, h=1e-6)
        body = self.fields.body_force(pts)
        scale = stress_scale(self.fields.stress, pts) / 0.05
        assert np.abs(div + body).max() < 1e-6 * scale

    def test_amplitudes(self) -> None:
        # Peak of a_x sin(4 pi x) sin(2 pi y) sin(pi z) over the cube.
        x = np.array([[1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0]]) * 0.2 / 0.2
        x = np.array([[0.125, 0.25, 0.5]])
        u = self.fields.displacement(x)[0]
        assert u == pytest.approx([2e-6, 4e-6, 6e-6], rel=1e-12)

    def test_fixed_boundary_component(self) -> None:
        # sin(4 pi x) vanishes on x = 0, so the whole field does.
        pts = self.points()
        pts[:, 0] = 0.0
        assert np.abs(self.fields.displacement(pts)).max() == 0.0

    def test_point_value(self) -> None:
        u = self.fields.displacement(np.array([[0.05, 0.05, 0.1]]))[0]
        s4, s2, s1 = np.sin(0.2 * np.pi), np.sin(0.1 * np.pi), np.sin(0.1 * np.pi)
        assert u == pytest.approx(np.array([2e-6, 4e-6, 6e-6]) * s4 * s2 * s1)


class TestCantilever:
    E, nu, load = 200e9, 0.3, 1e5
    length, depth = 2.0, 0.1
    fields = cantilever_fields(E=E, nu=nu, load=load, length=length, depth=depth)

    def points(self) -> np.ndarray:
        pts = RNG.uniform(0.05, 0.95, size=(20, 3))
        pts[:, 0] *= self.length
        pts[:, 1] = (pts[:, 1] - 0.5) * self.depth
        pts[:, 2] = 0.0
        return pts

    def test_equilibrium(self) -> None:
        pts = self.points()
        div = fd_divergence(self.fields.stress, pts, h=1e-7)
        scale = stress_scale(self.fields.stress, pts) / self.depth
        assert np.abs(div).max() < 1e-6 * scale

    def test_long_edges_traction_free(self) -> None:
        pts = self.points()
        for sign in (-1.0, 1.0):
            edge = pts.copy()
            edge[:, 1] = sign * self.depth / 2.0
            s = self.fields.stress(edge)
            t = s @ np.array([0.0, sign, 0.0])
            assert np.abs(t).max() < 1e-9 * stress_scale(self.fields.stress, pts)

    def test_end_shear_resultant(self) -> None:
        # Integrated sigma_xy over the x = L cross-section carries the load.
        y = np.linspace(-self.depth / 2.0, self.depth / 2.0, 2001)
        pts = np.column_stack([np.full_like(y, self.length), y, np.zeros_like(y)])
        sxy = self.fields.stress(pts)[:, 0, 1]
        assert np.trapezoid(sxy, y) == pytest.approx(self.load, rel=1e-6)
        assert np.abs(self.fields.stress(pts)[:, 0, 0]).max() < 1e-6

    def test_frozen_values(self) -> None:
        tip = self.fields.displacement(np.array([[self.length, 0.0, 0.0]]))[0]
        assert tip[1] == pytest.approx(0.01458795, abs=1e-8)
        root = self.fields.stress(
            np.array([[0.0, self.depth / 2.0, 0.0], [0.0, -self.depth / 2.0, 0.0]])
        )
        assert root[0, 0, 0] == pytest.approx(-1.2e8, rel=1e-12)
        assert root[1, 0, 0] == pytest.approx(1.2e8, rel=1e-12)

    def test_root_centre_pinned(self) -> None:
        u = self.fields.displacement(np.array([[0.0, 0.0, 0.0]]))[0]
        assert np.abs(u).max() < 1e-15

    def test_displacement_is_cubic(self) -> None:
        # Fourth differences of a cubic vanish identically, so a p=3
        # reconstruction can represent the field exactly.
        t = np.linspace(0.2, 1.8, 7)
        for axis in (0, 1):
            pts = np.zeros((7, 3))
            pts[:, axis] = t if axis == 0 else t * 0.05 - 0.05
            pts[:, 1 - axis] = 0.03 if axis == 0 else 0.7
            u = self.fields.displacement(pts)
            d4 = np.diff(u, n=4, axis=0)
            assert np.abs(d4).max() < 1e-12 * np.abs(u).max()


class TestLame:
    E, nu = 10e9, 0.3
    p, ri, ro = 100e6, 7.0, 18.625
    fields = lame_fields(E=E, nu=nu, pressure=p, r_inner=ri, r_outer=ro)

    def points(self) -> np.ndarray:
        r = RNG.uniform(self.ri * 1.05, self.ro * 0.95, 20)
        th = RNG.uniform(0.05, np.pi / 2.0 - 0.05, 20)
        return np.column_stack([r * np.cos(th), r * np.sin(th), np.zeros(20)])

    def test_equilibrium(self) -> None:
        pts = self.points()
        div = fd_divergence(self.fields.stress, pts, h=1e-6)
        scale = stress_scale(self.fields.stress, pts) / self.ri
        assert np.abs(div).max() < 1e-6 * scale

    def test_radial_traction(self) -> None:
        th = RNG.uniform(0.0, np.pi / 2.0, 16)
        for radius, want in ((self.ri, -self.p), (self.ro, 0.0)):
            pts = np.column_stack(
                [radius * np.cos(th), radius * np.sin(th), np.zeros(16)]
            )
            n = pts / radius
            s = self.fields.stress(pts)
            srr = np.einsum("ki,kij,kj->k", n, s, n)
            assert srr == pytest.approx(np.full(16, want), abs=1e-6 * self.p)

    def test_hoop_stress_at_bore(self) -> None:
        s = self.fields.stress(np.array([[self.ri, 0.0, 0.0]]))[0]
        assert s[1, 1] == pytest.approx(132.89798059270916e6, rel=1e-12)

    def test_matches_radial_ode_oracle(self) -> None:
        # Independent check: solve the axisymmetric Navier equation
        # u'' + u'/r - u/r^2 = 0 by second-order finite differences with
        # the plane-stress traction conditions sigma_rr(Ri) = -p,
        # sigma_rr(Ro) = 0, where sigma_rr = E/(1-nu^2) (u' + nu u/r).
        n = 4001
        r = np.linspace(self.ri, self.ro, n)
        dr = r[1] - r[0]
        A = np.zeros((n, n))
        b = np.zeros(n)
        for i in range(1, n - 1):
            A[i, i - 1] = 1.0 / dr**2 - 1.0 / (2.0 * dr * r[i])
            A[i, i] = -2.0 / dr**2 - 1.0 / r[i] ** 2
            A[i, i + 1] = 1.0 / dr**2 + 1.0 / (2.0 * dr * r[i])
        k = self.E / (1.0 - self.nu**2)
        # one-sided second-order derivative stencils at the two ends
        A[0, 0] = k * (-1.5 / dr + self.nu / r[0])
        A[0, 1] = k * (2.0 / dr)
        A[0, 2] = k * (-0.5 / dr)
        b[0] = -self.p
        A[-1, -1] = k * (1.5 / dr + self.nu / r[-1])
        A[-1, -2] = k * (-2.0 / dr)
        A[-1, -3] = k * (0.5 / dr)
        u_fd = np.linalg.solve(A, b)
        pts = np.column_stack([r, np.zeros(n), np.zeros(n)])
        u_exact = self.fields.displacement(pts)[:, 0]
        assert np.abs(u_fd - u_exact).max() < 1e-6 * np.abs(u_exact).max()

    def test_radial_displacement_profile(self) -> None:
        # u_r(r) = (c/E) ((1 - nu) r + (1 + nu) Ro^2 / r), radial direction.
        r = np.linspace(self.ri, self.ro, 9)
        pts = np.column_stack([r, np.zeros(9), np.zeros(9)])
        c = self.p * self.ri**2 / (self.ro**2 - self.ri**2)
        want = (c / self.E) * ((1.0 - self.nu) * r + (1.0 + self.nu) * self.ro**2 / r)
        u = self.fields.displacement(pts)
        assert u[:, 0] == pytest.approx(want, rel=1e-12)
        assert np.abs(u[:, 1]).max() < 1e-18
        # Rotating the sample point must rotate the displacement with it.
        th = 0.77
        q = np.column_stack([r * np.cos(th), r * np.sin(th), np.zeros(9)])
        uq = self.fields.displacement(q)
        assert np.hypot(uq[:, 0], uq[:, 1]) == pytest.approx(want, rel=1e-12)


class TestKirsch:
    T, a = 1e6, 0.5
    stress = staticmethod(kirsch_stress(tension=1e6, hole_radius=0.5))

    def points(self) -> np.ndarray:
        r = RNG.uniform(self.a * 1.2, self.a * 6.0, 20)
        th = RNG.uniform(0.05, np.pi / 2.0 - 0.05, 20)
        return np.column_stack([r * np.cos(th), r * np.sin(th), np.zeros(20)])

    def test_equilibrium(self) -> None:
        pts = self.points()
        div = fd_divergence(self.stress, pts, h=1e-7)
        scale = stress_scale(self.stress, pts) / self.a
        assert np.abs(div).max() < 1e-6 * scale

    def test_hole_traction_free(self) -> None:
        th = np.linspace(0.0, 2.0 * np.pi, 24, endpoint=False)
        pts = np.column_stack(
            [self.a * np.cos(th), self.a * np.sin(th), np.zeros_like(th)]
        )
        n = pts / self.a
        t = np.einsum("kij,kj->ki", self.stress(pts), n)
        assert np.abs(t).max() < 1e-9 * self.T

    def test_concentration_factor(self) -> None:
        s = self.stress(np.array([[0.0, self.a, 0.0]]))[0]
        assert s[0, 0] == pytest.approx(3.0 * self.T, rel=1e-12)

    def test_far_field(self) -> None:
        s = self.stress(np.array([[400.0 * self.a, 300.0 * self.a, 0.0]]))[0]
        assert s[0, 0] == pytest.approx(self.T, rel=1e-4)
        assert abs(s[1, 1]) < 1e-4 * self.T
        assert abs(s[0, 1]) < 1e-4 * self.T
