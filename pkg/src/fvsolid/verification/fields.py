"""Closed-form exact fields for the benchmark cases.

Each factory binds material and geometry constants into plain callables over
(n, 3) position arrays.  Body forces are the negated stress divergences of
the corresponding displacement fields; they were derived symbolically once
and are frozen here, with finite-difference oracle tests guarding every form
against transcription slips.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ExactFields",
    "mms_2d_fields",
    "mms_3d_fields",
    "cantilever_fields",
    "lame_fields",
    "kirsch_stress",
]


@dataclass(frozen=True)
class ExactFields:
    """Exact solution bundle: displacement, Cauchy stress, body force.

    `displacement` may be None for cases whose closed form is known only
    in stress (error norms then cover stress alone).
    """

    displacement: Optional[Callable[[np.ndarray], np.ndarray]]  # (n,3) -> (n,3)
    stress: Callable[[np.ndarray], np.ndarray]  # (n,3) -> (n,3,3)
    body_force: Optional[Callable[[np.ndarray], np.ndarray]] = None


def _stress_from_gradient(g: np.ndarray, mu: float, lam: float) -> np.ndarray:
    tr = np.trace(g, axis1=1, axis2=2)
    s = mu * (g + np.transpose(g, (0, 2, 1)))
    s[:, 0, 0] += lam * tr
    s[:, 1, 1] += lam * tr
    s[:, 2, 2] += lam * tr
    return s


# -- trigonometric/exponential manufactured field, 2D plane strain -----------
def mms_2d_fields(mu: float, lam: float) -> ExactFields:
    """u = (e^{x^2} sin y, ln(3+y) cos x + sin y, 0), plane strain."""

    def displacement(xyz: np.ndarray) -> np.ndarray:
        x, y = xyz[:, 0], xyz[:, 1]
        u = np.zeros((len(xyz), 3))
        u[:, 0] = np.exp(x**2) * np.sin(y)
        u[:, 1] = np.log(3.0 + y) * np.cos(x) + np.sin(y)
        return u

    def gradient(xyz: np.ndarray) -> np.ndarray:
        x, y = xyz[:, 0], xyz[:, 1]
        ex2 = np.exp(x**2)
        g = np.zeros((len(xyz), 3, 3))
        g[:, 0, 0] = 2.0 * x * ex2 * np.sin(y)
        g[:, 0, 1] = ex2 * np.cos(y)
        g[:, 1, 0] = -np.log(3.0 + y) * np.sin(x)
        g[:, 1, 1] = np.cos(x) / (3.0 + y) + np.cos(y)
        return g

    def stress(xyz: np.ndarray) -> np.ndarray:
        return _stress_from_gradient(gradient(xyz), mu, lam)

    def body_force(xyz: np.ndarray) -> np.ndarray:
        x, y = xyz[:, 0], xyz[:, 1]
        ex2 = np.exp(x**2)
        f = np.zeros((len(xyz), 3))
        f[:, 0] = (lam + mu) * np.sin(x) / (y + 3.0) - ex2 * np.sin(y) * (
            2.0 * lam * (2.0 * x**2 + 1.0) + mu * (8.0 * x**2 + 3.0)
        )
        f[:, 1] = (
            (lam + 2.0 * mu) * np.cos(x) / (y + 3.0) ** 2
            - 2.0 * (lam + mu) * x * ex2 * np.cos(y)
            + (lam + 2.0 * mu) * np.sin(y)
            + mu * np.log(y + 3.0) * np.cos(x)
        )
        return f

    return ExactFields(displacement, stress, body_force)


# -- trigonometric manufactured field, 3D -------------------------------------
def mms_3d_fields(
    mu: float, lam: float, amplitudes: tuple[float, float, float] = (2e-6, 4e-6, 6e-6)
) -> ExactFields:
    """u_i = a_i sin(4 pi x) sin(2 pi y) sin(pi z)."""
    a = np.asarray(amplitudes, dtype=float)

    def factors(xyz):
        x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
        return (
            np.sin(4 * np.pi * x),
            np.cos(4 * np.pi * x),
            np.sin(2 * np.pi * y),
            np.cos(2 * np.pi * y),
            np.sin(np.pi * z),
            np.cos(np.pi * z),
        )

    def displacement(xyz: np.ndarray) -> np.ndarray:
        s4, _, s2, _, s1, _ = factors(xyz)
        return a[None, :] * (s4 * s2 * s1)[:, None]

    def gradient(xyz: np.ndarray) -> np.ndarray:
        s4, c4, s2, c2, s1, c1 = factors(xyz)
        g = np.zeros((len(xyz), 3, 3))
        for i in range(3):
            g[:, i, 0] = a[i] * 4 * np.pi * c4 * s2 * s1
            g[:, i, 1] = a[i] * 2 * np.pi * s4 * c2 * s1
            g[:, i, 2] = a[i] * np.pi * s4 * s2 * c1
        return g

    def stress(xyz: np.ndarray) -> np.ndarray:
        return _stress_from_gradient(gradient(xyz), mu, lam)

    def body_force(xyz: np.ndarray) -> np.ndarray:
        s4, c4, s2, c2, s1, c1 = factors(xyz)
        pi2 = np.pi**2
        ax, ay, az = a
        f = np.zeros((len(xyz), 3))
        f[:, 0] = pi2 * (
            ax * (16.0 * lam + 37.0 * mu) * s4 * s2 * s1
            - 8.0 * ay * (lam + mu) * c4 * c2 * s1
            - 4.0 * az * (lam + mu) * c4 * s2 * c1
        )
        f[:, 1] = pi2 * (
            -8.0 * ax * (lam + mu) * c4 * c2 * s1
            + ay * (4.0 * lam + 25.0 * mu) * s4 * s2 * s1
            - 2.0 * az * (lam + mu) * s4 * c2 * c1
        )
        f[:, 2] = pi2 * (
            -4.0 * ax * (lam + mu) * c4 * s2 * c1
            - 2.0 * ay * (lam + mu) * s4 * c2 * c1
            + az * (lam + 22.0 * mu) * s4 * s2 * s1
        )
        return f

    return ExactFields(displacement, stress, body_force)


# -- end-loaded cantilever, plane strain --------------------------------------
def cantilever_fields(
    E: float, nu: float, load: float, length: float, depth: float
) -> ExactFields:
    """Cubic-polynomial bending field for a beam on [0, L] x [-D/2, D/2].

    The x = 0 edge carries the analytic displacement, the x = L edge the
    parabolic shear traction with resultant `load`; the long edges are
    traction-free.  Plane strain enters through the effective moduli
    E/(1 - nu^2) and nu/(1 - nu).
    """
    inertia = depth**3 / 12.0
    Eb = E / (1.0 - nu**2)
    nub = nu / (1.0 - nu)
    P, L, D = load, length, depth

    def displacement(xyz: np.ndarray) -> np.ndarray:
        x, y = xyz[:, 0], xyz[:, 1]
        u = np.zeros((len(xyz), 3))
        u[:, 0] = -P * y / (6.0 * Eb * inertia) * (
            (6.0 * L - 3.0 * x) * x + (2.0 + nub) * (y**2 - D**2 / 4.0)
        )
        u[:, 1] = P / (6.0 * Eb * inertia) * (
            3.0 * nub * y**2 * (L - x)
            + (4.0 + 5.0 * nub) * D**2 * x / 4.0
            + (3.0 * L - x) * x**2
        )
        return u

    def stress(xyz: np.ndarray) -> np.ndarray:
        x, y = xyz[:, 0], xyz[:, 1]
        s = np.zeros((len(xyz), 3, 3))
        s[:, 0, 0] = P * (x - L) * y / inertia
        s[:, 0, 1] = s[:, 1, 0] = P / (2.0 * inertia) * (D**2 / 4.0 - y**2)
        s[:, 2, 2] = nu * s[:, 0, 0]
        return s

    return ExactFields(displacement, stress, body_force=None)


# -- internally pressurised thick-walled cylinder, plane stress ---------------
def lame_fields(
    E: float, nu: float, pressure: float, r_inner: float, r_outer: float
) -> ExactFields:
    """Radially symmetric thick-cylinder solution on a quarter annulus."""
    p, ri, ro = pressure, r_inner, r_outer
    c = p * ri**2 / (ro**2 - ri**2)

    def displacement(xyz: np.ndarray) -> np.ndarray:
        x, y = xyz[:, 0], xyz[:, 1]
        r = np.hypot(x, y)
        ur = c / E * ((1.0 - nu) * r + (1.0 + nu) * ro**2 / r)
        u = np.zeros((len(xyz), 3))
        u[:, 0] = ur * x / r
        u[:, 1] = ur * y / r
        return u

    def stress(xyz: np.ndarray) -> np.ndarray:
        x, y = xyz[:, 0], xyz[:, 1]
        r2 = x**2 + y**2
        s_rr = c * (1.0 - ro**2 / r2)
        s_tt = c * (1.0 + ro**2 / r2)
        ct, st = x / np.sqrt(r2), y / np.sqrt(r2)
        s = np.zeros((len(xyz), 3, 3))
        s[:, 0, 0] = s_rr * ct**2 + s_tt * st**2
        s[:, 1, 1] = s_rr * st**2 + s_tt * ct**2
        s[:, 0, 1] = s[:, 1, 0] = (s_rr - s_tt) * ct * st
        return s

    return ExactFields(displacement, stress, body_force=None)


# -- circular hole in an infinite plate under remote tension ------------------
def kirsch_stress(tension: float, hole_radius: float) -> Callable[[np.ndarray], np.ndarray]:
    """Cauchy stress around a traction-free hole, remote sigma_xx = tension."""
    T, a = tension, hole_radius

    def stress(xyz: np.ndarray) -> np.ndarray:
        x, y = xyz[:, 0], xyz[:, 1]
        r2 = x**2 + y**2
        r = np.sqrt(r2)
        q2 = a**2 / r2
        q4 = q2**2
        th = np.arctan2(y, x)
        c2t, s2t = np.cos(2.0 * th), np.sin(2.0 * th)
        s_rr = 0.5 * T * (1.0 - q2) + 0.5 * T * (1.0 - 4.0 * q2 + 3.0 * q4) * c2t
        s_tt = 0.5 * T * (1.0 + q2) - 0.5 * T * (1.0 + 3.0 * q4) * c2t
        s_rt = -0.5 * T * (1.0 + 2.0 * q2 - 3.0 * q4) * s2t
        ct, st = x / r, y / r
        s = np.zeros((len(xyz), 3, 3))
        s[:, 0, 0] = s_rr * ct**2 + s_tt * st**2 - 2.0 * s_rt * ct * st
        s[:, 1, 1] = s_rr * st**2 + s_tt * ct**2 + 2.0 * s_rt * ct * st
        s[:, 0, 1] = s[:, 1, 0] = (s_rr - s_tt) * ct * st + s_rt * (ct**2 - st**2)
        return s

    return stress
