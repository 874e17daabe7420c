"""Stress evaluation for the three material laws, plus kinematic helpers.

Displacement gradients follow grad[i, j] = du_i / dx_j, so the deformation
gradient is F = I + grad.  All functions broadcast over leading axes: pass
(..., 3, 3) stacks to evaluate many quadrature points at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConstitutiveError",
    "LinearElastic",
    "NeoHookean",
    "MooneyRivlin",
    "MaterialModel",
    "material_from_dict",
    "deformation_gradient",
    "linear_elastic_stress",
    "neo_hookean_cauchy",
    "mooney_rivlin_cauchy",
    "piola_from_cauchy",
    "von_mises",
]


class ConstitutiveError(Exception):
    """Raised for invalid material parameters or inadmissible states."""


_I3 = np.eye(3)


def _validate_base(E: float, nu: float) -> None:
    if E <= 0:
        raise ConstitutiveError(f"Young's modulus must be positive, got {E}")
    if not (-1.0 < nu < 0.5):
        raise ConstitutiveError(f"Poisson ratio must lie in (-1, 0.5), got {nu}")


@dataclass(frozen=True)
class LinearElastic:
    """Small-strain isotropic elasticity.

    With `plane_stress`, the effective lambda' = 2 mu lambda / (lambda + 2 mu)
    replaces lambda and the out-of-plane normal stress is forced to zero.
    """

    E: float
    nu: float
    plane_stress: bool = False

    def __post_init__(self):
        _validate_base(self.E, self.nu)

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def lam(self) -> float:
        lam = self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))
        if self.plane_stress:
            return 2.0 * self.mu * lam / (lam + 2.0 * self.mu)
        return lam

    @property
    def kappa(self) -> float:
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def is_linear(self) -> bool:
        return True

    def small_strain_moduli(self) -> tuple[float, float]:
        return self.mu, self.lam

    def flux_stress(self, grad: np.ndarray, labels=None) -> np.ndarray:
        sigma = linear_elastic_stress(grad, self.mu, self.lam)
        if self.plane_stress:
            sigma[..., 2, 2] = 0.0
        return sigma


@dataclass(frozen=True)
class NeoHookean:
    E: float
    nu: float

    def __post_init__(self):
        _validate_base(self.E, self.nu)

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def lam(self) -> float:
        return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))

    @property
    def kappa(self) -> float:
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def is_linear(self) -> bool:
        return False

    def small_strain_moduli(self) -> tuple[float, float]:
        return self.mu, self.lam

    def flux_stress(self, grad: np.ndarray, labels=None) -> np.ndarray:
        F = deformation_gradient(grad)
        sigma = neo_hookean_cauchy(F, self.mu, self.kappa, labels=labels)
        return piola_from_cauchy(sigma, F)


@dataclass(frozen=True)
class MooneyRivlin:
    c10: float
    c01: float
    c11: float
    kappa: float

    def __post_init__(self):
        if self.kappa <= 0:
            raise ConstitutiveError(f"bulk modulus must be positive, got {self.kappa}")
        if self.c10 < 0 or self.c01 < 0:
            raise ConstitutiveError("c10 and c01 must be non-negative")

    @property
    def mu(self) -> float:
        # linearised small-strain shear modulus
        return 2.0 * (self.c10 + self.c01)

    @property
    def lam(self) -> float:
        return self.kappa - 2.0 / 3.0 * self.mu

    @property
    def is_linear(self) -> bool:
        return False

    def small_strain_moduli(self) -> tuple[float, float]:
        return self.mu, self.lam

    def flux_stress(self, grad: np.ndarray, labels=None) -> np.ndarray:
        F = deformation_gradient(grad)
        sigma = mooney_rivlin_cauchy(
            F, self.c10, self.c01, self.c11, self.kappa, labels=labels
        )
        return piola_from_cauchy(sigma, F)


MaterialModel = LinearElastic | NeoHookean | MooneyRivlin


def material_from_dict(data: dict) -> MaterialModel:
    """Build a material from a configuration mapping (law + parameters)."""
    table = {
        "linear": LinearElastic,
        "neo-hookean": NeoHookean,
        "mooney-rivlin": MooneyRivlin,
    }
    kind = data.get("law")
    if kind not in table:
        raise ConstitutiveError(
            f"unknown material law '{kind}' (expected one of: {', '.join(table)})"
        )
    params = {k: v for k, v in data.items() if k != "law"}
    try:
        return table[kind](**params)
    except TypeError as e:
        raise ConstitutiveError(f"bad parameters for law '{kind}': {e}") from e


def deformation_gradient(grad: np.ndarray) -> np.ndarray:
    """F = I + grad for grad[i, j] = du_i / dx_j."""
    return _I3 + np.asarray(grad, dtype=float)


def _check_positive_jacobian(J: np.ndarray, labels) -> None:
    bad = J <= 0.0
    if np.any(bad):
        idx = int(np.argmax(bad.ravel()))
        where = labels[idx] if labels is not None else f"entry {idx}"
        raise ConstitutiveError(
            f"inverted element at {where}: det F = {J.ravel()[idx]:.3e}"
        )


def _dev(A: np.ndarray) -> np.ndarray:
    tr = np.trace(A, axis1=-2, axis2=-1)
    return A - (tr[..., None, None] / 3.0) * _I3


def linear_elastic_stress(grad: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """Engineering stress mu (grad + grad^T) + lambda tr(grad) I."""
    grad = np.asarray(grad, dtype=float)
    tr = np.trace(grad, axis1=-2, axis2=-1)
    return mu * (grad + np.swapaxes(grad, -1, -2)) + lam * tr[..., None, None] * _I3


def neo_hookean_cauchy(
    F: np.ndarray, mu: float, kappa: float, labels=None
) -> np.ndarray:
    """Cauchy stress (mu/J) dev(b_iso) + (kappa/2)((J^2-1)/J) I."""
    F = np.asarray(F, dtype=float)
    J = np.linalg.det(F)
    _check_positive_jacobian(J, labels)
    b = F @ np.swapaxes(F, -1, -2)
    b_iso = J[..., None, None] ** (-2.0 / 3.0) * b
    vol = 0.5 * kappa * (J**2 - 1.0) / J
    return (mu / J)[..., None, None] * _dev(b_iso) + vol[..., None, None] * _I3


def mooney_rivlin_cauchy(
    F: np.ndarray, c10: float, c01: float, c11: float, kappa: float, labels=None
) -> np.ndarray:
    """Three-parameter Mooney-Rivlin Cauchy stress."""
    F = np.asarray(F, dtype=float)
    J = np.linalg.det(F)
    _check_positive_jacobian(J, labels)
    b = F @ np.swapaxes(F, -1, -2)
    B = J[..., None, None] ** (-2.0 / 3.0) * b
    i1 = np.trace(B, axis1=-2, axis2=-1)
    tr_B2 = np.trace(B @ B, axis1=-2, axis2=-1)
    i2 = 0.5 * (i1**2 - tr_B2)
    Binv = np.linalg.inv(B)
    term_vol = 0.5 * kappa * (J**2 - 1.0)
    term1 = 2.0 * (c10 + c11 * (i2 - 3.0))
    term2 = 2.0 * (c01 + c11 * (i1 - 3.0))
    sigma = (
        term_vol[..., None, None] * _I3
        + term1[..., None, None] * _dev(B)
        - term2[..., None, None] * _dev(Binv)
    )
    return sigma / J[..., None, None]


def piola_from_cauchy(sigma: np.ndarray, F: np.ndarray) -> np.ndarray:
    """First Piola-Kirchhoff stress P = J sigma F^-T."""
    F = np.asarray(F, dtype=float)
    J = np.linalg.det(F)
    Finv_t = np.swapaxes(np.linalg.inv(F), -1, -2)
    return J[..., None, None] * np.asarray(sigma) @ Finv_t


def von_mises(sigma: np.ndarray) -> np.ndarray:
    """Equivalent stress from the symmetric stress tensor."""
    s = np.asarray(sigma, dtype=float)
    dxx = s[..., 0, 0] - s[..., 1, 1]
    dyy = s[..., 1, 1] - s[..., 2, 2]
    dzz = s[..., 2, 2] - s[..., 0, 0]
    shear = s[..., 0, 1] ** 2 + s[..., 1, 2] ** 2 + s[..., 2, 0] ** 2
    return np.sqrt(0.5 * (dxx**2 + dyy**2 + dzz**2) + 3.0 * shear)
