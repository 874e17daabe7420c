"""Error norms and convergence-order estimation.

Errors are sampled at cell centroids.  L2 is the root mean square over
cells, L-infinity the maximum absolute value; both are computed for the
displacement magnitude and the von Mises equivalent stress.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mesh import GeometricData

__all__ = [
    "NormRow",
    "average_spacing",
    "error_norms",
    "least_squares_order",
    "observed_orders",
    "von_mises",
]


def von_mises(sigma: np.ndarray) -> np.ndarray:
    """Equivalent stress of an (n, 3, 3) Cauchy stress array."""
    sxx, syy, szz = sigma[:, 0, 0], sigma[:, 1, 1], sigma[:, 2, 2]
    sxy, syz, szx = sigma[:, 0, 1], sigma[:, 1, 2], sigma[:, 2, 0]
    return np.sqrt(
        0.5 * ((sxx - syy) ** 2 + (syy - szz) ** 2 + (szz - sxx) ** 2)
        + 3.0 * (sxy**2 + syz**2 + szx**2)
    )


def average_spacing(geom: GeometricData, dim: int) -> float:
    """Mean cell volume to the power 1/d."""
    return float(np.mean(geom.cell_volume) ** (1.0 / dim))


@dataclass(frozen=True)
class NormRow:
    """Error norms of one solve against the exact fields."""

    h: float
    n_cells: int
    l2_u: float
    linf_u: float
    l2_s: float
    linf_s: float


def _l2_linf(delta: np.ndarray) -> tuple[float, float]:
    return float(np.sqrt(np.mean(delta**2))), float(np.abs(delta).max())


def error_norms(
    u: np.ndarray,
    sigma: np.ndarray,
    centroids: np.ndarray,
    exact,
    *,
    h: float,
) -> NormRow:
    """Compare cell-centred fields against `exact` (an ExactFields bundle)."""
    if exact.displacement is not None:
        du = np.linalg.norm(u, axis=1) - np.linalg.norm(
            exact.displacement(centroids), axis=1
        )
        l2_u, linf_u = _l2_linf(du)
    else:
        l2_u = linf_u = float("nan")
    ds = von_mises(sigma) - von_mises(exact.stress(centroids))
    l2_s, linf_s = _l2_linf(ds)
    return NormRow(h, len(u), l2_u, linf_u, l2_s, linf_s)


def observed_orders(h: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Pairwise orders log(e_i/e_{i+1}) / log(h_i/h_{i+1}); nan over gaps."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def least_squares_order(h: np.ndarray, e: np.ndarray) -> float:
    """Slope of log e against log h over the valid (finite, positive) rows."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    keep = np.isfinite(e) & (e > 0.0)
    if keep.sum() < 2:
        return float("nan")
    slope = np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)[0]
    return float(slope)
