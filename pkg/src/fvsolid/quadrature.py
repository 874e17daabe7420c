"""Quadrature rule tables for edges, triangles, and tetrahedra.

All rules are expressed in barycentric coordinates of the reference element
and carry weights normalised to sum to one, so a physical integral is the
element measure times the weighted sum of integrand samples.  Triangle rules
are Dunavant's symmetric rules; tetrahedron rules are Shunn-Ham's symmetric
rules up to degree 3 and collapsed Gauss-Jacobi tensor rules beyond; edge
rules are Gauss-Legendre.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

__all__ = ["QuadratureRule", "edge_rule", "triangle_rule", "tet_rule"]


@dataclass(frozen=True)
class QuadratureRule:
    """Reference-element rule: barycentric points, unit-sum weights, degree."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        # Renormalise away the last digit of the published tables.
        object.__setattr__(self, "weights", w / w.sum())

    @property
    def npoints(self) -> int:
        return self.points.shape[0]


MAX_EDGE_POINTS = 5


def edge_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on a segment, barycentric in the two end points."""
    if degree < 0:
        raise ValueError(f"invalid edge quadrature degree {degree}")
    npts = (degree + 2) // 2
    npts = max(npts, 1)
    if npts > MAX_EDGE_POINTS:
        raise ValueError(
            f"edge quadrature degree {degree} needs {npts} points; "
            f"table stops at {MAX_EDGE_POINTS}"
        )
    nodes, w = leggauss(npts)
    t = 0.5 * (nodes + 1.0)
    points = np.column_stack([1.0 - t, t])
    return QuadratureRule(points, 0.5 * w, 2 * npts - 1)


def _perm3(a: float, b: float, c: float) -> list[tuple[float, float, float]]:
    """Distinct permutations of a barycentric triple."""
    seen: list[tuple[float, float, float]] = []
    for p in {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}:
        seen.append(p)
    return sorted(seen)


def _sym3(groups: list[tuple[float, ...]]) -> tuple[np.ndarray, np.ndarray]:
    pts, wts = [], []
    for g in groups:
        w = g[0]
        for p in _perm3(*g[1:]):
            pts.append(p)
            wts.append(w)
    return np.array(pts), np.array(wts)


# Dunavant symmetric triangle rules, weights on the unit-measure triangle.
# Degree 3 is served by the 6-point degree-4 rule: the classical 4-point
# degree-3 rule carries a negative centroid weight, which is excluded here.
_TRIANGLE_GROUPS: dict[int, list[tuple[float, ...]]] = {
    1: [(1.0, 1 / 3, 1 / 3, 1 / 3)],
    2: [(1 / 3, 2 / 3, 1 / 6, 1 / 6)],
    4: [
        (0.223381589678011, 0.108103018168070, 0.445948490915965, 0.445948490915965),
        (0.109951743655322, 0.816847572980459, 0.091576213509771, 0.091576213509771),
    ],
    5: [
        (0.225, 1 / 3, 1 / 3, 1 / 3),
        (0.132394152788506, 0.059715871789770, 0.470142064105115, 0.470142064105115),
        (0.125939180544827, 0.797426985353087, 0.101286507323456, 0.101286507323456),
    ],
    6: [
        (0.116786275726379, 0.501426509658179, 0.249286745170910, 0.249286745170910),
        (0.050844906370207, 0.873821971016996, 0.063089014491502, 0.063089014491502),
        (0.082851075618374, 0.053145049844816, 0.310352451033785, 0.636502499121399),
    ],
}
_TRIANGLE_ACTUAL_DEGREE = {1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 6}


def triangle_rule(degree: int) -> QuadratureRule:
    """Symmetric positive-weight triangle rule exact to at least `degree`."""
    if degree not in _TRIANGLE_ACTUAL_DEGREE:
        raise ValueError(f"no triangle quadrature rule for degree {degree}")
    actual = _TRIANGLE_ACTUAL_DEGREE[degree]
    pts, wts = _sym3(_TRIANGLE_GROUPS[actual])
    return QuadratureRule(pts, wts, actual)


def _perm4(vals: tuple[float, float, float, float]) -> list[tuple[float, ...]]:
    from itertools import permutations

    return sorted(set(permutations(vals)))


# Shunn-Ham symmetric tetrahedron rules (1, 4, and 10 points).  Orbit
# parameters are refined beyond the published digits so the exactness
# conditions hold to machine precision.
_TET_TABLES: dict[int, list[tuple[float, tuple[float, float, float, float]]]] = {
    1: [(1.0, (0.25, 0.25, 0.25, 0.25))],
    2: [
        (
            0.25,
            (
                0.5854101966249685,
                0.1381966011250105,
                0.1381966011250105,
                0.1381966011250105,
            ),
        )
    ],
    3: [
        (
            0.0476331377875985,
            (
                0.7784952839318794,
                0.0738349053560402,
                0.0738349053560402,
                0.0738349053560402,
            ),
        ),
        (
            0.1349112414749344,
            (
                0.4062443435757316,
                0.4062443435757316,
                0.0937556564242684,
                0.0937556564242684,
            ),
        ),
    ],
}


def _tet_collapsed_rule(degree: int) -> QuadratureRule:
    """Tensor-product rule on the collapsed tetrahedron.

    The Duffy map x = u, y = (1-u)v, z = (1-u)(1-v)w sends the unit cube to
    the reference tetrahedron with Jacobian (1-u)^2(1-v).  Gauss-Jacobi rules
    absorb those factors, so n points per direction integrate any polynomial
    of total degree 2n-1 exactly, with every weight positive.
    """
    n = (degree + 2) // 2
    su, wu = roots_jacobi(n, 2.0, 0.0)
    sv, wv = roots_jacobi(n, 1.0, 0.0)
    sw, ww = leggauss(n)
    u, v, w = 0.5 * (su + 1.0), 0.5 * (sv + 1.0), 0.5 * (sw + 1.0)
    # [-1,1] -> [0,1] rescaling folds the Jacobian powers into the weights
    wu, wv, ww = wu / 8.0, wv / 4.0, ww / 2.0
    U, V, W = np.meshgrid(u, v, w, indexing="ij")
    x = U.ravel()
    y = ((1.0 - U) * V).ravel()
    z = ((1.0 - U) * (1.0 - V) * W).ravel()
    wts = (wu[:, None, None] * wv[None, :, None] * ww[None, None, :]).ravel()
    pts = np.column_stack([1.0 - x - y - z, x, y, z])
    return QuadratureRule(pts, 6.0 * wts, 2 * n - 1)


def tet_rule(degree: int) -> QuadratureRule:
    """Tetrahedron rule exact to `degree`: symmetric tables up to 3, collapsed
    tensor rules beyond."""
    if degree < 1:
        raise ValueError(f"invalid tetrahedron quadrature degree {degree}")
    if degree not in _TET_TABLES:
        return _tet_collapsed_rule(degree)
    pts, wts = [], []
    for w, vals in _TET_TABLES[degree]:
        for p in _perm4(vals):
            pts.append(p)
            wts.append(w)
    return QuadratureRule(np.array(pts), np.array(wts), degree)
