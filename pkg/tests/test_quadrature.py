"""Exactness and sanity checks for the quadrature rule tables."""

import math

import numpy as np
import pytest

from fvsolid.quadrature import edge_rule, tet_rule, triangle_rule

# Reference elements: segment [0,1]; triangle (0,0),(1,0),(0,1); tet with
# vertices at the origin and the three unit points.
EDGE_VERTS = np.array([[0.0], [1.0]])
TRI_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
TET_VERTS = np.array(
    [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
)


def monomial_mean_edge(i):
    return 1.0 / (i + 1)


def monomial_mean_triangle(i, j):
    # integral of x^i y^j over the reference triangle, divided by its area 1/2
    return 2.0 * math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)


def monomial_mean_tet(i, j, k):
    exact = (
        math.factorial(i)
        * math.factorial(j)
        * math.factorial(k)
        / math.factorial(i + j + k + 3)
    )
    return 6.0 * exact


def quad_mean(rule, verts, exponents):
    x = rule.points @ verts
    vals = np.prod(x ** np.asarray(exponents), axis=1)
    return float(rule.weights @ vals)


@pytest.mark.parametrize("degree", range(0, 10))
def test_edge_rules_exact(degree):
    rule = edge_rule(degree)
    for i in range(rule.degree + 1):
        got = quad_mean(rule, EDGE_VERTS, [i])
        assert got == pytest.approx(monomial_mean_edge(i), rel=1e-13)


def test_edge_two_point_integrates_x_squared():
    rule = edge_rule(2)
    assert rule.npoints == 2
    assert quad_mean(rule, EDGE_VERTS, [2]) == pytest.approx(1.0 / 3.0, rel=1e-14)


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5, 6])
def test_triangle_rules_exact(degree):
    rule = triangle_rule(degree)
    assert rule.degree >= degree
    for i in range(rule.degree + 1):
        for j in range(rule.degree + 1 - i):
            got = quad_mean(rule, TRI_VERTS, [i, j])
            assert got == pytest.approx(monomial_mean_triangle(i, j), rel=1e-13)


def test_triangle_degree_one_is_centroid():
    rule = triangle_rule(1)
    assert rule.npoints == 1
    np.testing.assert_allclose(rule.points[0], [1 / 3, 1 / 3, 1 / 3])
    assert rule.weights[0] == pytest.approx(1.0)


@pytest.mark.parametrize("degree,npoints", [(1, 1), (2, 4), (3, 10)])
def test_tet_rules_exact(degree, npoints):
    rule = tet_rule(degree)
    assert rule.npoints == npoints
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            for k in range(degree + 1 - i - j):
                got = quad_mean(rule, TET_VERTS, [i, j, k])
                assert got == pytest.approx(monomial_mean_tet(i, j, k), rel=1e-13)


@pytest.mark.parametrize("degree", [4, 5, 6, 7])
def test_tet_collapsed_rules_exact(degree):
    rule = tet_rule(degree)
    assert rule.degree >= degree
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            for k in range(degree + 1 - i - j):
                got = quad_mean(rule, TET_VERTS, [i, j, k])
                assert got == pytest.approx(monomial_mean_tet(i, j, k), rel=1e-12)


def test_tet_degree_two_mean_of_linear():
    # mean of (x+y+z) over the reference tet is 3/4 of the coordinate mean 1/4
    rule = tet_rule(2)
    x = rule.points @ TET_VERTS
    got = float(rule.weights @ x.sum(axis=1))
    assert got == pytest.approx(0.75, rel=1e-13)
    for axis in range(3):
        got = float(rule.weights @ x[:, axis])
        assert got == pytest.approx(0.25, rel=1e-13)


@pytest.mark.parametrize(
    "factory,degrees",
    [
        (edge_rule, range(0, 10)),
        (triangle_rule, [1, 2, 3, 4, 5, 6]),
        (tet_rule, [1, 2, 3, 4, 5, 6]),
    ],
)
def test_weights_positive_and_normalised(factory, degrees):
    for degree in degrees:
        rule = factory(degree)
        assert np.all(rule.weights > 0)
        assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
        # barycentric coordinates: each row sums to one
        np.testing.assert_allclose(rule.points.sum(axis=1), 1.0, atol=1e-14)


@pytest.mark.parametrize(
    "factory,bad", [(edge_rule, 11), (triangle_rule, 7), (tet_rule, 0), (tet_rule, -2)]
)
def test_unsupported_degree_raises(factory, bad):
    with pytest.raises(ValueError):
        factory(bad)
