import math

import numpy as np
import pytest

from pdwg.basis import (EdgeBasis, basis_dim, edge_mass_diag, element_basis,
                        eval_basis, eval_basis_grad, eval_basis_lap)
from pdwg.checks import random_triangle
from pdwg.quadrature import (make_edge_rule, make_tri_rule, tri_rule_physical)

REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def tri_monomial_exact(a, b):
    # integral of x^a y^b over the reference triangle
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def test_tri_rule_weight_sum():
    rule = make_tri_rule(1)
    assert np.sum(rule.weights) == pytest.approx(0.5, abs=1e-15)


def test_tri_rule_x_moment():
    rule = make_tri_rule(1)
    x = rule.points[:, 1]
    assert float(np.sum(rule.weights * x)) == pytest.approx(1.0 / 6.0, abs=1e-14)


def test_tri_rule_x2y3():
    rule = make_tri_rule(5)
    x, y = rule.points[:, 1], rule.points[:, 2]
    got = float(np.sum(rule.weights * x ** 2 * y ** 3))
    assert got == pytest.approx(1.0 / 420.0, abs=1e-15)


@pytest.mark.parametrize("degree", [0, 1, 2, 3, 4, 6, 8, 10, 12, 16, 20])
def test_tri_rule_exactness(degree):
    rule = make_tri_rule(degree)
    assert rule.exactness_degree >= degree
    x, y = rule.points[:, 1], rule.points[:, 2]
    for a in range(rule.exactness_degree + 1):
        for b in range(rule.exactness_degree + 1 - a):
            exact = tri_monomial_exact(a, b)
            got = float(np.sum(rule.weights * x ** a * y ** b))
            assert abs(got - exact) <= 1e-12 * max(1.0, abs(exact))


def test_tri_rule_symmetric():
    rule = make_tri_rule(6)
    # relabeling barycentric coordinates permutes the rule onto itself
    base = sorted(map(tuple, np.round(
        np.column_stack([rule.points, rule.weights]), 12)))
    for perm in ((1, 2, 0), (0, 2, 1)):
        swapped = sorted(map(tuple, np.round(
            np.column_stack([rule.points[:, perm], rule.weights]), 12)))
        assert swapped == base


def test_tri_rule_rejects_high_degree():
    with pytest.raises(ValueError):
        make_tri_rule(21)


def test_edge_rule_basics():
    rule = make_edge_rule(1)
    assert rule.points.shape == (1,)
    assert rule.points[0] == pytest.approx(0.0, abs=1e-15)
    assert rule.weights[0] == pytest.approx(2.0, abs=1e-15)

    two = make_edge_rule(3)
    assert len(two.points) == 2
    assert float(np.sum(two.weights * two.points ** 2)) == pytest.approx(
        2.0 / 3.0, abs=1e-15)

    four = make_edge_rule(7)
    assert len(four.points) == 4
    assert float(np.sum(four.weights * four.points ** 6)) == pytest.approx(
        2.0 / 7.0, abs=1e-14)

    with pytest.raises(ValueError):
        make_edge_rule(41)


def test_element_basis_ordering_and_dim():
    basis = element_basis(2, REF)
    assert basis.dim == basis_dim(2) == 6
    assert [tuple(e) for e in basis.exponents] == [
        (0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_element_basis_constant_and_linear():
    basis = element_basis(2, REF)
    pts = np.array([[0.2, 0.3], [0.1, 0.05]])
    vals = eval_basis(basis, pts)
    grads = eval_basis_grad(basis, pts)
    assert np.allclose(vals[:, 0], 1.0)
    assert np.allclose(grads[:, 0, :], 0.0)
    # second function is (x - xc)/h: gradient (1/h, 0) everywhere
    assert np.allclose(grads[:, 1, 0], 1.0 / basis.scale)
    assert np.allclose(grads[:, 1, 1], 0.0)


def test_basis_laplacian_matches_fd(rng):
    basis = element_basis(3, random_triangle(rng))
    p = rng.uniform(0.2, 0.4, size=(5, 2))
    h = 1e-5
    lap = eval_basis_lap(basis, p)
    fd = (eval_basis(basis, p + [h, 0]) + eval_basis(basis, p - [h, 0])
          + eval_basis(basis, p + [0, h]) + eval_basis(basis, p - [0, h])
          - 4 * eval_basis(basis, p)) / h ** 2
    assert np.allclose(lap, fd, atol=1e-4)


def test_gram_spd_on_random_triangles(rng):
    for _ in range(10):
        verts = random_triangle(rng)
        for degree in (1, 2, 3):
            basis = element_basis(degree, verts)
            rule = make_tri_rule(2 * degree)
            pts, w = tri_rule_physical(rule, verts)
            v = eval_basis(basis, pts)
            gram = (v * w[:, None]).T @ v
            np.linalg.cholesky(0.5 * (gram + gram.T))  # raises if not SPD


def test_edge_basis_endpoint_and_mass(rng):
    basis = EdgeBasis(2)
    vals = eval_basis(basis, np.array([1.0]))
    assert np.allclose(vals, 1.0)

    length = 0.37
    n_modes = 3
    diag = edge_mass_diag(n_modes, length)
    assert np.allclose(diag, length / (2 * np.arange(3) + 1))
    rule = make_edge_rule(2 * (n_modes - 1))
    legv = np.polynomial.legendre.legvander(rule.points, n_modes - 1)
    gram = (legv * (rule.weights * length / 2.0)[:, None]).T @ legv
    assert np.allclose(np.diag(gram), diag, atol=1e-15)
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) <= 1e-13 * length
