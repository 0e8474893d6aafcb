from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from tempered_ldg.mesh import (
    DGCoefficients,
    build_mesh,
    eval_dg,
    gauss_rule,
    integrate_function,
    l2_error,
    legendre_table,
    locate,
    sample,
)


def test_mesh_geometry():
    mesh = build_mesh(-4.0, 4.0, 320)
    assert mesh.boundaries[0] == -4.0 and mesh.boundaries[-1] == 4.0
    np.testing.assert_allclose(mesh.cell_sizes, 0.025, rtol=1e-12)
    assert np.all(np.diff(mesh.boundaries) > 0)
    with pytest.raises(ValueError):
        build_mesh(0.0, 1.0, 0)
    with pytest.raises(ValueError):
        build_mesh(1.0, 0.0, 4)


@pytest.mark.parametrize("m", [1, 2, 3, 5, 8, 13, 20, 40, 64])
def test_gauss_rule_matches_numpy(m):
    rule = gauss_rule(m)
    x, w = np.polynomial.legendre.leggauss(m)
    np.testing.assert_allclose(rule.nodes, x, atol=1e-14)
    # numpy's own weights drift to ~1e-12 relative for large m
    np.testing.assert_allclose(rule.weights, w, rtol=5e-12)
    assert abs(rule.weights.sum() - 2.0) <= 1e-14


@pytest.mark.parametrize("m", [7, 64])
def test_gauss_rule_high_precision_oracle(m):
    rule = gauss_rule(m)
    with mpmath.workdps(40):
        for xi, wi in zip(rule.nodes, rule.weights):
            root = mpmath.findroot(lambda z: mpmath.legendre(m, z), mpmath.mpf(xi))
            dp = mpmath.diff(lambda z: mpmath.legendre(m, z), root)
            assert abs(xi - float(root)) <= 1e-15
            assert wi == pytest.approx(float(2 / ((1 - root**2) * dp**2)), rel=2e-13)


@pytest.mark.parametrize("m", [1, 2, 4, 7])
def test_gauss_rule_exactness(m):
    rule = gauss_rule(m)
    for p in range(2 * m):
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        got = np.sum(rule.weights * rule.nodes**p)
        assert got == pytest.approx(exact, rel=1e-12, abs=1e-14)


def test_gauss_rule_bounds():
    with pytest.raises(ValueError):
        gauss_rule(0)
    with pytest.raises(ValueError):
        gauss_rule(65)


def test_legendre_orthogonality():
    rule = gauss_rule(12)
    P = legendre_table(6, rule.nodes)
    gram = (P * rule.weights) @ P.T
    np.testing.assert_allclose(gram, np.diag(2.0 / (2 * np.arange(7) + 1)), atol=1e-14)
    np.testing.assert_allclose(legendre_table(4, np.array([1.0, -1.0])),
                               [[1, 1], [1, -1], [1, 1], [1, -1], [1, 1]])  # fmt: skip


def test_l2_norm_orthogonality_formula():
    rng = np.random.default_rng(3)
    mesh = build_mesh(0.0, 2.0, 7)
    v = DGCoefficients(mesh, rng.standard_normal((7, 4)))
    by_quadrature = math.sqrt(integrate_function(mesh, lambda x: _eval(v, x) ** 2, 8))
    assert v.l2_norm() == pytest.approx(by_quadrature, rel=1e-13)


def _eval(v, x):
    # evaluate at physical points arranged as (N, n) per cell
    xi = 2.0 * (x - v.mesh.boundaries[:-1, None]) / v.mesh.cell_sizes[:, None] - 1.0
    return np.einsum("jm,mjn->jn", v.coeffs, legendre_table(v.degree, xi.ravel()).reshape(
        v.degree + 1, *xi.shape))


def test_locate_and_traces():
    mesh = build_mesh(0.0, 1.0, 4)
    assert locate(mesh, 0.25, "left") == (0, 1.0)
    assert locate(mesh, 0.25, "right") == (1, -1.0)
    assert locate(mesh, 1.0, "interior") == (3, 1.0)
    assert locate(mesh, 0.0, "interior") == (0, -1.0)
    with pytest.raises(ValueError):
        locate(mesh, 0.0, "left")
    with pytest.raises(ValueError):
        locate(mesh, 1.0, "right")
    with pytest.raises(ValueError):
        locate(mesh, 1.5)

    coeffs = np.zeros((4, 2))
    coeffs[:, 0] = [1, 2, 3, 4]
    coeffs[:, 1] = 0.5
    v = DGCoefficients(mesh, coeffs)
    assert eval_dg(v, 0.25, "left") == 1.5
    assert eval_dg(v, 0.25, "right") == 1.5
    assert eval_dg(v, 0.5, "left") == 2.5
    assert eval_dg(v, 0.5, "right") == 2.5


def test_csv_round_trip():
    rng = np.random.default_rng(0)
    mesh = build_mesh(0.0, 1.0, 5)
    v = DGCoefficients(mesh, rng.standard_normal((5, 3)))
    w = DGCoefficients.from_csv(mesh, v.to_csv())
    assert np.array_equal(v.coeffs, w.coeffs)
    assert v.to_csv().splitlines()[0] == "cell,mode,value"


def test_shape_validation():
    mesh = build_mesh(0.0, 1.0, 5)
    with pytest.raises(ValueError):
        DGCoefficients(mesh, np.zeros((4, 2)))


def test_sample_is_sorted_and_symmetric():
    mesh = build_mesh(-1.0, 1.0, 6)
    x, u = sample(DGCoefficients.zeros(mesh, 2), 7)
    assert np.all(np.diff(x) > 0)
    np.testing.assert_allclose(x, -x[::-1], atol=1e-15)
    assert x.size == u.size == 42


def test_l2_error_of_exact_polynomial():
    mesh = build_mesh(0.0, 1.0, 3)
    # x on each cell: center + (h/2) xi
    coeffs = np.column_stack([mesh.centers, 0.5 * mesh.cell_sizes])
    v = DGCoefficients(mesh, coeffs)
    assert l2_error(v, lambda x: x) < 1e-15
    assert l2_error(v, lambda x: x + 1.0) == pytest.approx(1.0, rel=1e-14)
