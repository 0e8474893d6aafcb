from __future__ import annotations

import math

import numpy as np
import pytest

from tempered_ldg.mesh import build_mesh, eval_dg, l2_error
from tempered_ldg.projections import PROJECTIONS, l2_project, project_minus, project_plus


def sin2pi(x):
    return np.sin(2 * np.pi * x)


@pytest.mark.parametrize("name", sorted(PROJECTIONS))
def test_polynomials_reproduced(name):
    mesh = build_mesh(0.0, 1.0, 4)
    f = lambda x: 1.0 - 2.0 * x + 3.0 * x**3
    v = PROJECTIONS[name](f, mesh, 3)
    assert l2_error(v, f) < 1e-13


def test_endpoint_interpolation():
    mesh = build_mesh(0.0, 1.0, 5)
    f = lambda x: np.exp(x)
    vm = project_minus(f, mesh, 2)
    vp = project_plus(f, mesh, 2)
    for j in range(5):
        a, b = mesh.boundaries[j], mesh.boundaries[j + 1]
        assert eval_dg(vm, b, "left") == pytest.approx(math.exp(b), rel=1e-13)
        assert eval_dg(vp, a, "right") == pytest.approx(math.exp(a), rel=1e-13)


def test_lower_moments_match_l2():
    mesh = build_mesh(0.0, 1.0, 6)
    f = lambda x: np.cos(3 * x)
    l2 = l2_project(f, mesh, 3, nodes=10)
    for proj in (project_minus, project_plus):
        v = proj(f, mesh, 3, nodes=10)
        np.testing.assert_allclose(v.coeffs[:, :3], l2.coeffs[:, :3], rtol=1e-14)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("name", sorted(PROJECTIONS))
def test_projection_rates(name, k):
    errs = []
    for N in (10, 20, 40, 80):
        v = PROJECTIONS[name](sin2pi, build_mesh(0.0, 1.0, N), k, nodes=k + 4)
        errs.append(l2_error(v, sin2pi))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - (k + 1)) < 0.15)


def test_negative_degree():
    mesh = build_mesh(0.0, 1.0, 2)
    for proj in PROJECTIONS.values():
        with pytest.raises(ValueError):
            proj(sin2pi, mesh, -1)
