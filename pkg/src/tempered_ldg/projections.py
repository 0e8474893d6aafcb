"""L2 and Gauss-Radau projections onto piecewise polynomials."""

from __future__ import annotations

import numpy as np

from tempered_ldg.mesh import DGCoefficients, Mesh1D, SpaceFunction, gauss_rule, legendre_table


def _modal_moments(f: SpaceFunction, mesh: Mesh1D, k: int, nodes: int) -> np.ndarray:
    # (f, P_m)_{I_j} / (P_m, P_m)_{I_j}
    rule = gauss_rule(nodes)
    table = legendre_table(k, rule.nodes)
    values = f(mesh.to_physical(rule.nodes))
    norm = (2.0 * np.arange(k + 1) + 1.0) / 2.0
    return (values * rule.weights[None, :]) @ table.T * norm[None, :]


def l2_project(
    f: SpaceFunction, mesh: Mesh1D, k: int, nodes: int | None = None
) -> DGCoefficients:
    """Cellwise L2 projection; ``nodes`` defaults to ``k + 2`` Gauss points."""
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")
    return DGCoefficients(mesh, _modal_moments(f, mesh, k, nodes or k + 2))


def project_minus(
    f: SpaceFunction, mesh: Mesh1D, k: int, nodes: int | None = None
) -> DGCoefficients:
    """Projection orthogonal to ``P^{k-1}`` that interpolates ``f`` at right endpoints."""
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")

    coeffs = np.zeros((mesh.num_cells, k + 1))
    if k > 0:
        coeffs[:, :k] = _modal_moments(f, mesh, k - 1, nodes or k + 2)
    right = f(mesh.boundaries[1:])
    # P_m(1) = 1
    coeffs[:, k] = right - coeffs[:, :k].sum(axis=1)
    return DGCoefficients(mesh, coeffs)


def project_plus(
    f: SpaceFunction, mesh: Mesh1D, k: int, nodes: int | None = None
) -> DGCoefficients:
    """Projection orthogonal to ``P^{k-1}`` that interpolates ``f`` at left endpoints."""
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")

    coeffs = np.zeros((mesh.num_cells, k + 1))
    if k > 0:
        coeffs[:, :k] = _modal_moments(f, mesh, k - 1, nodes or k + 2)
    left = f(mesh.boundaries[:-1])
    # P_m(-1) = (-1)^m
    signs = (-1.0) ** np.arange(k + 1)
    coeffs[:, k] = signs[k] * (left - coeffs[:, :k] @ signs[:k])
    return DGCoefficients(mesh, coeffs)


PROJECTIONS = {"l2": l2_project, "minus": project_minus, "plus": project_plus}
