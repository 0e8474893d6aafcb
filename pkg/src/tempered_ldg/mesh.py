"""Uniform 1D meshes, Gauss-Legendre rules and modal Legendre DG fields."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np

SpaceFunction = Callable[[np.ndarray], np.ndarray]
Side = Literal["left", "right", "interior"]

MAX_GAUSS_NODES = 64


@dataclass(frozen=True, eq=False)
class Mesh1D:
    x_left: float
    x_right: float
    num_cells: int
    boundaries: np.ndarray

    @property
    def cell_sizes(self) -> np.ndarray:
        return np.diff(self.boundaries)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.boundaries[1:] + self.boundaries[:-1])

    @property
    def h(self) -> float:
        return float(np.max(self.cell_sizes))

    def to_physical(self, xi: np.ndarray) -> np.ndarray:
        """Map reference points ``xi`` to every cell; shape ``(N, len(xi))``."""
        return self.centers[:, None] + 0.5 * self.cell_sizes[:, None] * np.asarray(xi)[None, :]


def build_mesh(x_left: float, x_right: float, num_cells: int) -> Mesh1D:
    if num_cells < 1:
        raise ValueError(f"need at least one cell, got {num_cells}")
    if not x_left < x_right:
        raise ValueError(f"empty interval [{x_left}, {x_right}]")

    boundaries = np.linspace(x_left, x_right, num_cells + 1)
    boundaries.setflags(write=False)
    return Mesh1D(float(x_left), float(x_right), int(num_cells), boundaries)


# {{{ Legendre polynomials and quadrature


def legendre_table(degree: int, xi: np.ndarray) -> np.ndarray:
    """Values ``P_m(xi)`` for ``m = 0..degree``; shape ``(degree + 1, len(xi))``."""
    xi = np.asarray(xi, dtype=np.float64)
    table = np.empty((degree + 1, xi.size))
    table[0] = 1.0
    if degree >= 1:
        table[1] = xi
    for m in range(1, degree):
        table[m + 1] = ((2 * m + 1) * xi * table[m] - m * table[m - 1]) / (m + 1)
    return table


def _legendre_with_derivative(m: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(1, m):
        p0, p1 = p1, ((2 * j + 1) * x * p1 - j * p0) / (j + 1)
    # derivative from P_{m-1} and P_m
    dp = m * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@dataclass(frozen=True, eq=False)
class QuadRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size


@lru_cache(maxsize=None)
def gauss_rule(m: int) -> QuadRule:
    """Gauss-Legendre rule with ``m`` nodes on ``[-1, 1]``, via Newton iteration."""
    if not 1 <= m <= MAX_GAUSS_NODES:
        raise ValueError(f"unsupported number of Gauss nodes {m}; expected 1..{MAX_GAUSS_NODES}")
    if m == 1:
        nodes, weights = np.array([0.0]), np.array([2.0])
    else:
        i = np.arange(1, m + 1)
        x = -np.cos(np.pi * (i - 0.25) / (m + 0.5))
        for _ in range(100):
            p, dp = _legendre_with_derivative(m, x)
            dx = p / dp
            x = x - dx
            if np.max(np.abs(dx)) < 1.0e-15:
                break
        p, dp = _legendre_with_derivative(m, x)
        x = x - p / dp

        # enforce exact symmetry of the rule
        x = 0.5 * (x - x[::-1])
        if m % 2 == 1:
            x[m // 2] = 0.0
        _, dp = _legendre_with_derivative(m, x)
        weights = 2.0 / ((1.0 - x * x) * dp * dp)
        weights = 0.5 * (weights + weights[::-1])
        nodes = x

    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(nodes, weights)


# }}}


# {{{ DG fields


@dataclass(frozen=True, eq=False)
class DGCoefficients:
    """Piecewise polynomial ``sum_m coeffs[j, m] P_m(xi_j(x))`` on each cell."""

    mesh: Mesh1D
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        if self.coeffs.ndim != 2 or self.coeffs.shape[0] != self.mesh.num_cells:
            raise ValueError(
                f"coefficient array of shape {self.coeffs.shape} does not match "
                f"{self.mesh.num_cells} cells"
            )

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    def ravel(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    @classmethod
    def from_vector(cls, mesh: Mesh1D, vec: np.ndarray, degree: int) -> DGCoefficients:
        return cls(mesh, np.asarray(vec).reshape(mesh.num_cells, degree + 1))

    @classmethod
    def zeros(cls, mesh: Mesh1D, degree: int) -> DGCoefficients:
        return cls(mesh, np.zeros((mesh.num_cells, degree + 1)))

    def l2_norm(self) -> float:
        k = self.degree
        modal = 2.0 / (2.0 * np.arange(k + 1) + 1.0)
        sq = np.sum(0.5 * self.mesh.cell_sizes[:, None] * self.coeffs**2 * modal[None, :])
        return math.sqrt(sq)

    def at_reference(self, xi: np.ndarray) -> np.ndarray:
        """Values at reference points ``xi`` in every cell; shape ``(N, len(xi))``."""
        return self.coeffs @ legendre_table(self.degree, xi)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["cell", "mode", "value"])
        for j, row in enumerate(self.coeffs):
            for m, c in enumerate(row):
                writer.writerow([j, m, f"{c:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, mesh: Mesh1D, text: str) -> DGCoefficients:
        rows = list(csv.DictReader(io.StringIO(text)))
        degree = max(int(r["mode"]) for r in rows)
        coeffs = np.zeros((mesh.num_cells, degree + 1))
        for r in rows:
            coeffs[int(r["cell"]), int(r["mode"])] = float(r["value"])
        return cls(mesh, coeffs)


def locate(mesh: Mesh1D, x: float, side: Side = "interior") -> tuple[int, float]:
    """Return the cell index and reference coordinate used to evaluate at ``x``.

    At an interface, ``side="left"`` selects the trace from the left cell and
    ``side="right"`` the trace from the right cell; ``"interior"`` behaves like
    ``"right"`` except at the right end of the domain.
    """
    b = mesh.boundaries
    if not b[0] <= x <= b[-1]:
        raise ValueError(f"x={x!r} lies outside [{b[0]}, {b[-1]}]")

    if side == "left":
        j = int(np.searchsorted(b, x, side="left")) - 1
        if j < 0:
            raise ValueError(f"no cell to the left of x={x!r}")
    elif side == "right":
        j = int(np.searchsorted(b, x, side="right")) - 1
        if j >= mesh.num_cells:
            raise ValueError(f"no cell to the right of x={x!r}")
    elif side == "interior":
        j = min(int(np.searchsorted(b, x, side="right")) - 1, mesh.num_cells - 1)
    else:
        raise ValueError(f"unknown side {side!r}")

    xi = 2.0 * (x - b[j]) / (b[j + 1] - b[j]) - 1.0
    return j, float(np.clip(xi, -1.0, 1.0))


def eval_dg(v: DGCoefficients, x: float, side: Side = "interior") -> float:
    j, xi = locate(v.mesh, x, side)
    return float(v.coeffs[j] @ legendre_table(v.degree, np.array([xi]))[:, 0])


def sample(v: DGCoefficients, points_per_cell: int) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate ``v`` at cell-midpoint-rule points; returns sorted ``(x, u)``."""
    xi = -1.0 + (2.0 * np.arange(points_per_cell) + 1.0) / points_per_cell
    x = v.mesh.to_physical(xi)
    return x.reshape(-1), v.at_reference(xi).reshape(-1)


def l2_error(v: DGCoefficients, f: SpaceFunction, nodes: int | None = None) -> float:
    """``||v - f||`` on the mesh, by Gauss quadrature with ``k + 5`` nodes per cell."""
    rule = gauss_rule(nodes if nodes is not None else v.degree + 5)
    x = v.mesh.to_physical(rule.nodes)
    diff = v.at_reference(rule.nodes) - f(x)
    sq = np.sum(0.5 * v.mesh.cell_sizes[:, None] * rule.weights[None, :] * diff**2)
    return math.sqrt(sq)


def integrate_function(mesh: Mesh1D, f: SpaceFunction, nodes: int) -> float:
    rule = gauss_rule(nodes)
    x = mesh.to_physical(rule.nodes)
    return float(np.sum(0.5 * mesh.cell_sizes[:, None] * rule.weights[None, :] * f(x)))


# }}}
