r"""LDG discretization of ``-kappa u_xx`` with alternating fluxes.

The auxiliary variable ``p ~ u_x`` is eliminated through the (diagonal)
modal mass matrix, so the only linear system ever solved is

.. math::

    K = l_0 M + \kappa \tau^\alpha L, \qquad L = -D M^{-1} G,

where ``G`` maps ``u`` to the right-hand side of the ``p`` equation (flux
``u^-``) and ``D`` maps ``p`` to the ``u`` equation (flux ``p^+``).

For homogeneous Dirichlet data ``u-hat = 0`` at both ends and ``p-hat`` is the
interior trace. That closure alone leaves ``P_k`` on the last cell in the
kernel of ``G``, so the trace ``u_h(x_right^-) = 0`` is also imposed on the
discrete space. The constrained space is parametrized by ``u = T w`` with
``T`` dropping the top mode of the last cell.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from tempered_ldg.fractional import TemperedParams
from tempered_ldg.mesh import DGCoefficients, Mesh1D


class BoundaryCondition(str, enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"

    @classmethod
    def parse(cls, value: str | BoundaryCondition) -> BoundaryCondition:
        if isinstance(value, cls):
            return value
        aliases = {"homogeneous-dirichlet": "dirichlet", "homogeneous_dirichlet": "dirichlet"}
        value = str(value).strip().lower()
        return cls(aliases.get(value, value))


class AssemblyError(RuntimeError):
    """Assembled operator has an unexpected sparsity pattern."""


class SingularStepMatrix(np.linalg.LinAlgError):
    """The per-step matrix could not be factorized."""


def derivative_pairing(k: int) -> np.ndarray:
    """``S[m, n] = int_{-1}^{1} P_m(xi) P_n'(xi) dxi``."""
    m = np.arange(k + 1)
    S = np.where((m[None, :] > m[:, None]) & ((m[:, None] + m[None, :]) % 2 == 1), 2.0, 0.0)
    return S


@dataclass(frozen=True, eq=False)
class LDGSystem:
    mesh: Mesh1D
    k: int
    bc: BoundaryCondition
    G: sp.csr_matrix
    D: sp.csr_matrix
    mass: np.ndarray
    stiffness: sp.csr_matrix = field(repr=False)
    basis: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def block_size(self) -> int:
        return self.k + 1

    @property
    def ndof(self) -> int:
        return self.mesh.num_cells * (self.k + 1)

    def gradient(self, u: DGCoefficients) -> DGCoefficients:
        """Reconstruct ``p_h = M^{-1} G u_h``."""
        self._check(u)
        return DGCoefficients.from_vector(self.mesh, (self.G @ u.ravel()) / self.mass, self.k)

    def constrain(self, u: DGCoefficients) -> DGCoefficients:
        """Mass-orthogonal projection onto the constrained space (identity if periodic)."""
        self._check(u)
        if self.basis is None:
            return u
        T = self.basis
        w = spla.spsolve(
            (T.T @ sp.diags(self.mass) @ T).tocsc(), T.T @ (self.mass * u.ravel())
        )
        return DGCoefficients.from_vector(self.mesh, T @ w, self.k)

    def _check(self, u: DGCoefficients) -> None:
        if u.mesh is not self.mesh and u.mesh.num_cells != self.mesh.num_cells:
            raise ValueError("field lives on a different mesh")
        if u.degree != self.k:
            raise ValueError(f"expected degree {self.k}, got {u.degree}")


def assemble(mesh: Mesh1D, k: int, bc: BoundaryCondition | str) -> LDGSystem:
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")
    bc = BoundaryCondition.parse(bc)
    periodic = bc is BoundaryCondition.PERIODIC

    N = mesh.num_cells
    b = k + 1
    S = derivative_pairing(k)
    sign = (-1.0) ** np.arange(b)
    ones = np.ones((b, b))

    # rows: test function P_n on cell j; columns: trial P_m on cell i
    g_diag = -S.T + ones
    g_left = -np.outer(sign, np.ones(b))
    d_diag = -S.T - np.outer(sign, sign)
    d_right = np.outer(np.ones(b), sign)

    g_blocks: list[tuple[int, int, np.ndarray]] = []
    d_blocks: list[tuple[int, int, np.ndarray]] = []
    for j in range(N):
        if periodic or j < N - 1:
            g_blocks.append((j, j, g_diag))
        else:
            # u-hat = 0 on the right boundary
            g_blocks.append((j, j, -S.T))
        if j > 0:
            g_blocks.append((j, j - 1, g_left))
        elif periodic:
            g_blocks.append((j, N - 1, g_left))

        d_blocks.append((j, j, d_diag))
        if j < N - 1:
            d_blocks.append((j, j + 1, d_right))
        elif periodic:
            d_blocks.append((j, 0, d_right))
        else:
            # p-hat is the interior trace p^- on the right boundary
            d_blocks.append((j, j, ones))

    G = _from_blocks(g_blocks, N, b)
    D = _from_blocks(d_blocks, N, b)

    mass = np.repeat(mesh.cell_sizes, b) / np.tile(2.0 * np.arange(b) + 1.0, N)
    mass.setflags(write=False)

    stiffness = (-(D @ sp.diags(1.0 / mass) @ G)).tocsr()
    stiffness.eliminate_zeros()
    _check_block_pattern(stiffness, N, b, periodic)

    basis = None if periodic else _trace_basis(N, b)
    return LDGSystem(
        mesh=mesh, k=k, bc=bc, G=G, D=D, mass=mass, stiffness=stiffness, basis=basis
    )


def _trace_basis(N: int, b: int) -> sp.csr_matrix:
    # last cell: u_{N-1,k} = -sum_{m<k} u_{N-1,m}, since P_m(1) = 1
    n = N * b
    rows = list(range(n - 1))
    cols = list(range(n - 1))
    vals = [1.0] * (n - 1)
    for m in range(b - 1):
        rows.append(n - 1)
        cols.append(n - b + m)
        vals.append(-1.0)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n - 1))


def _from_blocks(blocks: list[tuple[int, int, np.ndarray]], N: int, b: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    local = np.arange(b)
    for j, i, block in blocks:
        r, c = np.meshgrid(j * b + local, i * b + local, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(block.ravel())
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(N * b, N * b),
    ).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat


def _check_block_pattern(A: sp.spmatrix, N: int, b: int, periodic: bool) -> None:
    coo = A.tocoo()
    bi, bj = coo.row // b, coo.col // b
    dist = np.abs(bi - bj)
    allowed = dist <= 1
    if periodic:
        allowed |= dist == N - 1
    if not np.all(allowed):
        raise AssemblyError("operator has fill outside the block-tridiagonal pattern")


def apply_laplacian(system: LDGSystem, u: DGCoefficients) -> DGCoefficients:
    """Discrete ``-u_xx`` as a DG field: ``M^{-1} L u``."""
    system._check(u)
    return DGCoefficients.from_vector(
        system.mesh, (system.stiffness @ u.ravel()) / system.mass, system.k
    )


# {{{ step matrix factorization


class StepSolver:
    """Reusable factorization of ``K = l0 M + kappa tau^alpha L``.

    The block-tridiagonal part is factorized by banded Cholesky; periodic
    corner blocks are folded back in with a Woodbury correction.
    """

    def __init__(
        self,
        K: sp.spmatrix,
        block_size: int,
        periodic: bool,
        basis: sp.spmatrix | None = None,
    ) -> None:
        self.basis = None if basis is None else basis.tocsr()
        if self.basis is not None:
            K = self.basis.T @ K @ self.basis
        self.matrix = K.tocsr()
        n = K.shape[0]
        b = block_size
        nblocks = n // b
        self._dense_lu = None
        self._correction = None

        if n == 0:
            # a single constant cell with the boundary trace pinned to zero
            self._chol = None
            return
        if periodic and nblocks <= 2:
            try:
                self._dense_lu = la.lu_factor(self.matrix.toarray(), check_finite=True)
            except (la.LinAlgError, ValueError) as exc:
                raise SingularStepMatrix(str(exc)) from exc
            if np.any(np.diag(self._dense_lu[0]) == 0.0):
                raise SingularStepMatrix("step matrix is singular")
            return

        coo = self.matrix.tocoo()
        corner = np.abs(coo.row // b - coo.col // b) > 1
        band = sp.coo_matrix(
            (coo.data[~corner], (coo.row[~corner], coo.col[~corner])), shape=K.shape
        )
        self.bandwidth = 2 * b - 1
        self._chol = self._cholesky(band, self.bandwidth)

        if periodic:
            first = np.arange(b)
            last = np.arange(n - b, n)
            dense = self.matrix[np.r_[first, last]][:, np.r_[first, last]].toarray()
            coupling = np.zeros((2 * b, 2 * b))
            coupling[:b, b:] = dense[:b, b:]
            coupling[b:, :b] = dense[b:, :b]

            E = np.zeros((n, 2 * b))
            E[first, np.arange(b)] = 1.0
            E[last, np.arange(b, 2 * b)] = 1.0
            Z = la.cho_solve_banded((self._chol, False), E @ coupling)
            capacitance = np.eye(2 * b) + Z[np.r_[first, last]]
            self._correction = (np.r_[first, last], Z, la.lu_factor(capacitance))

    @staticmethod
    def _cholesky(band: sp.coo_matrix, u: int) -> np.ndarray:
        n = band.shape[0]
        ab = np.zeros((u + 1, n))
        upper = band.row <= band.col
        r, c = band.row[upper], band.col[upper]
        ab[u + r - c, c] = band.data[upper]
        try:
            return la.cholesky_banded(ab, lower=False)
        except la.LinAlgError as exc:
            raise SingularStepMatrix(f"banded Cholesky failed: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``K u = rhs``; with a constraint, the Galerkin problem on ``range(T)``."""
        if self.basis is not None:
            rhs = self.basis.T @ rhs
        if self._dense_lu is not None:
            y = la.lu_solve(self._dense_lu, rhs)
        elif self._chol is None:
            y = np.zeros_like(rhs)
        else:
            y = la.cho_solve_banded((self._chol, False), rhs)
            if self._correction is not None:
                idx, Z, cap = self._correction
                y = y - Z @ la.lu_solve(cap, y[idx])
        if self.basis is not None:
            y = self.basis @ y
        return y


def factorize_step_matrix(
    system: LDGSystem, l0: float, params: TemperedParams, tau: float
) -> StepSolver:
    if not l0 > 0.0:
        raise ValueError(f"leading weight must be positive, got {l0!r}")
    if not tau > 0.0:
        raise ValueError(f"time step must be positive, got {tau!r}")

    K = l0 * sp.diags(system.mass) + params.kappa * tau**params.alpha * system.stiffness
    return StepSolver(
        K, system.block_size, system.bc is BoundaryCondition.PERIODIC, system.basis
    )


# }}}
