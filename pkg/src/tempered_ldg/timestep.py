"""Fully discrete LDG scheme with order-q tempered convolution time stepping.

Each step solves

.. math::

    K u^n = e^{-\\lambda n\\tau} \\Big(\\sum_{k=0}^{n-1} l_k\\Big) M u^0
            - \\sum_{k=1}^{n-1} d_k M u^{n-k} + \\tau^\\alpha M \\Pi f(t_n)

with ``K = l_0 M + kappa tau^alpha L``. The whole history is kept.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Optional

import numpy as np
from scipy import special

from tempered_ldg.fractional import (
    ConvolutionWeights,
    TemperedParams,
    tempered_weights,
)
from tempered_ldg.ldg import LDGSystem, StepSolver, assemble, factorize_step_matrix
from tempered_ldg.mesh import DGCoefficients, build_mesh, l2_error
from tempered_ldg.problems import ProblemSpec, SpaceTimeFunction
from tempered_ldg.projections import PROJECTIONS, l2_project

logger = logging.getLogger(__name__)

ErrorMode = Literal["all", "final", "none"]


@dataclass(frozen=True, eq=False)
class MarchState:
    """Solver state after ``n`` steps.

    States produced by :func:`step` share one history buffer; stepping an
    older state again overwrites the newer entries.
    """

    n: int
    tau: float
    params: TemperedParams
    weights: ConvolutionWeights
    system: LDGSystem
    solver: StepSolver
    buffer: np.ndarray = field(repr=False)

    @property
    def t(self) -> float:
        return self.n * self.tau

    @property
    def capacity(self) -> int:
        return self.buffer.shape[1] - 1

    @property
    def current(self) -> DGCoefficients:
        return self.snapshot(self.n)

    def snapshot(self, m: int) -> DGCoefficients:
        if not 0 <= m <= self.n:
            raise IndexError(f"step {m} not available (have 0..{self.n})")
        return DGCoefficients.from_vector(
            self.system.mesh, self.buffer[:, m].copy(), self.system.k
        )

    @property
    def history(self) -> list[DGCoefficients]:
        return [self.snapshot(m) for m in range(self.n + 1)]


def start(
    system: LDGSystem,
    params: TemperedParams,
    q: int,
    tau: float,
    steps: int,
    u0: DGCoefficients,
) -> MarchState:
    """Set up a march of at most ``steps`` steps from the initial field ``u0``."""
    if steps < 0:
        raise ValueError(f"number of steps must be non-negative, got {steps}")
    system._check(u0)

    weights = tempered_weights(q, params, tau, max(steps, 1))
    solver = factorize_step_matrix(system, weights.l[0], params, tau)

    buffer = np.zeros((system.ndof, steps + 1))
    buffer[:, 0] = u0.ravel()
    return MarchState(
        n=0,
        tau=tau,
        params=params,
        weights=weights,
        system=system,
        solver=solver,
        buffer=buffer,
    )


def load_vector(system: LDGSystem, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``(f, v)`` for every basis function ``v``; equals ``M (Pi f)``."""
    return system.mass * l2_project(f, system.mesh, system.k).ravel()


def step(state: MarchState, forcing: Optional[SpaceTimeFunction] = None) -> MarchState:
    n = state.n + 1
    if n > state.capacity:
        raise IndexError(f"history buffer holds {state.capacity} steps; cannot take step {n}")
    if n >= state.weights.size:
        raise IndexError(f"convolution weights cover {state.weights.size - 1} steps")

    w = state.weights
    tau = state.tau
    buf = state.buffer
    t_n = n * tau

    # oldest to newest: u^1 .. u^{n-1} against d_{n-1} .. d_1
    if n > 1:
        history = np.add.reduce(buf[:, 1:n] * w.d[n - 1 : 0 : -1], axis=1)
    else:
        history = 0.0

    initial = math.exp(-w.lam * t_n) * w.partial_sums[n - 1] * buf[:, 0]
    rhs = state.system.mass * (initial - history)
    if forcing is not None:
        rhs = rhs + tau**w.alpha * load_vector(state.system, lambda x: forcing(x, t_n))

    u = state.solver.solve(rhs)
    if not np.all(np.isfinite(u)):
        raise FloatingPointError(f"non-finite solution at step {n}")

    buf[:, n] = u
    return replace(state, n=n)


# {{{ driver


@dataclass
class RunResult:
    final: DGCoefficients
    tau: float
    steps: int
    times: np.ndarray
    norms: np.ndarray
    errors: Optional[np.ndarray]
    history: Optional[list[DGCoefficients]]
    metadata: dict[str, object]
    state: MarchState = field(repr=False)

    @property
    def final_error(self) -> Optional[float]:
        if self.errors is None:
            return None
        return float(self.errors[-1])


def run(
    problem: ProblemSpec,
    N: int,
    k: int,
    q: int,
    M: int,
    *,
    initial_projection: str = "l2",
    initial_nodes: Optional[int] = None,
    errors: ErrorMode = "all",
    keep_history: bool = False,
    callback: Optional[Callable[[MarchState], None]] = None,
) -> RunResult:
    """Solve ``problem`` with ``N`` cells, degree ``k``, order ``q`` and ``M`` steps."""
    if M < 0:
        raise ValueError(f"number of steps must be non-negative, got {M}")
    if initial_projection not in PROJECTIONS:
        raise ValueError(f"unknown projection {initial_projection!r}")

    mesh = build_mesh(problem.domain[0], problem.domain[1], N)
    system = assemble(mesh, k, problem.bc)
    tau = problem.T / M if M > 0 else problem.T
    u0 = PROJECTIONS[initial_projection](problem.initial, mesh, k, initial_nodes)

    state = start(system, problem.params, q, tau, M, u0)
    norms = np.empty(M + 1)
    norms[0] = u0.l2_norm()

    track = problem.exact is not None and errors != "none"
    errs = np.full(M + 1, np.nan) if track else None

    def record_error(m: int, u: DGCoefficients) -> None:
        if errs is not None and (errors == "all" or m == M):
            t_m = m * tau
            errs[m] = l2_error(u, lambda x: problem.exact(x, t_m))

    record_error(0, u0)
    for _ in range(M):
        state = step(state, problem.forcing)
        u = state.current
        norms[state.n] = u.l2_norm()
        record_error(state.n, u)
        if callback is not None:
            callback(state)

    logger.debug("finished %s: N=%d k=%d q=%d M=%d", problem.label, N, k, q, M)

    metadata = dict(problem.metadata())
    metadata.update(
        {"N": N, "k": k, "q": q, "M": M, "tau": tau, "initial_projection": initial_projection}
    )
    return RunResult(
        final=state.current,
        tau=tau,
        steps=M,
        times=np.arange(M + 1) * tau,
        norms=norms,
        errors=errs,
        history=state.history if keep_history else None,
        metadata=metadata,
        state=state,
    )


# }}}


# {{{ energy monitor


def _kernel_mass(sigma: float, mu: float, r0: np.ndarray, r1: np.ndarray) -> np.ndarray:
    """``int_{r0}^{r1} r^{sigma-1} e^{-mu r} dr / Gamma(sigma)``."""
    if mu == 0.0:
        return (r1**sigma - r0**sigma) / math.gamma(sigma + 1.0)
    return (special.gammainc(sigma, mu * r1) - special.gammainc(sigma, mu * r0)) / mu**sigma


def tempered_integral_of_steps(values: np.ndarray, tau: float, sigma: float, mu: float) -> float:
    """Tempered RL integral at ``t_n = n tau`` of the step function equal to
    ``values[m]`` on ``(t_{m-1}, t_m]``, with ``n = len(values) - 1``."""
    n = len(values) - 1
    if n == 0:
        return 0.0
    m = np.arange(1, n + 1)
    # (t_{m-1}, t_m] corresponds to r = t_n - s in [(n - m) tau, (n - m + 1) tau)
    weights = _kernel_mass(sigma, mu, (n - m) * tau, (n - m + 1) * tau)
    return float(np.sum(values[1:] * weights))


@dataclass(frozen=True)
class EnergyRecord:
    n: int
    t: float
    norm_sq: float
    gradient_term: float
    bound: float

    @property
    def margin(self) -> float:
        return self.bound - (self.norm_sq + self.gradient_term)


def monitor_energy(
    history: list[DGCoefficients],
    system: LDGSystem,
    params: TemperedParams,
    tau: float,
    *,
    every: int = 1,
) -> list[EnergyRecord]:
    """Compare ``||u||^2 + 2 kappa I^{alpha,2 lam} ||p||^2`` against ``e^{-2 lam t} ||u^0||^2``.

    ``||p(t)||^2`` is held at its value ``||p^n||^2`` on ``(t_{n-1}, t_n]``, matching
    the implicit scheme, and the tempered integral of each piece is evaluated in
    closed form. Diagnostic only.
    """
    if not history:
        return []

    grad_sq = np.array([system.gradient(u).l2_norm() ** 2 for u in history])
    u0_sq = history[0].l2_norm() ** 2

    records = []
    for n in range(0, len(history), every):
        t_n = n * tau
        integral = tempered_integral_of_steps(
            grad_sq[: n + 1], tau, params.alpha, 2.0 * params.lam
        )
        records.append(
            EnergyRecord(
                n=n,
                t=t_n,
                norm_sq=history[n].l2_norm() ** 2,
                gradient_term=2.0 * params.kappa * integral,
                bound=math.exp(-2.0 * params.lam * t_n) * u0_sq,
            )
        )
    return records


# }}}
