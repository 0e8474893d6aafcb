"""Benchmark problems: manufactured, Mittag-Leffler and Gaussian-pulse tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from tempered_ldg.fractional import TemperedParams, caputo_tempered_derivative, mittag_leffler
from tempered_ldg.ldg import BoundaryCondition

SpaceTimeFunction = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    params: TemperedParams
    domain: tuple[float, float]
    T: float
    bc: BoundaryCondition
    initial: Callable[[np.ndarray], np.ndarray]
    forcing: Optional[SpaceTimeFunction] = None
    exact: Optional[SpaceTimeFunction] = None
    label: str = ""
    extra: dict[str, float] = field(default_factory=dict)

    def metadata(self) -> dict[str, object]:
        meta: dict[str, object] = {
            "problem": self.label,
            "alpha": self.params.alpha,
            "lambda": self.params.lam,
            "kappa": self.params.kappa,
            "x_left": self.domain[0],
            "x_right": self.domain[1],
            "T": self.T,
            "bc": self.bc.value,
        }
        meta.update(self.extra)
        return meta


def example1(
    alpha: float, lam: float, kappa: float = 1.0, beta: float = 4.0, T: float = 1.0
) -> ProblemSpec:
    """Periodic manufactured solution ``u = e^{-lam t} (t^beta + 1) sin(2 pi x)``."""
    params = TemperedParams(alpha, lam, kappa)
    if not beta > alpha:
        raise ValueError(f"beta must exceed alpha, got beta={beta!r}, alpha={alpha!r}")

    ratio = math.gamma(beta + 1.0) / math.gamma(beta + 1.0 - alpha)
    two_pi = 2.0 * math.pi

    def initial(x):
        return np.sin(two_pi * x)

    def exact(x, t):
        return math.exp(-lam * t) * (t**beta + 1.0) * np.sin(two_pi * x)

    def forcing(x, t):
        amp = ratio * t ** (beta - alpha) + 4.0 * kappa * math.pi**2 * (t**beta + 1.0)
        return math.exp(-lam * t) * amp * np.sin(two_pi * x)

    return ProblemSpec(
        params=params,
        domain=(0.0, 1.0),
        T=T,
        bc=BoundaryCondition.PERIODIC,
        initial=initial,
        forcing=forcing,
        exact=exact,
        label="example1",
        extra={"beta": beta},
    )


def example2(alpha: float, lam: float, T: float = 1.0) -> ProblemSpec:
    """Homogeneous Dirichlet problem with ``u = e^{-lam t} E_alpha(-4 pi^2 t^alpha) sin(2 pi x)``."""
    params = TemperedParams(alpha, lam, 1.0)
    two_pi = 2.0 * math.pi

    def amplitude(t: float) -> float:
        return math.exp(-lam * t) * mittag_leffler(alpha, -4.0 * math.pi**2 * t**alpha)

    def initial(x):
        return np.sin(two_pi * x)

    def exact(x, t):
        return amplitude(t) * np.sin(two_pi * x)

    return ProblemSpec(
        params=params,
        domain=(0.0, 1.0),
        T=T,
        bc=BoundaryCondition.DIRICHLET,
        initial=initial,
        exact=exact,
        label="example2",
    )


def example3(
    alpha: float, lam: float, sigma: float = 0.01, T: float = 0.1
) -> ProblemSpec:
    """Gaussian pulse on ``[-4, 4]`` with homogeneous Dirichlet data; no exact solution."""
    params = TemperedParams(alpha, lam, 1.0)
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")

    scale = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

    def initial(x):
        return scale * np.exp(-0.5 * (np.asarray(x) / sigma) ** 2)

    return ProblemSpec(
        params=params,
        domain=(-4.0, 4.0),
        T=T,
        bc=BoundaryCondition.DIRICHLET,
        initial=initial,
        label="example3",
        extra={"sigma": sigma},
    )


def make_problem(name: str, **kwargs: float) -> ProblemSpec:
    factories = {"example1": example1, "example2": example2, "example3": example3}
    try:
        factory = factories[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(factories)}") from None
    return factory(**kwargs)


def caputo_residual(problem: ProblemSpec, x: float, t: float, *, h: float = 1.0e-3) -> float:
    """Pointwise residual ``D^{alpha,lam} u - kappa u_xx - f`` of the exact solution.

    The time derivative is evaluated by adaptive quadrature of its definition;
    ``u_xx`` by a fourth-order central difference of width ``h``.
    """
    if problem.exact is None:
        raise ValueError(f"{problem.label} has no exact solution")

    p = problem.params
    exact = problem.exact

    def u(s: float) -> float:
        return float(exact(np.array([x]), s)[0])

    dt = caputo_tempered_derivative(u, p.alpha, p.lam, t)

    xs = x + h * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    vals = exact(xs, t)
    uxx = (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * h * h)

    f = 0.0 if problem.forcing is None else float(problem.forcing(np.array([x]), t)[0])
    return dt - p.kappa * uxx - f
