"""Independent reference implementations shared by the test modules."""

from __future__ import annotations

import numpy as np
from scipy import special

from tempered_ldg.timestep import load_vector


def plain_fractional_stepper(system, alpha, kappa, tau, M, u0, forcing=None):
    """Dense Grünwald-Letnikov stepper for the untempered problem.

    Weights come from the binomial form; the step matrix is solved densely.
    """
    w = (-1.0) ** np.arange(M + 1) * special.binom(alpha, np.arange(M + 1))
    Mass = np.diag(system.mass)
    L = system.stiffness.toarray()
    K = w[0] * Mass + kappa * tau**alpha * L
    T = np.eye(system.ndof) if system.basis is None else system.basis.toarray()
    Kr = T.T @ K @ T

    us = [u0.ravel().copy()]
    for n in range(1, M + 1):
        rhs = w[:n].sum() * (Mass @ us[0])
        for k in range(1, n):
            rhs -= w[k] * (Mass @ us[n - k])
        if forcing is not None:
            rhs += tau**alpha * load_vector(system, lambda x: forcing(x, n * tau))
        us.append(T @ np.linalg.solve(Kr, T.T @ rhs))
    return us
