"""Tempered fractional-calculus kernels.

Convolution weights for the discrete tempered Riemann-Liouville derivative,
the one-parameter Mittag-Leffler function on the real axis, and adaptive
quadrature for tempered fractional integrals and Caputo derivatives (the
latter two are diagnostic and oracle tools, not used in time stepping).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np
from scipy import integrate

# working digits for weight generation; results are rounded to float64
WEIGHT_DPS = 40

MAX_LUBICH_ORDER = 5

# real-axis range on which mittag_leffler has been validated
ML_Z_MIN = -1000.0
ML_Z_MAX = 5.0

# relative width of the window at s = t handled by local interpolation
NEAR_ENDPOINT_FRACTION = 1.0e-5


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float) -> None:
        super().__init__(f"{message} (achieved abs. error estimate {achieved:.3e})")
        self.achieved = achieved


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"fractional order must lie in (0, 1), got {alpha!r}")


@dataclass(frozen=True)
class TemperedParams:
    """Fractional order ``alpha``, tempering rate ``lam`` and diffusivity ``kappa``."""

    alpha: float
    lam: float = 0.0
    kappa: float = 1.0

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        if not self.lam >= 0.0 or math.isinf(self.lam):
            raise ValueError(f"tempering rate must be finite and >= 0, got {self.lam!r}")
        if not self.kappa > 0.0 or math.isinf(self.kappa):
            raise ValueError(f"diffusivity must be finite and > 0, got {self.kappa!r}")


@dataclass(frozen=True, eq=False)
class ConvolutionWeights:
    """Weights ``l_k`` and tempered weights ``d_k = exp(-lam*k*tau) l_k``.

    ``partial_sums[m]`` holds ``sum_{k=0}^{m} l_k``, accumulated in extended
    precision before rounding.
    """

    q: int
    alpha: float
    lam: float
    tau: float
    l: np.ndarray
    d: np.ndarray
    partial_sums: np.ndarray

    @property
    def size(self) -> int:
        return len(self.l)


# {{{ weights


@lru_cache(maxsize=32)
def _grunwald_mp(alpha: float, n: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    with mpmath.workdps(WEIGHT_DPS):
        a1 = mpmath.mpf(alpha) + 1
        w = mpmath.mpf(1)
        s = mpmath.mpf(1)
        weights = [1.0]
        sums = [1.0]
        for k in range(1, n + 1):
            w = (1 - a1 / k) * w
            s += w
            weights.append(float(w))
            sums.append(float(s))
    return tuple(weights), tuple(sums)


def grunwald_weights(alpha: float, n: int) -> np.ndarray:
    r"""Grünwald weights :math:`w_k = (-1)^k \binom{\alpha}{k}`, ``k = 0..n``.

    Generated by the recurrence ``w_k = (1 - (alpha + 1)/k) w_{k-1}`` in
    extended precision.
    """
    _check_alpha(alpha)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    return np.array(_grunwald_mp(float(alpha), int(n))[0])


def grunwald_partial_sums(alpha: float, n: int) -> np.ndarray:
    """Return ``sum_{k=0}^{m} w_k`` for ``m = 0..n``."""
    _check_alpha(alpha)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    return np.array(_grunwald_mp(float(alpha), int(n))[1])


def bdf_generating_polynomial(q: int) -> list[Fraction]:
    """Coefficients of ``sum_{i=1}^{q} (1/i) (1 - z)^i`` in powers of ``z``."""
    coeffs = [Fraction(0)] * (q + 1)
    for i in range(1, q + 1):
        for j in range(i + 1):
            coeffs[j] += Fraction((-1) ** j * math.comb(i, j), i)
    return coeffs


@lru_cache(maxsize=32)
def _lubich_mp(
    q: int, alpha: float, n: int
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    p = bdf_generating_polynomial(q)
    with mpmath.workdps(WEIGHT_DPS):
        a = mpmath.mpf(alpha)
        pj = [mpmath.mpf(c.numerator) / c.denominator for c in p]
        lk = [pj[0] ** a]
        s = lk[0]
        sums = [float(s)]
        # J. C. P. Miller's recurrence for the coefficients of P(z)^alpha
        for m in range(1, n + 1):
            acc = mpmath.mpf(0)
            for j in range(1, min(m, q) + 1):
                acc += ((a + 1) * j - m) * pj[j] * lk[m - j]
            lk.append(acc / (m * pj[0]))
            s += lk[-1]
            sums.append(float(s))
        weights = tuple(float(x) for x in lk)
    return weights, tuple(sums)


def lubich_weights(q: int, alpha: float, n: int) -> np.ndarray:
    """Order-``q`` Lubich convolution weights ``l_0..l_n``.

    These are the Taylor coefficients of ``(sum_{i=1}^{q} (1 - z)^i / i)^alpha``.
    For ``q = 1`` this is exactly :func:`grunwald_weights`.
    """
    if q not in range(1, MAX_LUBICH_ORDER + 1):
        raise ValueError(f"unsupported order q={q!r}; expected 1..{MAX_LUBICH_ORDER}")
    if q == 1:
        return grunwald_weights(alpha, n)

    _check_alpha(alpha)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    return np.array(_lubich_mp(int(q), float(alpha), int(n))[0])


def lubich_partial_sums(q: int, alpha: float, n: int) -> np.ndarray:
    if q == 1:
        return grunwald_partial_sums(alpha, n)
    lubich_weights(q, alpha, 0)
    return np.array(_lubich_mp(int(q), float(alpha), int(n))[1])


def tempered_weights(
    q: int, params: TemperedParams, tau: float, n: int
) -> ConvolutionWeights:
    if not tau > 0.0:
        raise ValueError(f"time step must be positive, got {tau!r}")

    l = lubich_weights(q, params.alpha, n)
    k = np.arange(n + 1)
    d = np.exp(-params.lam * k * tau) * l
    d[0] = l[0]

    for ary in (l, d):
        ary.setflags(write=False)
    sums = lubich_partial_sums(q, params.alpha, n)
    sums.setflags(write=False)

    return ConvolutionWeights(
        q=q, alpha=params.alpha, lam=params.lam, tau=tau, l=l, d=d, partial_sums=sums
    )


# }}}


# {{{ Mittag-Leffler


def _ml_series(beta: float, z: float) -> float:
    logz = math.log(abs(z))
    sign = -1.0 if z < 0 else 1.0
    terms = [1.0]
    approx = 1.0
    k = 1
    while True:
        log_term = k * logz - math.lgamma(beta * k + 1.0)
        term = math.exp(log_term) * sign**k
        terms.append(term)
        approx += term
        # terms decay monotonically once beta*k exceeds |z|^(1/beta)
        if beta * k > abs(z) ** (1.0 / beta) + 2 and abs(term) < 1.0e-18 * abs(approx):
            break
        k += 1
        if k > 100_000:
            raise ArithmeticError(f"series for E_{beta}({z}) did not converge")

    return math.fsum(terms)


def _ml_negative_integral(beta: float, x: float) -> float:
    # E_beta(-x) = sin(beta pi)/(beta pi) * int_0^oo x exp(-u^(1/beta))
    #                                      / (u^2 + 2 u x cos(beta pi) + x^2) du
    c = math.cos(beta * math.pi)
    upper = 745.0**beta

    def integrand(u: float) -> float:
        return x * math.exp(-(u ** (1.0 / beta))) / (u * u + 2.0 * u * x * c + x * x)

    points = []
    if c < 0.0 and -x * c < upper:
        points.append(-x * c)

    value, abserr, info, *rest = integrate.quad(
        integrand,
        0.0,
        upper,
        points=points or None,
        epsabs=0.0,
        epsrel=1.0e-13,
        limit=400,
        full_output=True,
    )
    if rest and abserr > 1.0e-10 * abs(value):
        raise QuadratureError(f"E_{beta}({-x}) integral failed: {rest[0]}", abserr)

    return math.sin(beta * math.pi) / (beta * math.pi) * value


def mittag_leffler(beta: float, z: float) -> float:
    r"""One-parameter Mittag-Leffler function :math:`E_\beta(z)` for real ``z``.

    Valid for ``0 < beta <= 1`` and ``z`` in ``[ML_Z_MIN, ML_Z_MAX]``. Small
    arguments use the power series; ``z < -1`` uses the completely monotone
    integral representation, which has no cancellation.

    :raises ValueError: if ``(beta, z)`` lies outside the validated domain.
    """
    beta = float(beta)
    z = float(z)
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta!r}")
    if not ML_Z_MIN <= z <= ML_Z_MAX:
        raise ValueError(f"z={z!r} outside the validated range [{ML_Z_MIN}, {ML_Z_MAX}]")

    if z == 0.0:
        return 1.0
    if beta == 1.0:
        return math.exp(z)
    if z > 0.0:
        if z ** (1.0 / beta) > 700.0:
            raise ValueError(f"E_{beta}({z}) overflows double precision")
        return _ml_series(beta, z)
    if z >= -1.0:
        return _ml_series(beta, z)

    return _ml_negative_integral(beta, -z)


# }}}


# {{{ quadrature of tempered operators


def _quad(func: Callable[[float], float], a: float, b: float, rtol: float, what: str) -> float:
    value, abserr, info, *rest = integrate.quad(
        func, a, b, epsabs=0.0, epsrel=rtol, limit=200, full_output=True
    )
    if rest and abserr > max(10 * rtol * abs(value), 1.0e-14):
        raise QuadratureError(f"{what}: {rest[0]}", abserr)
    return value


def tempered_rl_integral(
    f: Callable[[float], float],
    sigma: float,
    lam: float,
    t: float,
    *,
    rtol: float = 1.0e-10,
) -> float:
    r"""Tempered Riemann-Liouville integral of order ``sigma`` at time ``t``.

    .. math::

        \frac{1}{\Gamma(\sigma)} \int_0^t e^{-\lambda (t - s)} (t - s)^{\sigma - 1} f(s) \, ds

    The substitution ``u = (t - s)^sigma`` removes the kernel singularity.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma!r}")
    if lam < 0.0:
        raise ValueError(f"lambda must be >= 0, got {lam!r}")
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    if t == 0.0:
        return 0.0

    p = 1.0 / sigma

    def integrand(u: float) -> float:
        r = u**p
        return math.exp(-lam * r) * f(t - r)

    value = _quad(integrand, 0.0, t**sigma, rtol, "tempered RL integral")
    return value / math.gamma(sigma + 1.0)


def caputo_tempered_derivative(
    f: Callable[[float], float],
    alpha: float,
    lam: float,
    t: float,
    *,
    rtol: float = 1.0e-11,
) -> float:
    r"""Caputo tempered derivative ``e^{-lam t} D_C^alpha [e^{lam s} f(s)](t)``.

    Evaluated from function values only, through the integrated-by-parts form

    .. math::

        \frac{1}{\Gamma(1 - \alpha)} \left[\frac{g(t) - g(0)}{t^\alpha}
            + \alpha \int_0^t \frac{g(t) - g(s)}{(t - s)^{1 + \alpha}} \, ds\right]

    with ``g(s) = e^{lam s} f(s)`` and ``s = t - v^{1/(1-alpha)}``.
    """
    _check_alpha(alpha)
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t!r}")

    def g(s: float) -> float:
        return math.exp(lam * s) * f(s)

    gt = g(t)
    p = 1.0 / (1.0 - alpha)

    def integrand(v: float) -> float:
        r = v**p
        return (gt - g(t - r)) / r

    # Near s = t the difference quotient cancels (r = v^p underflows relative
    # to t for alpha close to 1). There g is replaced by its quadratic
    # interpolant at t, t - h, t - 2h, whose quotient a + b (h - r) integrates
    # in closed form.
    h = NEAR_ENDPOINT_FRACTION * t
    f01 = (gt - g(t - h)) / h
    f12 = (g(t - h) - g(t - 2.0 * h)) / h
    f012 = (f01 - f12) / (2.0 * h)
    vc = h ** (1.0 - alpha)
    near = p * ((f01 + f012 * h) * vc - f012 * vc ** (p + 1.0) / (p + 1.0))

    vmax = t ** (1.0 - alpha)
    mid = 0.5 * (vc + vmax)
    integral = near + p * (
        _quad(integrand, vc, mid, rtol, "Caputo derivative")
        + _quad(integrand, mid, vmax, rtol, "Caputo derivative")
    )

    value = (gt - g(0.0)) / t**alpha + alpha * integral
    return math.exp(-lam * t) * value / math.gamma(1.0 - alpha)


# }}}
