"""Exact special-function layer.

Brownian small-ball distribution P(sup_{0<=s<=1} |W(s)| <= x), the gamma
and upper incomplete gamma functions, the alternating odd-denominator
series, and the closed-form limit constants of the weighted-series
theorems. All functions are pure.
"""

import logging
import math
import sys
from typing import Tuple

import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError, ParameterError
from .models import LimitConstant, Representation, SmallBallResult, Theorem

logger = logging.getLogger(__name__)

FOUR_OVER_PI = 4.0 / math.pi
PI_SQUARED_OVER_8 = math.pi ** 2 / 8.0

# Theta series up to and including x = 1, reflection series above.
REPRESENTATION_SWITCH = 1.0
DEFAULT_TOL = 1e-12
MAX_SERIES_TERMS = 100_000

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)
_GAMMA_OVERFLOW_ARG = 171.62

_INCGAMMA_MAX_ITER = 200
_INCGAMMA_EPS = 1e-15
_FPMIN = sys.float_info.min / sys.float_info.epsilon

_HURWITZ_MIN_S = 2.0
_ACCEL_TERMS = 40


def _require_positive_x(x: float) -> None:
    if not x > 0:
        raise DomainError(f"small-ball radius must satisfy x > 0, got x={x}")


def _require_tol(tol: float) -> None:
    if not 0 < tol <= 1e-6:
        raise ParameterError(f"tolerance must satisfy 0 < tol <= 1e-6, got tol={tol}")


def small_ball_theta(x: float, tol: float = DEFAULT_TOL) -> SmallBallResult:
    """Theta-type series (4/pi) sum_k (-1)^k/(2k+1) exp(-pi^2 (2k+1)^2 / (8 x^2)).

    Fast for small x. The error bound is the first omitted term.
    """
    _require_positive_x(x)
    _require_tol(tol)
    c = PI_SQUARED_OVER_8 / (x * x)
    terms = []
    k = 0
    while True:
        odd = 2 * k + 1
        terms.append((-1) ** k * FOUR_OVER_PI / odd * math.exp(-c * odd * odd))
        next_odd = odd + 2
        next_term = FOUR_OVER_PI / next_odd * math.exp(-c * next_odd * next_odd)
        if next_term <= tol:
            break
        k += 1
        if k >= MAX_SERIES_TERMS:
            raise ConvergenceError(f"theta series did not reach tol={tol} at x={x}")
    value = min(1.0, max(0.0, math.fsum(terms)))
    return SmallBallResult(value, len(terms), Representation.THETA, next_term)


def small_ball_reflection(x: float, tol: float = DEFAULT_TOL) -> SmallBallResult:
    """Gaussian reflection series sum_{k in Z} (-1)^k [Phi((2k+1)x) - Phi((2k-1)x)].

    Evaluated in the paired form 1 - 4 sum_{j>=1} (-1)^(j-1) Phibar((2j-1)x),
    which converges quickly for large x.
    """
    _require_positive_x(x)
    _require_tol(tol)
    terms = [1.0]
    j = 1
    while True:
        terms.append((-1) ** j * 4.0 * special.ndtr(-(2 * j - 1) * x))
        next_term = 4.0 * special.ndtr(-(2 * j + 1) * x)
        if next_term <= tol:
            break
        j += 1
        if j >= MAX_SERIES_TERMS:
            raise ConvergenceError(f"reflection series did not reach tol={tol} at x={x}")
    value = min(1.0, max(0.0, math.fsum(terms)))
    return SmallBallResult(value, j, Representation.REFLECTION, float(next_term))


def small_ball_sup(x: float, tol: float = DEFAULT_TOL) -> SmallBallResult:
    """P(sup_{0<=s<=1} |W(s)| <= x) within tol."""
    _require_positive_x(x)
    _require_tol(tol)
    if x <= REPRESENTATION_SWITCH:
        return small_ball_theta(x, tol)
    return small_ball_reflection(x, tol)


def small_ball_asymptotic(x: float) -> float:
    """Leading small-x behaviour (4/pi) exp(-pi^2 / (8 x^2))."""
    _require_positive_x(x)
    return FOUR_OVER_PI * math.exp(-PI_SQUARED_OVER_8 / (x * x))


def small_ball_bounds(x: float) -> Tuple[float, float]:
    """Two-sided bound (2/pi) e^{-pi^2/(8x^2)} <= P <= min(1, (4/pi) e^{-pi^2/(8x^2)})."""
    leading = small_ball_asymptotic(x)
    return 0.5 * leading, min(1.0, leading)


def gamma_fn(z: float) -> float:
    """Gamma function for z > 0 (Lanczos, ~15 digits)."""
    if not z > 0:
        raise DomainError(f"gamma_fn requires z > 0, got z={z}")
    if z < 0.5:
        # Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return math.pi / (math.sin(math.pi * z) * gamma_fn(1.0 - z))
    if z > _GAMMA_OVERFLOW_ARG:
        return math.inf
    z -= 1.0
    acc = _LANCZOS_COEFFS[0]
    for i, coeff in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += coeff / (z + i)
    t = z + _LANCZOS_G + 0.5
    half_power = t ** ((z + 0.5) / 2.0)
    return _SQRT_TWO_PI * (half_power * math.exp(-t)) * half_power * acc


def _upper_gamma_continued_fraction(s: float, theta: float) -> float:
    """Gamma(s, theta) by the modified Lentz continued fraction; theta >= s + 1."""
    b = theta + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _INCGAMMA_MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _INCGAMMA_EPS:
            return math.exp(-theta + s * math.log(theta)) * h
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge for s={s}, theta={theta}")


def upper_incomplete_gamma(s: float, theta: float) -> float:
    """Gamma(s, theta) = integral_theta^inf y^(s-1) e^(-y) dy."""
    if not s > 0:
        raise DomainError(f"upper_incomplete_gamma requires s > 0, got s={s}")
    if not theta >= 0:
        raise DomainError(f"upper_incomplete_gamma requires theta >= 0, got theta={theta}")
    if theta == 0.0:
        return gamma_fn(s)
    if theta < s + 1.0:
        # regularized complement; Gamma(s) - gamma(s, theta) cancels as s -> 0
        return gamma_fn(s) * float(special.gammaincc(s, theta))
    return _upper_gamma_continued_fraction(s, theta)


def alt_odd_partial_sum(s: float, n_terms: int) -> Tuple[float, float]:
    """First n_terms of sum_k (-1)^k (2k+1)^(-s) and the alternating-series bound."""
    k = np.arange(n_terms, dtype=np.float64)
    terms = np.where(k % 2 == 0, 1.0, -1.0) * (2.0 * k + 1.0) ** (-s)
    return math.fsum(terms.tolist()), (2.0 * n_terms + 1.0) ** (-s)


def alt_odd_series(s: float) -> float:
    """Dirichlet beta: sum_{k>=0} (-1)^k / (2k+1)^s for s > 1.

    Uses 4^(-s) (zeta(s, 1/4) - zeta(s, 3/4)) with the Hurwitz zeta
    function; for large s the direct sum is exact to double precision.
    Below s = 2 both zeta values blow up like 1/(s-1), so the alternating
    sum is accelerated directly instead.
    """
    if not s > 1:
        raise ParameterError(f"alt_odd_series requires s > 1, got s={s}")
    if s >= 40.0:
        value, _ = alt_odd_partial_sum(s, 20)
        return value
    if s < _HURWITZ_MIN_S:
        return _accelerated_alt_odd_series(s)
    return float(4.0 ** (-s) * (special.zeta(s, 0.25) - special.zeta(s, 0.75)))


def _accelerated_alt_odd_series(s: float, n_terms: int = _ACCEL_TERMS) -> float:
    """Cohen-Villegas-Zagier weights for sum_k (-1)^k a_k with a_k = (2k+1)^(-s).

    a_k is a moment sequence, so the error is below 2 a_0 / (3 + sqrt 8)^n_terms.
    """
    d = (3.0 + math.sqrt(8.0)) ** n_terms
    d = 0.5 * (d + 1.0 / d)
    b = -1.0
    c = -d
    total = 0.0
    for k in range(n_terms):
        c = b - c
        total += c * (2.0 * k + 1.0) ** (-s)
        b *= (k + n_terms) * (k - n_terms) / ((k + 0.5) * (k + 1.0))
    return total / d


def _require_weight_exponents(a: float, b: float) -> None:
    if not (a > -1 and b > -1):
        raise DomainError(f"limit constants require a > -1 and b > -1, got a={a}, b={b}")


def theorem1_constant(a: float, b: float, tau: float = 0.0) -> float:
    """(4/pi) (1 / (2 (1+a)^{3/2}))^{b+1} Gamma(b+1) exp(2 (1+a)^{3/2} tau)."""
    _require_weight_exponents(a, b)
    if not math.isfinite(tau):
        raise DomainError(f"tau must be finite, got tau={tau}")
    scale = (1.0 + a) ** 1.5
    return FOUR_OVER_PI * (0.5 / scale) ** (b + 1.0) * gamma_fn(b + 1.0) * math.exp(2.0 * scale * tau)


def theorem2_constant(b: float) -> float:
    """(4/pi) Gamma(b+1) sum_k (-1)^k / (2k+1)^(2b+3)."""
    if not b > -1:
        raise DomainError(f"theorem2_constant requires b > -1, got b={b}")
    return FOUR_OVER_PI * gamma_fn(b + 1.0) * alt_odd_series(2.0 * b + 3.0)


def limit_constant(theorem: Theorem, a: float = 0.0, b: float = 0.0, tau: float = 0.0) -> LimitConstant:
    if theorem is Theorem.T1:
        return LimitConstant(theorem1_constant(a, b, tau), theorem, {"a": a, "b": b, "tau": tau})
    return LimitConstant(theorem2_constant(b), theorem, {"b": b})
