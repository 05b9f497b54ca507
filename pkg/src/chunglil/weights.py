"""Weighted-series evaluators and integral tests.

All iterated logarithms are guarded: log x = ln(x v e) and
log log x = log(log x), so every n >= 1 has log n >= 1 and log log n >= 1.

Weighted series are handled in the coordinate v = log log x. There
(log x)^a (log log x)^b x^{-1} exp(-log log x / eps^2) dx becomes
v^b exp(-theta v) dv with theta = 1/eps^2 - 1 - a, so the integral over
[e^e, inf) is theta^{-(b+1)} Gamma(b+1, theta).
"""

import logging
import math
import threading
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .analytic import FOUR_OVER_PI, theorem1_constant, theorem2_constant, upper_incomplete_gamma
from .errors import ConvergenceError, DivergenceError, DomainError, ModeError, OperationCancelled, ParameterError
from .models import (
    IncrementProfile,
    KernelSumResult,
    PsiFamily,
    PsiSpec,
    ScaledLimitRow,
    Verdict,
    WeightParams,
)

logger = logging.getLogger(__name__)

E = math.e
E_TO_E = math.exp(math.e)
BLOCK_SIZE = 100_000
DIRECT_MIN_N = 100
DIRECT_MIN_THETA = 1.0
_HEAD_LAST = 15  # largest n below e^e
_MAX_BROWNIAN_TERMS = 1_000_000


class CancellationToken:
    """Cooperative cancellation flag shared with a long partial sum."""

    def __init__(self):
        self._event = threading.Event()

    def cancel(self) -> None:
        self._event.set()

    def raise_if_cancelled(self) -> None:
        if self._event.is_set():
            raise OperationCancelled("partial sum cancelled")


def guarded_log(x: float) -> float:
    return math.log(max(x, E))


def guarded_loglog(x: float) -> float:
    return guarded_log(guarded_log(x))


def _log_arrays(n: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    log_n = np.log(np.maximum(n, E))
    return log_n, np.log(np.maximum(log_n, E))


def weight(n: int, params: WeightParams) -> float:
    """(log n)^a (log log n)^b / n."""
    if n < 1:
        raise DomainError(f"weight requires n >= 1, got n={n}")
    return guarded_log(n) ** params.a * guarded_loglog(n) ** params.b / n


def phi(n: int) -> float:
    """Chung normalization sqrt(pi^2 n / (8 log log n))."""
    if n < 1:
        raise DomainError(f"phi requires n >= 1, got n={n}")
    return math.sqrt(math.pi ** 2 * n / (8.0 * guarded_loglog(n)))


def _accumulate(
    log_term: Callable[[np.ndarray], np.ndarray],
    n_max: int,
    token: Optional[CancellationToken] = None,
    checkpoints: Sequence[int] = (),
) -> Tuple[float, Dict[int, float]]:
    """Sum exp(log_term(n)) for n = 1..n_max in blocks, recording checkpoints."""
    marks = sorted(set(int(c) for c in checkpoints if 1 <= c <= n_max))
    partials: Dict[int, float] = {}
    total = 0.0
    start = 1
    while start <= n_max:
        if token is not None:
            token.raise_if_cancelled()
        stop = min(start + BLOCK_SIZE, n_max + 1)
        for mark in marks:
            if start <= mark < stop:
                head = np.arange(start, mark + 1, dtype=np.float64)
                partials[mark] = total + float(np.sum(np.exp(log_term(head))))
        n = np.arange(start, stop, dtype=np.float64)
        total += float(np.sum(np.exp(log_term(n))))
        start = stop
    logger.debug(f"accumulated {n_max} terms, total={total:.12g}")
    return total, partials


def _loglog_tail(theta: float, b: float, v_start: float) -> float:
    """integral_{v_start}^inf v^b e^{-theta v} dv = theta^{-(b+1)} Gamma(b+1, theta v_start)."""
    return theta ** (-(b + 1.0)) * upper_incomplete_gamma(b + 1.0, theta * v_start)


def _summand_decreasing_beyond(u: float, theta: float, b: float) -> bool:
    """Whether u^{-(1+theta)} (ln u)^b e^{-u} decreases from u = log x onward."""
    return b < u * math.log(u) + (1.0 + theta) * math.log(u)


def _kernel_theta(params: WeightParams, eps: float) -> float:
    if not eps > 0:
        raise DomainError(f"eps must be positive, got eps={eps}")
    return 1.0 / (eps * eps) - 1.0 - params.a


def kernel_sum_direct(
    params: WeightParams,
    eps: float,
    n_max: int,
    token: Optional[CancellationToken] = None,
) -> KernelSumResult:
    """Direct partial sum of sum_n weight(n) exp(-log log n / eps^2).

    Restricted to theta = 1/eps^2 - 1 - a >= 1, where the summand mass sits
    at reachable n; near-critical eps goes through kernel_sum_integral.
    """
    theta = _kernel_theta(params, eps)
    if theta < DIRECT_MIN_THETA:
        raise ModeError(
            f"direct summation requires 1/eps^2 - 1 - a >= 1 (theta={theta:.6g}); use kernel_sum_integral"
        )
    if n_max < DIRECT_MIN_N:
        raise ParameterError(f"direct summation requires n_max >= {DIRECT_MIN_N}, got {n_max}")
    if not _summand_decreasing_beyond(E, theta, params.b):
        raise ModeError(f"summand is not monotone beyond e^e for b={params.b}, theta={theta:.6g}")

    inv_eps2 = 1.0 / (eps * eps)

    def log_term(n: np.ndarray) -> np.ndarray:
        log_n, loglog_n = _log_arrays(n)
        return params.a * np.log(log_n) + params.b * np.log(loglog_n) - np.log(n) - loglog_n * inv_eps2

    partial, marks = _accumulate(log_term, n_max, token, checkpoints=(_HEAD_LAST,))
    head = marks[_HEAD_LAST]
    # summand at n = 16 and at x = e^e (where log x = e, log log x = 1)
    edge = max(
        float(np.exp(log_term(np.array([16.0])))[0]),
        E ** params.a * math.exp(-inv_eps2) / E_TO_E,
    )
    tail = _loglog_tail(theta, params.b, guarded_loglog(n_max))
    scaled = (params.critical_eps - eps) ** (params.b + 1.0) * FOUR_OVER_PI * (partial + 0.5 * tail)
    logger.info(f"direct kernel sum a={params.a}, b={params.b}, eps={eps}, n_max={n_max}: {partial:.10g} (+<= {tail:.3g})")
    return KernelSumResult(partial, n_max, tail, scaled, head_sum=head, edge_term=edge)


def kernel_sum_integral(params: WeightParams, eps: float) -> float:
    """theta^{-(b+1)} Gamma(b+1, theta): the kernel integral over [e^e, inf)."""
    theta = _kernel_theta(params, eps)
    if theta <= 0:
        raise DivergenceError(
            f"weighted series diverges for eps >= 1/sqrt(1+a) = {params.critical_eps:.10g} (eps={eps})"
        )
    return _loglog_tail(theta, params.b, 1.0)


def _deviation(value: float, target: float) -> float:
    return value / target - 1.0


def scaled_limit_check(params: WeightParams, tau: float, eps_grid: Sequence[float]) -> List[ScaledLimitRow]:
    """Scaled kernel integrals against theorem1_constant(a, b, tau).

    The schedule a_n = tau / log log n enters through its first-order
    expansion, a factor exp(2 tau / eps^3).
    """
    target = theorem1_constant(params.a, params.b, tau)
    rows = []
    for eps in eps_grid:
        value = kernel_sum_integral(params, eps)
        scaled = (
            (params.critical_eps - eps) ** (params.b + 1.0)
            * FOUR_OVER_PI
            * value
            * math.exp(2.0 * tau / eps ** 3)
        )
        rows.append(ScaledLimitRow(eps, scaled, _deviation(scaled, target)))
    return rows


def theorem2_kernel_limit(q: float, b: float, eps: float) -> float:
    """q^{-(b+1)} Gamma(b+1, q/eps^2), which tends to Gamma(b+1) q^{-(b+1)} as eps -> inf."""
    if not q > 0:
        raise DomainError(f"theorem2_kernel_limit requires q > 0, got q={q}")
    if not eps > 0:
        raise DomainError(f"eps must be positive, got eps={eps}")
    if not b > -1:
        raise DomainError(f"b must exceed -1, got b={b}")
    return q ** (-(b + 1.0)) * upper_incomplete_gamma(b + 1.0, q / (eps * eps))


def brownian_series_t1(params: WeightParams, eps: float, tau: float = 0.0, tol: float = 1e-12) -> ScaledLimitRow:
    """Weighted series with the exact Brownian small-ball probability.

    Integrating the theta series term by term in v = log log x gives
    (4/pi) sum_k (-1)^k/(2k+1) theta_k^{-(b+1)} Gamma(b+1, theta_k) with
    theta_k = (2k+1)^2/eps^2 - (1+a). Scaled like scaled_limit_check.
    """
    theta0 = _kernel_theta(params, eps)
    if theta0 <= 0:
        raise DivergenceError(
            f"weighted series diverges for eps >= 1/sqrt(1+a) = {params.critical_eps:.10g} (eps={eps})"
        )
    inv_eps2 = 1.0 / (eps * eps)

    def term(k: int) -> float:
        odd = 2 * k + 1
        theta_k = odd * odd * inv_eps2 - 1.0 - params.a
        return FOUR_OVER_PI / odd * _loglog_tail(theta_k, params.b, 1.0)

    total = _alternating_sum(term, tol)
    scaled = (params.critical_eps - eps) ** (params.b + 1.0) * total * math.exp(2.0 * tau / eps ** 3)
    return ScaledLimitRow(eps, scaled, _deviation(scaled, theorem1_constant(params.a, params.b, tau)))


def brownian_series_t2(b: float, eps: float, tol: float = 1e-12) -> ScaledLimitRow:
    """eps^{-2(b+1)} sum ((log log n)^b / (n log n)) P(sup|W| <= eps sqrt(pi^2/(8 log log n))).

    Continuous form (4/pi) sum_k (-1)^k (2k+1)^{-(2b+3)} Gamma(b+1, (2k+1)^2/eps^2).
    """
    if not b > -1:
        raise DomainError(f"b must exceed -1, got b={b}")
    if not eps > 0:
        raise DomainError(f"eps must be positive, got eps={eps}")
    inv_eps2 = 1.0 / (eps * eps)

    def term(k: int) -> float:
        odd = 2 * k + 1
        return FOUR_OVER_PI * odd ** (-(2.0 * b + 3.0)) * upper_incomplete_gamma(b + 1.0, odd * odd * inv_eps2)

    total = _alternating_sum(term, tol)
    return ScaledLimitRow(eps, total, _deviation(total, theorem2_constant(b)))


def _alternating_sum(term: Callable[[int], float], tol: float) -> float:
    """Sum of (-1)^k term(k) for decreasing term(k) >= 0, to relative tol."""
    parts = []
    for k in range(_MAX_BROWNIAN_TERMS):
        magnitude = term(k)
        parts.append(magnitude if k % 2 == 0 else -magnitude)
        if magnitude <= tol * abs(parts[0]):
            return math.fsum(parts)
    raise ConvergenceError(f"alternating series did not reach relative tol={tol}")


def psi_values(psi: PsiSpec, n: np.ndarray) -> np.ndarray:
    """psi evaluated at the integers in n."""
    if psi.family is PsiFamily.C_OVER_SQRT_LOGLOG:
        _, loglog_n = _log_arrays(n)
        return psi.c / np.sqrt(loglog_n)
    grid = np.array([point[0] for point in psi.table])
    values = np.array([point[1] for point in psi.table])
    index = np.clip(np.searchsorted(grid, n, side="right") - 1, 0, len(values) - 1)
    return values[index]


def _check_tabulated_psi(psi: PsiSpec, n_max: int) -> None:
    points = [(n, v) for n, v in psi.table if n <= n_max]
    if any(v <= 0 for _, v in points) or (points and points[-1][1] <= 0):
        raise DomainError("psi must be positive on [1, n_max]")
    for (n_lo, v_lo), (n_hi, v_hi) in zip(points, points[1:]):
        if v_hi > v_lo and n_hi > n_max / 2:
            logger.warning(f"tabulated psi increases at n={n_hi:g}; it is not non-increasing over the upper evaluation range")
            break


def _psi_log_term(psi: PsiSpec, params: WeightParams, chung: bool) -> Callable[[np.ndarray], np.ndarray]:
    def log_term(n: np.ndarray) -> np.ndarray:
        values = psi_values(psi, n)
        if np.any(values <= 0):
            raise DomainError("psi must be positive on [1, n_max]")
        inv_sq = 1.0 / (values * values)
        out = -np.log(n) - inv_sq
        if chung:
            return out + np.log(inv_sq)
        log_n, loglog_n = _log_arrays(n)
        return out + params.a * np.log(log_n) + params.b * np.log(loglog_n)
    return log_term


def _j_partial(
    psi: PsiSpec,
    params: WeightParams,
    n_max: int,
    chung: bool,
    token: Optional[CancellationToken],
) -> KernelSumResult:
    if n_max < 1:
        raise ParameterError(f"n_max must be >= 1, got {n_max}")
    if psi.family is PsiFamily.TABULATED:
        _check_tabulated_psi(psi, n_max)
    partial, _ = _accumulate(_psi_log_term(psi, params, chung), n_max, token)
    tail = math.inf
    if psi.family is PsiFamily.C_OVER_SQRT_LOGLOG:
        inv_c2 = 1.0 / (psi.c * psi.c)
        # J: (v/c^2) e^{-(1/c^2 - 1) v}; J_ab: v^b e^{-(1/c^2 - 1 - a) v}
        a_eff, b_eff, factor = (0.0, 1.0, inv_c2) if chung else (params.a, params.b, 1.0)
        theta = inv_c2 - 1.0 - a_eff
        u_max = guarded_log(n_max)
        if theta > 0 and _summand_decreasing_beyond(u_max, theta, b_eff):
            tail = factor * _loglog_tail(theta, b_eff, guarded_loglog(n_max))
    return KernelSumResult(partial, n_max, tail, partial)


def j_ab_partial(
    psi: PsiSpec,
    params: WeightParams,
    n_max: int,
    token: Optional[CancellationToken] = None,
) -> KernelSumResult:
    """Partial sum of J_ab(psi) = sum (log n)^a (log log n)^b / n * exp(-1/psi(n)^2)."""
    return _j_partial(psi, params, n_max, False, token)


def j_chung_partial(psi: PsiSpec, n_max: int, token: Optional[CancellationToken] = None) -> KernelSumResult:
    """Partial sum of J(psi) = sum 1/(n psi(n)^2) exp(-1/psi(n)^2)."""
    return _j_partial(psi, WeightParams(0.0, 0.0), n_max, True, token)


def classify_psi_family(c: float, params: WeightParams) -> Verdict:
    """J_ab(psi_c) converges iff c < 1/sqrt(1+a); the boundary diverges since b > -1."""
    if not c > 0:
        raise DomainError(f"psi_c requires c > 0, got c={c}")
    return Verdict.CONVERGES if c < params.critical_eps else Verdict.DIVERGES


def classify_chung_family(c: float) -> Verdict:
    """J(psi_c) converges iff c < 1; at c = 1 the terms are log log n / (n log n)."""
    if not c > 0:
        raise DomainError(f"psi_c requires c > 0, got c={c}")
    return Verdict.CONVERGES if c < 1.0 else Verdict.DIVERGES


def increment_profile(
    psi: PsiSpec,
    params: WeightParams,
    n_grid: Sequence[int],
    token: Optional[CancellationToken] = None,
) -> IncrementProfile:
    """Checkpoint partial sums of J_ab(psi) and the local decay of their increments.

    With u = log n, a summand behaving like u^alpha du puts roughly
    (u_i - u_{i-1}) * u_mid^alpha into each block; alpha is estimated by
    regressing log(increment / block width) on log u_mid. The series
    converges iff alpha < -1 for the parametric family.
    """
    grid = [int(n) for n in n_grid]
    if len(grid) < 3 or any(hi <= lo for lo, hi in zip(grid, grid[1:])):
        raise ParameterError("increment profile needs at least 3 strictly increasing checkpoints")
    _, marks = _accumulate(_psi_log_term(psi, params, False), grid[-1], token, checkpoints=grid)
    sums = [marks[n] for n in grid]
    increments = [hi - lo for lo, hi in zip(sums, sums[1:])]
    ratios = [hi / lo if lo > 0 else math.inf for lo, hi in zip(increments, increments[1:])]
    u = [guarded_log(n) for n in grid]
    widths = [hi - lo for lo, hi in zip(u, u[1:])]
    mids = [0.5 * (lo + hi) for lo, hi in zip(u, u[1:])]
    fit = stats.linregress(np.log(mids), np.log(np.array(increments) / np.array(widths)))
    return IncrementProfile(grid, sums, increments, ratios, float(fit.slope))
