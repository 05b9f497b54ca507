"""Random-walk simulation of small-deviation probabilities and truncation diagnostics.

Replication r always draws from RandomStream.at(seed, r). Replications are
grouped into fixed-size blocks that are evaluated independently and
reduced in block order, so results do not depend on the worker count.
"""

import logging
import math
import multiprocessing as mp
from functools import partial
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .analytic import small_ball_sup
from .distributions import DistributionSpec
from .errors import DomainError, InsufficientDataError, ParameterError
from .models import ConditionRow, EpsilonSchedule, McEstimate, RateRegression, TruncationStats
from .rngcore import RandomStream
from .weights import CancellationToken, guarded_log, guarded_loglog, phi

logger = logging.getLogger(__name__)

CHUNK_STEPS = 1 << 16
REP_BLOCK = 1000
MIN_REPS = 100
MIN_REGRESSION_SUCCESSES = 10
MODEL_ERROR_BUDGET = 0.01
DELTA_QUANTILES = (("q50", 0.5), ("q90", 0.9), ("q99", 0.99))


def sample(dist: DistributionSpec, stream: RandomStream) -> float:
    """One draw from dist."""
    dist.check_samplable()
    return float(dist.draw(stream, 1)[0])


def _chunk_sizes(n: int):
    # multiples of 64 keep Rademacher bit consumption independent of n
    done = 0
    while done < n:
        size = min(CHUNK_STEPS, -(-(n - done) // 64) * 64)
        yield done, size
        done += size


def walk_max_abs_profile(dist: DistributionSpec, checkpoints: Sequence[int], stream: RandomStream) -> List[float]:
    """M_k = max_{j <= k} |S_j| at each increasing checkpoint k of one path."""
    marks = [int(k) for k in checkpoints]
    if not marks or marks[0] < 1 or any(hi <= lo for lo, hi in zip(marks, marks[1:])):
        raise ParameterError("checkpoints must be a strictly increasing list of positive integers")
    maxima = []
    position = 0.0
    running = 0.0
    pending = iter(marks)
    mark = next(pending)
    for start, size in _chunk_sizes(marks[-1]):
        path = position + np.cumsum(dist.draw(stream, size))
        stop = start + size
        while mark is not None and mark <= stop:
            head = mark - start
            maxima.append(max(running, float(np.max(np.abs(path[:head])))))
            mark = next(pending, None)
        running = max(running, float(np.max(np.abs(path))))
        position = float(path[-1])
    return maxima


def walk_max_abs(dist: DistributionSpec, n: int, stream: RandomStream) -> float:
    """M_n for one simulated path, single pass with a running maximum."""
    if n < 1:
        raise ParameterError(f"walk length must be >= 1, got n={n}")
    return walk_max_abs_profile(dist, [n], stream)[0]


def _run_blocks(task: Callable[[int, int], object], reps: int, workers: int,
                token: Optional[CancellationToken] = None) -> list:
    """task(start, stop) over consecutive replication blocks, results in block order."""
    bounds = [(start, min(start + REP_BLOCK, reps)) for start in range(0, reps, REP_BLOCK)]
    if workers <= 1 or len(bounds) == 1:
        results = []
        for start, stop in bounds:
            if token is not None:
                token.raise_if_cancelled()
            results.append(task(start, stop))
        return results
    logger.info(f"running {reps} replications in {len(bounds)} blocks on {workers} workers")
    with mp.Pool(processes=workers) as pool:
        return pool.starmap(task, bounds)


def _count_small_maxima(dist: DistributionSpec, checkpoints: Tuple[int, ...], thresholds: Tuple[float, ...],
                        seed: int, start: int, stop: int) -> np.ndarray:
    counts = np.zeros(len(checkpoints), dtype=np.int64)
    limits = np.array(thresholds)
    for rep in range(start, stop):
        maxima = walk_max_abs_profile(dist, checkpoints, RandomStream.at(seed, rep))
        counts += np.array(maxima) <= limits
    return counts


def _check_reps(reps: int) -> None:
    if reps < MIN_REPS:
        raise ParameterError(f"reps must be >= {MIN_REPS}, got {reps}")


def brownian_reference(n: int, eps: float, schedule: EpsilonSchedule) -> float:
    """small_ball_sup at the radius matching P(M_n <= sigma phi(n) (eps + a_n))."""
    loglog_n = guarded_loglog(n)
    radius = (eps + schedule.offset(loglog_n)) * math.sqrt(math.pi ** 2 / (8.0 * loglog_n))
    return small_ball_sup(radius).value if radius > 0 else 0.0


def estimate_small_dev(
    dist: DistributionSpec,
    n: int,
    eps: float,
    schedule: EpsilonSchedule,
    reps: int,
    seed: int,
    workers: int = 1,
    token: Optional[CancellationToken] = None,
) -> McEstimate:
    """Fraction of replications with M_n <= sigma phi(n) (eps + a_n(eps))."""
    if n < 2:
        raise ParameterError(f"walk length must be >= 2, got n={n}")
    _check_reps(reps)
    if not eps >= 0:
        raise DomainError(f"eps must be non-negative, got eps={eps}")
    dist.check_samplable()
    threshold = dist.sigma * phi(n) * (eps + schedule.offset(guarded_loglog(n)))
    reference = brownian_reference(n, eps, schedule)

    bound = dist.support_bound
    if bound is not None and threshold >= n * bound:
        logger.info(f"threshold {threshold:.6g} >= n * max|X|; every path qualifies")
        successes = reps
    else:
        task = partial(_count_small_maxima, dist, (n,), (threshold,), seed)
        successes = int(sum(int(counts[0]) for counts in _run_blocks(task, reps, workers, token)))

    p_hat = successes / reps
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / reps)
    logger.info(f"n={n} eps={eps} {dist!r}: p_hat={p_hat:.6f} +- {stderr:.2g} (reference {reference:.6f})")
    return McEstimate(
        p_hat, stderr, reps, seed, n, eps, dist.summary(),
        tau=schedule.limit_tau, threshold=threshold, reference=reference,
        model_error_budget=MODEL_ERROR_BUDGET,
    )


def rate_regression(
    dist: DistributionSpec,
    eps: float,
    n_grid: Sequence[int],
    reps: int,
    seed: int,
    workers: int = 1,
    token: Optional[CancellationToken] = None,
) -> RateRegression:
    """Least-squares slope of log p_hat(n) against log log n; one coupled path per replication."""
    grid = tuple(int(n) for n in n_grid)
    if len(grid) < 4 or grid[0] < 2 or any(hi <= lo for lo, hi in zip(grid, grid[1:])):
        raise ParameterError("n_grid must hold at least 4 strictly increasing values >= 2")
    if not eps > 0:
        raise DomainError(f"eps must be positive, got eps={eps}")
    _check_reps(reps)
    dist.check_samplable()
    thresholds = tuple(dist.sigma * phi(n) * eps for n in grid)
    task = partial(_count_small_maxima, dist, grid, thresholds, seed)
    counts = np.sum(_run_blocks(task, reps, workers, token), axis=0)

    for n, count in zip(grid, counts):
        if count < MIN_REGRESSION_SUCCESSES:
            raise InsufficientDataError(
                f"p_hat * reps = {int(count)} < {MIN_REGRESSION_SUCCESSES} at n={n}; increase reps or eps"
            )
    p_hats = counts / reps
    stderrs = np.sqrt(p_hats * (1.0 - p_hats) / reps)
    fit = stats.linregress([guarded_loglog(n) for n in grid], np.log(p_hats))
    logger.info(f"rate regression eps={eps}: slope={fit.slope:.4f} (expected {-1.0 / eps ** 2:.4f})")
    return RateRegression(
        list(grid), p_hats.tolist(), stderrs.tolist(), float(fit.slope), float(fit.intercept),
        -1.0 / (eps * eps), float(fit.stderr), eps, reps, seed, dist.summary(),
    )


def _truncation_block(dist: DistributionSpec, n: int, threshold: float, mean_kept: float,
                      seed: int, start: int, stop: int) -> Tuple[np.ndarray, float, float, int]:
    """Per-replication Delta_n plus pooled sums of the truncated variables."""
    deltas = np.zeros(stop - start)
    kept_sum = 0.0
    kept_sq = 0.0
    for i, rep in enumerate(range(start, stop)):
        stream = RandomStream.at(seed, rep)
        gap = 0.0
        delta = 0.0
        for offset, size in _chunk_sizes(n):
            steps = dist.draw(stream, size)[: n - offset]
            kept = np.where(np.abs(steps) <= threshold, steps, 0.0)
            # S*_k - S_k accumulates -(X_j I{|X_j| > t} + E[X I{|X| <= t}])
            path = gap + np.cumsum(kept - steps - mean_kept)
            delta = max(delta, float(np.max(np.abs(path))))
            gap = float(path[-1])
            kept_sum += float(np.sum(kept))
            kept_sq += float(np.sum(kept * kept))
        deltas[i] = delta
    return deltas, kept_sum, kept_sq, (stop - start)


def truncated_variance(dist: DistributionSpec, n: float, p_exponent: float) -> Tuple[float, float]:
    """Threshold sqrt(n) / (log n)^p and B_n = n Var(X I{|X| <= threshold}), capped at n sigma^2.

    Purely analytic, so n may be far beyond anything that can be simulated.
    """
    if not 0 < p_exponent < 0.5:
        raise DomainError(f"truncation exponent must satisfy 0 < p < 1/2, got p={p_exponent}")
    threshold = math.sqrt(n) / guarded_log(n) ** p_exponent
    mean_kept, second_kept = dist.truncated_moments(threshold)
    return threshold, min(max(n * (second_kept - mean_kept * mean_kept), 0.0), n * dist.variance)


def truncation_stats(
    dist: DistributionSpec,
    n: int,
    p_exponent: float,
    reps: int,
    seed: int,
    workers: int = 1,
    token: Optional[CancellationToken] = None,
) -> TruncationStats:
    """Truncate at sqrt(n) / (log n)^p, recenter, and compare with the raw walk."""
    if n < 1:
        raise ParameterError(f"walk length must be >= 1, got n={n}")
    if reps < 1:
        raise ParameterError(f"reps must be >= 1, got {reps}")
    threshold, b_n = truncated_variance(dist, n, p_exponent)
    dist.check_samplable()

    mean_kept, second_kept = dist.truncated_moments(threshold)
    variance = dist.variance
    removed_second = max(variance - second_kept, 0.0)

    task = partial(_truncation_block, dist, n, threshold, mean_kept, seed)
    blocks = _run_blocks(task, reps, workers, token)
    deltas = np.concatenate([block[0] for block in blocks])
    draws = n * reps
    pooled_mean = sum(block[1] for block in blocks) / draws
    pooled_second = sum(block[2] for block in blocks) / draws
    b_n_empirical = n * (pooled_second - pooled_mean * pooled_mean)

    quantiles = {label: float(np.quantile(deltas, q)) for label, q in DELTA_QUANTILES}
    quantiles["max"] = float(np.max(deltas))
    logger.info(f"truncation n={n} p={p_exponent}: threshold={threshold:.6g}, B_n/(n sigma^2)={b_n / (n * variance):.12g}")
    return TruncationStats(
        n, p_exponent, threshold, b_n, b_n / (n * variance), quantiles, b_n_empirical,
        guarded_loglog(n) * removed_second / variance, reps, seed,
    )


def condition_profile(dist: DistributionSpec, log_t_grid: Sequence[float]) -> List[ConditionRow]:
    """log log t * E[X^2 I{|X| >= t}] along t = exp(log_t), guarded log log."""
    rows = []
    for log_t in log_t_grid:
        if not math.isfinite(log_t):
            raise DomainError(f"condition profile needs finite log t, got {log_t}")
        loglog_t = math.log(max(log_t, math.e))
        tail = dist.tail_second_moment_log(log_t)
        rows.append(ConditionRow(float(log_t), loglog_t, tail, loglog_t * tail))
    return rows
