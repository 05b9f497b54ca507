"""Acceptance tests for the Brownian small-ball probability.

Tests Acceptance Criteria 1 and 2:
theta and reflection series agree, and a Gaussian walk reproduces the value at x = 1
"""

import math
import time

import numpy as np
import pytest

from src.chunglil.analytic import small_ball_reflection, small_ball_sup, small_ball_theta
from src.chunglil.distributions import StdNormal
from src.chunglil.models import EpsilonSchedule
from src.chunglil.montecarlo import estimate_small_dev
from src.chunglil.weights import guarded_loglog

P_AT_ONE = 0.37078


def eps_for_radius(x, n):
    """eps whose Chung threshold at n is the Brownian radius x."""
    return x / math.sqrt(math.pi ** 2 / (8.0 * guarded_loglog(n)))


class TestDualRepresentationAcceptance:

    def test_series_agree_on_grid(self):
        """
        ACCEPTANCE CRITERIA 1:
        theta and reflection series agree within 1e-10 on x in {0.2, 0.25, ..., 5.0}; runtime < 1 s
        """
        grid = np.round(np.arange(0.2, 5.0 + 1e-9, 0.05), 10)
        assert len(grid) == 97

        start = time.perf_counter()
        gaps = [abs(small_ball_theta(x).value - small_ball_reflection(x).value) for x in grid]
        elapsed = time.perf_counter() - start

        assert max(gaps) <= 1e-10, f"worst disagreement {max(gaps):.3g}"
        assert elapsed < 1.0, f"grid took {elapsed:.2f}s"

    def test_switch_point_is_continuous(self):
        """The dispatcher changes series at x = 1 without a visible jump."""
        below = small_ball_sup(1.0 - 1e-9).value
        above = small_ball_sup(1.0 + 1e-9).value
        assert abs(above - below) < 1e-8
        assert small_ball_sup(1.0).value == pytest.approx(P_AT_ONE, abs=1e-5)


class TestGaussianWalkAcceptance:

    def test_desk_scale_walk(self):
        """Reduced form of criterion 2: n = 10^4, 2 * 10^4 replications."""
        n = 10_000
        estimate = estimate_small_dev(StdNormal(), n, eps_for_radius(1.0, n), EpsilonSchedule(), 20_000, seed=42)
        assert estimate.reference == pytest.approx(P_AT_ONE, abs=1e-5)
        assert abs(estimate.p_hat - P_AT_ONE) <= 0.01 + 3 * estimate.stderr

    @pytest.mark.slow
    def test_full_scale_walk(self):
        """
        ACCEPTANCE CRITERIA 2:
        StdNormal walk, n = 10^5, reps = 10^6, x = 1 -> p_hat within 0.005 of 0.37078
        """
        n = 100_000
        estimate = estimate_small_dev(
            StdNormal(), n, eps_for_radius(1.0, n), EpsilonSchedule(), 1_000_000, seed=42, workers=8
        )
        assert abs(estimate.p_hat - P_AT_ONE) <= 0.005, f"p_hat={estimate.p_hat}"

    @pytest.mark.parametrize("eps", [0.8, 1.0, 1.4])
    def test_desk_scale_oracle_agreement(self, eps):
        """Reduced form of the oracle check: n = 10^4, 2 * 10^4 replications per eps."""
        n = 10_000
        radius = eps * math.sqrt(math.pi ** 2 / (8.0 * guarded_loglog(n)))
        oracle = small_ball_sup(radius).value
        estimate = estimate_small_dev(StdNormal(), n, eps, EpsilonSchedule(), 20_000, seed=42, workers=4)
        assert estimate.reference == pytest.approx(oracle, rel=1e-12)
        assert abs(estimate.p_hat - oracle) <= 3 * estimate.stderr + 0.01, f"eps={eps} p_hat={estimate.p_hat}"

    @pytest.mark.slow
    @pytest.mark.parametrize("eps", [0.8, 1.0, 1.4])
    def test_full_scale_oracle_agreement(self, eps):
        """StdNormal, n = 10^5, reps = 10^5: |p_hat - small_ball_sup| <= 3 stderr + 0.01."""
        n = 100_000
        oracle = small_ball_sup(eps * math.sqrt(math.pi ** 2 / (8.0 * guarded_loglog(n)))).value
        estimate = estimate_small_dev(StdNormal(), n, eps, EpsilonSchedule(), 100_000, seed=42, workers=8)
        assert abs(estimate.p_hat - oracle) <= 3 * estimate.stderr + 0.01, f"eps={eps} p_hat={estimate.p_hat}"
