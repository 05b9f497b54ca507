"""Acceptance tests for the Rademacher walk experiments.

Tests Acceptance Criteria 6, 7 and 11:
small-deviation rate, agreement with the Brownian value, and reproducibility across workers
"""

import json

import pytest

from src.chunglil.cli import main
from src.chunglil.distributions import Rademacher
from src.chunglil.models import EpsilonSchedule
from src.chunglil.montecarlo import estimate_small_dev, rate_regression

BROWNIAN_AT_1E4 = 0.13823


class TestRateAcceptance:

    def test_desk_scale_rate(self):
        """Reduced form of criterion 6: n up to 10^5 with 2000 replications."""
        regression = rate_regression(Rademacher(), 1.0, [1_000, 10_000, 30_000, 100_000], 2000, seed=42)
        assert regression.expected_slope == -1.0
        assert -1.5 <= regression.slope <= -0.6

    @pytest.mark.slow
    def test_full_scale_rate(self):
        """
        ACCEPTANCE CRITERIA 6:
        Rademacher, eps = 1, n_grid = {10^3, ..., 10^6}, reps = 10^5 -> slope in [-1.2, -0.85]
        """
        regression = rate_regression(
            Rademacher(), 1.0, [1_000, 10_000, 100_000, 1_000_000], 100_000, seed=42, workers=8
        )
        assert -1.2 <= regression.slope <= -0.85, f"slope={regression.slope}"

    def test_desk_scale_rate_below_one(self):
        """eps = 0.8 steepens the decay toward -1/0.64; n up to 10^5 with 4000 replications."""
        regression = rate_regression(Rademacher(), 0.8, [1_000, 10_000, 30_000, 100_000], 4000, seed=42, workers=4)
        assert regression.expected_slope == pytest.approx(-1.5625, abs=1e-12)
        assert -2.5 <= regression.slope <= -0.8, f"slope={regression.slope}"

    @pytest.mark.slow
    def test_full_scale_rate_below_one(self):
        """Rademacher, eps = 0.8, n_grid = {10^3, ..., 10^6}, reps = 10^5 -> slope in [-1.9, -1.3]."""
        regression = rate_regression(
            Rademacher(), 0.8, [1_000, 10_000, 100_000, 1_000_000], 100_000, seed=42, workers=8
        )
        assert -1.9 <= regression.slope <= -1.3, f"slope={regression.slope}"


class TestBrownianAgreementAcceptance:

    def test_desk_scale_agreement(self):
        estimate = estimate_small_dev(Rademacher(), 10_000, 1.0, EpsilonSchedule(), 5000, seed=42)
        assert estimate.reference == pytest.approx(BROWNIAN_AT_1E4, abs=1e-4)
        assert abs(estimate.p_hat - BROWNIAN_AT_1E4) <= 0.02 + 3 * estimate.stderr

    @pytest.mark.slow
    def test_full_scale_agreement(self):
        """
        ACCEPTANCE CRITERIA 7:
        Rademacher, n = 10^4, eps = 1.0, reps = 10^5 -> |p_hat - 0.13823| <= 0.02
        """
        estimate = estimate_small_dev(Rademacher(), 10_000, 1.0, EpsilonSchedule(), 100_000, seed=42, workers=8)
        assert abs(estimate.p_hat - BROWNIAN_AT_1E4) <= 0.02, f"p_hat={estimate.p_hat}"


class TestDeterminismAcceptance:

    def _p_hat(self, capsys, threads, reps):
        argv = ["mc", "--dist", "rademacher", "--n", "10000", "--eps", "1.0", "--reps", str(reps),
                "--seed", "42", "--threads", str(threads), "--format", "json"]
        assert main(argv) == 0
        record = json.loads(capsys.readouterr().out)
        return next(item["value"] for item in record["rows"] if item["quantity"] == "p_hat")

    def test_thread_counts_agree(self, capsys):
        """
        ACCEPTANCE CRITERIA 11:
        the criterion-7 command re-run with threads in {1, 2, 8} gives bit-identical p_hat
        """
        values = {threads: self._p_hat(capsys, threads, 3000) for threads in (1, 2, 8)}
        assert len(set(values.values())) == 1, values

    @pytest.mark.slow
    def test_thread_counts_agree_full_scale(self, capsys):
        values = {threads: self._p_hat(capsys, threads, 100_000) for threads in (1, 2, 8)}
        assert len(set(values.values())) == 1, values
