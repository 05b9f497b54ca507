"""Acceptance tests for the truncation diagnostics and the tail-moment profile.

Tests Acceptance Criteria 8 and 10
"""

import math

import pytest

from src.chunglil.distributions import AtomsDoublyExp, Rademacher, StdNormal, TwoPoint
from src.chunglil.montecarlo import condition_profile, truncation_stats


class TestTruncationAcceptance:
    """
    ACCEPTANCE CRITERIA 8:
    Rademacher -> B_n = n and Delta_n = 0; StdNormal n = 10^6 -> B_n/(n sigma^2) = 1 within 1e-12;
    TwoPoint(v = 10) n = 16 -> B_n < n with the closed-form value to 1e-12
    """

    @pytest.mark.parametrize("n", [16, 100, 1000])
    def test_rademacher_untouched(self, n):
        stats = truncation_stats(Rademacher(), n, 0.25, 50, seed=42)
        assert stats.B_n == float(n)
        assert all(value == 0.0 for value in stats.delta_quantiles.values())

    def test_normal_truncation_negligible(self):
        stats = truncation_stats(StdNormal(), 1_000_000, 0.25, 2, seed=42)
        assert abs(stats.B_n_over_n_sigma2 - 1.0) <= 1e-12

    def test_two_point_truncation_active(self):
        stats = truncation_stats(TwoPoint(v=10.0), 16, 0.25, 2000, seed=42)
        # the atom at 10 is cut; the kept atom -0.1 has mass 100/101
        assert stats.B_n == pytest.approx(16.0 / 101.0 ** 2, abs=1e-12)
        assert stats.B_n < 16
        assert stats.B_n_empirical == pytest.approx(stats.B_n, rel=0.25)


class TestConditionProfileAcceptance:
    """
    ACCEPTANCE CRITERIA 10:
    doubly-exponential atoms keep log log t * E[X^2 I{|X| >= t}] at order c along the atoms,
    while the normal profile at t = 10 is below 1e-20
    """

    def test_atoms_profile_closed_form(self):
        profile = condition_profile(AtomsDoublyExp(c=1.0, k_max=30), [math.exp(20.0)])
        expected = 20.0 * math.fsum(1.0 / j ** 2 for j in range(20, 31))
        assert abs(profile[0].value - expected) <= 1e-12
        assert expected == pytest.approx(0.3716, abs=1e-3)

    def test_infinite_ladder_does_not_decay(self):
        ladder = AtomsDoublyExp(c=1.0, k_max="inf")
        values = [row.value for row in condition_profile(ladder, [math.exp(k) for k in (20, 40, 80)])]
        assert values[0] == pytest.approx(20.0 * (1.0 / 20.0 + 1.0 / (2 * 400.0) + 1.0 / (6 * 8000.0)), rel=1e-4)
        assert all(value > 0.95 for value in values)
        assert ladder.variance == pytest.approx(math.pi ** 2 / 6.0)

    def test_normal_profile_at_ten(self):
        assert condition_profile(StdNormal(), [math.log(10.0)])[0].value < 1e-20
