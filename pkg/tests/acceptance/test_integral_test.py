"""Acceptance tests for the integral-test dichotomy on psi_c(n) = c / sqrt(log log n).

Tests Acceptance Criteria 9
"""

import itertools
import math

import pytest

from src.chunglil.models import PsiSpec, Verdict, WeightParams
from src.chunglil.weights import classify_psi_family, increment_profile

C_VALUES = [0.7, 0.9, 0.99, 1.0, 1.01, 1.1, 1.5]
A_VALUES = [0.0, 1.0, 3.0]
# the fitted decay exponent is only trusted this far from the boundary exponent -1
DECAY_MARGIN = 0.15


def check_profile(c, a, grid):
    params = WeightParams(a, 0.0)
    verdict = classify_psi_family(c, params)
    profile = increment_profile(PsiSpec.c_over_sqrt_loglog(c), params, grid)
    if verdict is Verdict.CONVERGES:
        assert all(ratio < 1.0 for ratio in profile.ratios), profile.ratios
    if abs(1.0 + a - 1.0 / c ** 2) >= DECAY_MARGIN:
        assert (profile.decay_exponent < -1.0) == (verdict is Verdict.CONVERGES), (c, a, profile.decay_exponent)


class TestDichotomyAcceptance:

    @pytest.mark.parametrize("c,a", list(itertools.product(C_VALUES, A_VALUES)))
    def test_verdict_matches_rule(self, c, a):
        """
        ACCEPTANCE CRITERIA 9 (verdicts):
        classifier verdicts match the rule c < 1/sqrt(1+a)
        """
        expected = Verdict.CONVERGES if c < 1.0 / math.sqrt(1.0 + a) else Verdict.DIVERGES
        assert classify_psi_family(c, WeightParams(a, 0.0)) is expected

    @pytest.mark.parametrize("c,a", list(itertools.product(C_VALUES, A_VALUES)))
    def test_increment_diagnostics(self, c, a):
        """Reduced form of criterion 9: checkpoints up to 10^6."""
        check_profile(c, a, [1_000, 10_000, 100_000, 1_000_000])

    @pytest.mark.slow
    @pytest.mark.parametrize("c,a", list(itertools.product(C_VALUES, A_VALUES)))
    def test_increment_diagnostics_full_scale(self, c, a):
        """
        ACCEPTANCE CRITERIA 9 (diagnostics):
        increment ratios stay below 1 for convergent cases at n_max = 10^7
        """
        check_profile(c, a, [1_000, 10_000, 100_000, 1_000_000, 10_000_000])
