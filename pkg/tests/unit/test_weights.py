"""Unit tests for the weighted-series evaluators and integral tests."""

import math

import numpy as np
import pytest
from scipy import integrate, special

from src.chunglil.analytic import theorem2_constant
from src.chunglil.errors import DivergenceError, DomainError, ModeError, OperationCancelled, ParameterError
from src.chunglil.models import PsiSpec, Verdict, WeightParams
from src.chunglil.weights import (
    CancellationToken,
    brownian_series_t1,
    brownian_series_t2,
    classify_chung_family,
    classify_psi_family,
    guarded_log,
    guarded_loglog,
    increment_profile,
    j_ab_partial,
    j_chung_partial,
    kernel_sum_direct,
    kernel_sum_integral,
    phi,
    scaled_limit_check,
    theorem2_kernel_limit,
    weight,
)


def eps_for_theta(theta, a):
    """eps with 1/eps^2 - 1 - a = theta."""
    return 1.0 / math.sqrt(theta + 1.0 + a)


class TestGuardedLogs:

    def test_small_arguments_are_floored(self):
        assert guarded_log(1) == 1.0
        assert guarded_log(2) == 1.0
        assert guarded_loglog(1) == 1.0
        assert guarded_loglog(15) == 1.0
        assert guarded_loglog(16) == pytest.approx(math.log(math.log(16)), rel=1e-15)

    def test_weight(self):
        assert weight(15, WeightParams(1.0, 1.0)) == pytest.approx(math.log(15) / 15, rel=1e-15)
        assert weight(1, WeightParams(0.0, 0.0)) == 1.0
        with pytest.raises(DomainError):
            weight(0, WeightParams(0.0, 0.0))

    def test_phi(self):
        assert phi(1_000_000) == pytest.approx(685.448, rel=1e-5)
        with pytest.raises(DomainError):
            phi(0)

    def test_weight_exponents_validated(self):
        with pytest.raises(DomainError):
            WeightParams(-1.0, 0.0)
        assert WeightParams(3.0, -0.5).critical_eps == pytest.approx(0.5)


class TestKernelSums:
    """Exact integral identity and direct-summation bracketing."""

    def test_integral_at_unit_theta(self):
        params = WeightParams(0.0, 0.0)
        assert kernel_sum_integral(params, eps_for_theta(1.0, 0.0)) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_integral_b_zero_closed_form(self):
        params = WeightParams(0.0, 0.0)
        for theta in (0.01, 0.5, 3.0):
            value = kernel_sum_integral(params, eps_for_theta(theta, 0.0))
            assert value == pytest.approx(math.exp(-theta) / theta, rel=1e-9)

    @pytest.mark.parametrize("a,b", [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (3.0, -0.5)])
    @pytest.mark.parametrize("theta", [1.0, 2.0, 3.0])
    def test_integral_matches_incomplete_gamma(self, a, b, theta):
        value = kernel_sum_integral(WeightParams(a, b), eps_for_theta(theta, a))
        expected = theta ** (-(b + 1.0)) * special.gammaincc(b + 1.0, theta) * special.gamma(b + 1.0)
        assert value == pytest.approx(expected, rel=1e-9)

    def test_integral_with_log_exponent_near_minus_one(self):
        b = -1.0 + 1e-7
        eps = 1.0 / math.sqrt(2.0)
        theta = 1.0 / eps ** 2 - 1.0
        tail, _ = integrate.quad(lambda v: v ** b * math.exp(-theta * v), 1.0, math.inf, epsabs=0.0, epsrel=1e-12)
        assert kernel_sum_integral(WeightParams(0.0, b), eps) == pytest.approx(tail, rel=1e-9)

    def test_integral_diverges_at_critical_eps(self):
        with pytest.raises(DivergenceError):
            kernel_sum_integral(WeightParams(0.0, 0.0), 1.0)
        with pytest.raises(DivergenceError):
            kernel_sum_integral(WeightParams(3.0, 0.0), 0.5)

    @pytest.mark.parametrize("a,b", [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (3.0, -0.5)])
    def test_direct_sum_brackets_integral(self, a, b):
        params = WeightParams(a, b)
        eps = eps_for_theta(2.0, a)
        result = kernel_sum_direct(params, eps, 100_000)
        low, high = result.integral_bracket()
        integral = kernel_sum_integral(params, eps)
        assert low <= integral <= high
        assert result.tail_bound > 0
        assert result.head_sum < result.partial_sum

    def test_direct_mode_gates(self):
        params = WeightParams(0.0, 0.0)
        with pytest.raises(ModeError):
            kernel_sum_direct(params, 0.9, 10_000)
        with pytest.raises(ParameterError):
            kernel_sum_direct(params, 0.5, 50)

    def test_direct_sum_cancellation(self):
        token = CancellationToken()
        token.cancel()
        with pytest.raises(OperationCancelled):
            kernel_sum_direct(WeightParams(0.0, 0.0), 0.5, 1_000, token=token)


class TestScaledLimits:

    def test_deviation_shrinks_toward_critical_eps(self):
        rows = scaled_limit_check(WeightParams(0.0, 0.0), 0.0, [0.99, 0.995, 0.999])
        deviations = [abs(row.deviation) for row in rows]
        assert deviations[0] > deviations[1] > deviations[2]
        assert deviations[2] <= 0.005
        assert rows[0].deviation == pytest.approx(-0.0348, abs=5e-4)

    def test_schedule_shift(self):
        rows = scaled_limit_check(WeightParams(0.0, 0.0), 0.5, [0.99, 0.995, 0.999])
        deviations = [abs(row.deviation) for row in rows]
        assert deviations[0] > deviations[1] > deviations[2]
        assert deviations[2] <= 0.01
        assert rows[2].scaled_value == pytest.approx(2.0 / math.pi * math.e, rel=0.01)

    def test_heavy_log_weight(self):
        rows = scaled_limit_check(WeightParams(3.0, -0.5), 0.0, [0.49, 0.495, 0.499])
        assert all(row.scaled_value > 0 and math.isfinite(row.scaled_value) for row in rows)
        deviations = [abs(row.deviation) for row in rows]
        assert deviations[0] > deviations[1] > deviations[2]

    def test_out_of_range_eps(self):
        with pytest.raises(DivergenceError):
            scaled_limit_check(WeightParams(0.0, 0.0), 0.0, [0.5, 1.2])

    def test_second_theorem_kernel_limit(self):
        assert theorem2_kernel_limit(1.0, 0.0, 100.0) == pytest.approx(1.0, abs=2e-4)
        assert theorem2_kernel_limit(9.0, 0.0, 300.0) == pytest.approx(1.0 / 9.0, abs=2e-4)
        assert theorem2_kernel_limit(1.0, 0.0, 0.01) == 0.0
        with pytest.raises(DomainError):
            theorem2_kernel_limit(0.0, 0.0, 1.0)

    def test_brownian_series_first_theorem(self):
        params = WeightParams(0.0, 0.0)
        exact = brownian_series_t1(params, 0.999)
        kernel = scaled_limit_check(params, 0.0, [0.999])[0]
        assert exact.deviation == pytest.approx(kernel.deviation, abs=1e-4)
        with pytest.raises(DivergenceError):
            brownian_series_t1(params, 1.0)

    def test_brownian_series_second_theorem(self):
        row = brownian_series_t2(0.0, 100.0)
        assert row.scaled_value == pytest.approx(theorem2_constant(0.0), rel=1e-3)
        assert abs(row.deviation) < 1e-3


class TestIntegralTests:
    """J and J_ab partial sums and the parametric dichotomy."""

    def test_constant_psi_is_harmonic(self):
        n = np.arange(1, 1001, dtype=np.float64)
        harmonic = math.fsum((1.0 / n).tolist())
        result = j_chung_partial(PsiSpec.tabulated([(1, 1.0)]), 1000)
        assert result.partial_sum == pytest.approx(math.exp(-1.0) * harmonic, rel=1e-10)
        assert result.tail_bound == math.inf
        large = j_ab_partial(PsiSpec.tabulated([(1, 10.0)]), WeightParams(0.0, 0.0), 1000)
        assert large.partial_sum == pytest.approx(math.exp(-0.01) * harmonic, rel=1e-10)

    def test_boundary_family_grows_like_loglog(self):
        psi = PsiSpec.c_over_sqrt_loglog(1.0)
        params = WeightParams(0.0, 0.0)
        grown = j_ab_partial(psi, params, 1_000_000).partial_sum - j_ab_partial(psi, params, 10_000).partial_sum
        assert grown == pytest.approx(math.log(math.log(1e6)) - math.log(math.log(1e4)), abs=1e-4)

    def test_tail_bounds_follow_convergence(self):
        params = WeightParams(0.0, 0.0)
        assert math.isfinite(j_ab_partial(PsiSpec.c_over_sqrt_loglog(0.9), params, 100_000).tail_bound)
        assert math.isfinite(j_chung_partial(PsiSpec.c_over_sqrt_loglog(0.9), 100_000).tail_bound)
        assert j_ab_partial(PsiSpec.c_over_sqrt_loglog(1.1), params, 100_000).tail_bound == math.inf
        assert j_chung_partial(PsiSpec.c_over_sqrt_loglog(1.1), 100_000).tail_bound == math.inf

    def test_nonpositive_tabulated_psi(self):
        psi = PsiSpec.tabulated([(1, 0.5), (100, -0.1)])
        with pytest.raises(DomainError):
            j_ab_partial(psi, WeightParams(0.0, 0.0), 1000)

    def test_classifiers(self):
        params = WeightParams(0.0, 0.0)
        assert classify_psi_family(0.9, params) is Verdict.CONVERGES
        assert classify_psi_family(1.1, params) is Verdict.DIVERGES
        assert classify_psi_family(1.0, params) is Verdict.DIVERGES
        assert classify_psi_family(0.7, WeightParams(1.0, 0.0)) is Verdict.CONVERGES
        assert classify_psi_family(0.9, WeightParams(1.0, 0.0)) is Verdict.DIVERGES
        assert classify_chung_family(0.99) is Verdict.CONVERGES
        assert classify_chung_family(1.0) is Verdict.DIVERGES
        with pytest.raises(DomainError):
            classify_chung_family(0.0)

    def test_increment_profile_separates_families(self):
        params = WeightParams(0.0, 0.0)
        grid = [1_000, 10_000, 100_000, 1_000_000]
        converging = increment_profile(PsiSpec.c_over_sqrt_loglog(0.9), params, grid)
        assert converging.decay_exponent == pytest.approx(-1.0 / 0.81, abs=0.05)
        assert all(ratio < 1.0 for ratio in converging.ratios)
        diverging = increment_profile(PsiSpec.c_over_sqrt_loglog(1.1), params, grid)
        assert diverging.decay_exponent > -1.0
        assert converging.partial_sums[-1] == pytest.approx(
            j_ab_partial(PsiSpec.c_over_sqrt_loglog(0.9), params, 1_000_000).partial_sum, rel=1e-12
        )

    def test_increment_profile_needs_three_checkpoints(self):
        with pytest.raises(ParameterError):
            increment_profile(PsiSpec.c_over_sqrt_loglog(0.9), WeightParams(0.0, 0.0), [100, 1000])
