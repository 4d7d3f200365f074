import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import kolmogorov, ndtr, ndtri

from qregress import (
    DegenerateDesign,
    DegenerateNormalization,
    NonFiniteMoment,
    RngSeed,
    TooFewReplications,
    ValidationError,
    absolute_loss,
    consistency_check,
    design_stats,
    design_stats_prefixes,
    diagnostics_json,
    draw_errors,
    estimate_constants,
    estimate_score_second_moment,
    estimate_score_slope,
    gaussian,
    huber_loss,
    ks_test,
    laplace,
    lq_loss,
    normalized_statistic,
    quantile_loss,
    rho_prime,
    score_shift_curve,
    square_loss,
    student_t,
)
from qregress.asymptotics import _kolmogorov_sf

DRAWS = 200_000  # enough for tight 3*SE bands while staying fast


def slope_standard_error(loss, model, h, draws, seed):
    """SE of the central-difference slope, recomputed from the same stream."""
    e = draw_errors(model, seed.generator(), draws)
    terms = (rho_prime(loss, e + h) - rho_prime(loss, e - h)) / (2.0 * h)
    return float(np.std(terms, ddof=1) / math.sqrt(draws))


def moment_standard_error(loss, model, draws, seed):
    e = draw_errors(model, seed.generator(), draws)
    terms = rho_prime(loss, e) ** 2
    return float(np.std(terms, ddof=1) / math.sqrt(draws))


class TestDesignStats:
    def test_equal_design(self):
        out = design_stats([1.0, 1.0, 1.0, 1.0])
        assert out.s_n == 4.0 and out.d_n_sq == 0.25

    def test_single_point(self):
        out = design_stats([3.0])
        assert out.s_n == 9.0 and out.d_n_sq == 1.0

    def test_direct_arithmetic(self):
        out = design_stats([1.0, 2.0, 3.0])
        assert out.s_n == 14.0
        assert out.d_n_sq == pytest.approx(9.0 / 14.0, abs=1e-15)

    def test_zero_design_rejected(self):
        with pytest.raises(DegenerateDesign):
            design_stats([0.0, 0.0])

    def test_prefixes(self):
        stats_list = design_stats_prefixes([1.0, 2.0, 3.0, 1.0], [2, 4])
        assert [s.n for s in stats_list] == [2, 4]
        assert stats_list[0].s_n == 5.0
        assert stats_list[1].s_n == 15.0

    def test_prefixes_must_increase(self):
        with pytest.raises(ValidationError):
            design_stats_prefixes([1.0, 2.0], [2, 2])


class TestScoreSlope:
    def test_square_loss_is_exactly_two(self):
        # rho'(x) = 2x makes every difference term equal 2.
        slope = estimate_score_slope(square_loss(), gaussian(1.0), draws=DRAWS, seed=RngSeed(1))
        assert abs(slope - 2.0) <= 1e-9

    def test_absolute_gaussian(self):
        # limit is twice the error density at zero: sqrt(2/pi) for N(0,1)
        seed = RngSeed(2)
        slope = estimate_score_slope(absolute_loss(), gaussian(1.0), draws=DRAWS, seed=seed)
        se = slope_standard_error(absolute_loss(), gaussian(1.0), 1e-3, DRAWS, seed)
        assert abs(slope - math.sqrt(2.0 / math.pi)) <= 3.0 * se

    def test_absolute_laplace(self):
        # twice the Laplace density at zero: 1/scale
        seed = RngSeed(3)
        slope = estimate_score_slope(absolute_loss(), laplace(1.0), draws=DRAWS, seed=seed)
        se = slope_standard_error(absolute_loss(), laplace(1.0), 1e-3, DRAWS, seed)
        assert abs(slope - 1.0) <= 3.0 * se

    def test_huber_gaussian_closed_form(self):
        # slope = P(|e| <= c) = 2*Phi(c) - 1
        c = 1.345
        seed = RngSeed(4)
        slope = estimate_score_slope(huber_loss(c), gaussian(1.0), draws=DRAWS, seed=seed)
        expected = 2.0 * float(ndtr(c)) - 1.0
        se = slope_standard_error(huber_loss(c), gaussian(1.0), 1e-3, DRAWS, seed)
        assert abs(slope - expected) <= max(3.0 * se, 1e-5)

    def test_draw_floor_enforced(self):
        with pytest.raises(ValidationError):
            estimate_score_slope(square_loss(), gaussian(1.0), draws=10)

    def test_step_must_be_positive(self):
        with pytest.raises(ValidationError):
            estimate_score_slope(square_loss(), gaussian(1.0), h=0.0)


class TestScoreSecondMoment:
    def test_square_gaussian(self):
        # E[(2e)^2] = 4 sigma^2
        for sigma in (1.0, 2.0):
            seed = RngSeed(5)
            value = estimate_score_second_moment(
                square_loss(), gaussian(sigma), draws=DRAWS, seed=seed
            )
            se = moment_standard_error(square_loss(), gaussian(sigma), DRAWS, seed)
            assert abs(value - 4.0 * sigma**2) <= 3.0 * se

    def test_absolute_is_exactly_one(self):
        # rho'(e)^2 = 1 almost surely under any continuous law
        for model in (gaussian(1.0), laplace(2.0), student_t(3.0)):
            value = estimate_score_second_moment(
                absolute_loss(), model, draws=DRAWS, seed=RngSeed(6)
            )
            assert abs(value - 1.0) < 1e-10

    def test_quantile_symmetric_closed_form(self):
        # (sign(e) + 2a-1)^2 is (2a)^2 or (2a-2)^2 with probability 1/2 each
        alpha = 0.3
        seed = RngSeed(7)
        value = estimate_score_second_moment(
            quantile_loss(alpha), gaussian(1.0), draws=DRAWS, seed=seed
        )
        expected = 2.0 * alpha**2 + 2.0 * (1.0 - alpha) ** 2
        se = moment_standard_error(quantile_loss(alpha), gaussian(1.0), DRAWS, seed)
        assert abs(value - expected) <= 3.0 * se

    def test_huber_gaussian_closed_form(self):
        c = 1.0
        seed = RngSeed(8)
        value = estimate_score_second_moment(
            huber_loss(c), gaussian(1.0), draws=DRAWS, seed=seed
        )
        phi_c = math.exp(-0.5 * c * c) / math.sqrt(2.0 * math.pi)
        expected = (2.0 * ndtr(c) - 1.0 - 2.0 * c * phi_c) + 2.0 * c * c * (1.0 - ndtr(c))
        se = moment_standard_error(huber_loss(c), gaussian(1.0), DRAWS, seed)
        assert abs(value - expected) <= 3.0 * se

    def test_heavy_tail_misuse_raises(self):
        # square loss with Cauchy errors has no finite second moment
        with pytest.raises(NonFiniteMoment):
            estimate_score_second_moment(
                square_loss(), student_t(1.0), draws=DRAWS, seed=RngSeed(9)
            )


class TestShiftCurve:
    def test_zero_offset_is_identically_zero(self):
        for loss in (square_loss(), absolute_loss(), huber_loss(1.0),
                      lq_loss(1.5), quantile_loss(0.25)):
            curve = score_shift_curve(loss, gaussian(1.0), draws=100_000, seed=RngSeed(10))
            k = int(np.where(curve.offsets == 0.0)[0][0])
            assert curve.values[k] == 0.0

    def test_square_loss_curve_is_linear(self):
        curve = score_shift_curve(square_loss(), gaussian(1.0), draws=100_000, seed=RngSeed(11))
        assert np.max(np.abs(curve.values - 2.0 * curve.offsets)) <= 1e-10

    def test_absolute_curve_slope_matches_constant(self):
        # secant slope near zero approaches the score slope estimate
        model = gaussian(1.0)
        curve = score_shift_curve(
            absolute_loss(), model, delta=0.05, grid_points=5,
            draws=400_000, seed=RngSeed(12),
        )
        c = curve.offsets[-1]
        secant = curve.values[-1] / c
        assert abs(secant - math.sqrt(2.0 / math.pi)) <= 0.05

    def test_validation(self):
        with pytest.raises(ValidationError):
            score_shift_curve(square_loss(), gaussian(1.0), delta=0.0)
        with pytest.raises(ValidationError):
            score_shift_curve(square_loss(), gaussian(1.0), grid_points=2)


class TestNormalizedStatistic:
    def test_exact_estimate_gives_zero(self):
        assert normalized_statistic(2.0, 2.0, 2.0, 4.0, 100.0) == 0.0

    def test_direct_arithmetic(self):
        # 2 * sqrt(100/4) * 0.1 = 1.0
        assert normalized_statistic(2.1, 2.0, 2.0, 4.0, 100.0) == pytest.approx(1.0)

    def test_scaling_law(self):
        base = normalized_statistic(2.1, 2.0, 2.0, 4.0, 100.0)
        doubled = normalized_statistic(2.1, 2.0, 2.0, 4.0, 200.0)
        assert doubled == pytest.approx(math.sqrt(2.0) * base)

    def test_zero_slope_rejected(self):
        with pytest.raises(DegenerateNormalization):
            normalized_statistic(2.1, 2.0, 0.0, 4.0, 100.0)

    def test_identity_with_algebraic_form(self):
        for args in ((2.3, 2.0, 0.8, 1.0, 57.0), (1.9, 2.0, 1.2, 2.5, 13.0)):
            beta_hat, beta, slope, second, s_n = args
            direct = slope * math.sqrt(s_n) * (beta_hat - beta) / math.sqrt(second)
            assert normalized_statistic(*args) == pytest.approx(direct, rel=1e-15)


class TestKsTest:
    def test_perfect_quantile_grid(self):
        m = 200
        z = ndtri((np.arange(1, m + 1) - 0.5) / m)
        report = ks_test(z)
        assert report.ks_statistic == pytest.approx(0.5 / m, abs=1e-12)

    def test_constant_sequence(self):
        report = ks_test(np.zeros(50))
        assert report.ks_statistic >= 0.5

    def test_calibration_run(self):
        z = RngSeed(1000).generator().standard_normal(1000)
        report = ks_test(z)
        assert report.ks_p_value > 0.01
        assert abs(report.mean) < 0.1
        assert abs(report.variance - 1.0) < 0.15

    def test_matches_scipy_oracle(self):
        z = RngSeed(1001).generator().standard_normal(300)
        report = ks_test(z)
        oracle = stats.kstest(z, stats.norm.cdf, method="asymp")
        assert report.ks_statistic == pytest.approx(oracle.statistic, abs=1e-12)
        assert report.ks_p_value == pytest.approx(oracle.pvalue, abs=1e-6)

    def test_survival_series_matches_scipy(self):
        for t in (0.05, 0.4, 1.0, 1.17, 1.19, 2.0, 4.0):
            assert _kolmogorov_sf(t) == pytest.approx(float(kolmogorov(t)), abs=1e-12)

    def test_too_few_replications(self):
        with pytest.raises(TooFewReplications):
            ks_test(np.zeros(19))


class TestConsistencyCheck:
    def test_all_zero_errors(self):
        out = consistency_check({50: [0.0] * 5, 200: [0.0] * 5}, 0.1)
        assert out == {50: 0.0, 200: 0.0}

    def test_vacuous_threshold(self):
        out = consistency_check({50: [1.0, 2.0], 200: [3.0, 0.5]}, 1e6)
        assert out == {50: 0.0, 200: 0.0}

    def test_counts_exceedances(self):
        out = consistency_check({10: [0.05, 0.2, 0.3, 0.01], 20: [0.05, 0.2]}, 0.1)
        assert out == {10: 0.5, 20: 0.5}

    def test_needs_two_sizes(self):
        with pytest.raises(ValidationError):
            consistency_check({50: [0.1]}, 0.1)


class TestConstantsBundle:
    def test_bundle_and_json_keys(self):
        constants = estimate_constants(
            square_loss(), gaussian(1.0), draws=DRAWS, seed=RngSeed(30), with_curve=True
        )
        assert constants.score_second_moment > 0
        assert constants.shift_curve is not None
        doc = constants.to_json_dict()
        assert set(doc) == {"a", "D", "h", "draws"}

    def test_diagnostics_json_shape(self):
        constants = estimate_constants(
            square_loss(), gaussian(1.0), draws=DRAWS, seed=RngSeed(31)
        )
        design = design_stats([1.0, 2.0, 3.0])
        doc = diagnostics_json(design, constants, None, {100: 0.25})
        assert set(doc) == {
            "s_n", "d_n_sq", "a", "D", "ks_statistic", "ks_p_value", "exceedance",
        }
        assert doc["exceedance"] == {"100": 0.25}
