"""Tests for the five tail approximations and the exact zero-threshold law."""

import math

import numpy as np
import pytest

from cir_sldp import (
    CoefficientUnavailableError,
    ModelParams,
    Regime,
    RegimeError,
    RngStream,
    exact_tail_at_zero,
    half_power_endpoint_coeff,
    horizon_scale,
    tail_above_b,
    tail_approx,
    tail_at_minus_b,
    tail_at_zero,
    tail_below_minus_b,
    tail_interior,
)


def params(delta=1.0, b=1.0, T=10.0):
    return ModelParams(delta=delta, b=b, horizon=T)


class TestBelowMinusB:
    def test_frozen_constants(self):
        # a_d = -0.375, sigma_d = sqrt(0.5), H(a_d) = -log(7/16)/2
        p = params()
        ap = tail_below_minus_b(-2.0, 9.0, p)
        a_d, sigma_d = -0.375, math.sqrt(0.5)
        H = -0.5 * math.log(7.0 / 16.0)
        assert H == pytest.approx(0.4133393, abs=1e-7)
        expected = -math.exp(-9.0 * 0.5625 + H) / (a_d * sigma_d * math.sqrt(2 * math.pi * 9.0))
        assert ap.value == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("T", [2.0, 5.0, 20.0, 80.0])
    def test_positive_for_all_horizons(self, T):
        assert tail_below_minus_b(-2.0, T, params()).value > 0

    def test_first_order_refused(self):
        with pytest.raises(CoefficientUnavailableError):
            tail_below_minus_b(-2.0, 9.0, params(), order_p=1)

    def test_wrong_regime(self):
        with pytest.raises(RegimeError):
            tail_below_minus_b(-0.5, 9.0, params())


class TestAboveB:
    def test_frozen_constants(self):
        # K1 = log(15)/2, K2 = 5/3 at b=1, d=2
        assert 0.5 * math.log(15.0) == pytest.approx(1.3540251, abs=1e-7)
        p = params()
        ap = tail_above_b(2.0, 9.0, p)
        expected = (
            (9.0 / 2.0) ** (-0.5)
            * math.exp(-9.0 * 1.5 + 0.5 * math.log(15.0))
            / ((5.0 / 3.0) * math.gamma(0.5))
        )
        assert ap.value == pytest.approx(expected, rel=1e-12)
        assert ap.side == "upper"

    def test_dimension_two_kills_power(self):
        # at delta = 2 the T-power exponent vanishes
        p2 = params(delta=2.0)
        v5, v9 = tail_above_b(2.0, 5.0, p2), tail_above_b(2.0, 9.0, p2)
        # only the exponential factor remains
        assert v5.value / v9.value == pytest.approx(math.exp(2.0 * 1.5 * 4.0), rel=1e-9)

    def test_log_slope_matches_rate(self):
        p = params()
        t1, t2 = 200.0, 400.0
        slope = (
            math.log(tail_above_b(2.0, t2, p).value) - math.log(tail_above_b(2.0, t1, p).value)
        ) / (t2 - t1)
        assert slope == pytest.approx(-1.5, abs=1e-2)

    def test_first_order_correction_applied(self):
        p = params()
        base = tail_above_b(2.0, 9.0, p, order_p=0)
        corr = tail_above_b(2.0, 9.0, p, order_p=1)
        assert corr.correction_terms == ((2.0 / 75.0) / 9.0,)
        assert corr.value == pytest.approx(base.value * (1.0 + (2.0 / 75.0) / 9.0), rel=1e-12)

    def test_second_order_refused(self):
        with pytest.raises(CoefficientUnavailableError):
            tail_above_b(2.0, 9.0, params(), order_p=2)


class TestInterior:
    def test_frozen_constant(self):
        assert -0.5 * math.log(2.0 / 3.0) == pytest.approx(0.2027326, abs=1e-7)
        p = params()
        ap = tail_interior(0.5, 9.0, p)
        expected = (4.5) ** (-0.5) * math.exp(-4.5 + 0.2027326) / math.gamma(0.5)
        assert ap.value == pytest.approx(expected, rel=1e-6)
        assert ap.side == "lower"

    def test_log_slope_is_flat_rate(self):
        p = params(delta=2.0)
        t1, t2 = 200.0, 400.0
        slope = (
            math.log(tail_interior(0.5, t2, p).value) - math.log(tail_interior(0.5, t1, p).value)
        ) / (t2 - t1)
        assert slope == pytest.approx(-1.0, abs=1e-2)  # -delta*b/2

    def test_validity_flag_near_truth_point(self):
        # J diverges as d -> b and the formula exceeds one
        ap = tail_interior(0.9999, 4.0, params())
        assert ap.value > 1.0
        assert not ap.valid


class TestAtMinusB:
    def test_dimension_two_value(self):
        # delta=2: Gamma((delta+2)/4) = 1 and the T-power vanishes
        p = params(delta=2.0)
        ap = tail_at_minus_b(5.0, p)
        assert ap.value == pytest.approx(math.sqrt(0.5) * math.exp(-5.0), rel=1e-12)

    def test_power_of_T_reading(self):
        # delta=1: the prefactor decays like T^(-1/4)
        p = params()
        log_pref_1 = tail_at_minus_b(100.0, p).log_leading + 0.5 * 100.0
        log_pref_2 = tail_at_minus_b(1600.0, p).log_leading + 0.5 * 1600.0
        assert log_pref_2 - log_pref_1 == pytest.approx(-0.25 * math.log(16.0), rel=1e-12)

    def test_first_order_uses_half_power(self):
        p = params()
        ap = tail_at_minus_b(9.0, p, order_p=1)
        assert ap.correction_terms == ((3.0 / 2.0) / 3.0,)

    def test_composition_identity(self):
        # tilted-mass prefactor (e b T/2)^{delta/4} e^{-delta T b/2} times the
        # comparison constant divided by sqrt(T) reproduces the branch
        # prefactor once the spurious 2^{delta/2} is dropped
        for delta in (1.0, 2.0, 3.5):
            p = params(delta=delta)
            T = 17.0
            coeff_no_half_powers = half_power_endpoint_coeff(p) * 2.0 ** (delta / 2.0)
            a_part = (math.e * p.b * T / 2.0) ** (delta / 4.0) * math.exp(-delta * T * p.b / 2.0)
            composed = a_part * coeff_no_half_powers / math.sqrt(T)
            assert composed == pytest.approx(
                math.exp(tail_at_minus_b(T, p).log_leading), rel=1e-12
            )

    def test_endpoint_coeff_value(self):
        p = params(delta=1.0)
        expected = math.exp(-0.25) / (math.sqrt(2.0) * math.gamma(0.75))
        assert half_power_endpoint_coeff(p) == pytest.approx(expected, rel=1e-12)


class TestAtZero:
    def test_series_coefficients(self):
        # h_1 = -1/6 and h_2 = 1/40 at delta = b = 1
        p = params()
        T = 9.0
        u = T * math.exp(-T)
        ap = tail_at_zero(T, p, order_p=2)
        assert ap.correction_terms[0] / u == pytest.approx(-1.0 / 6.0, rel=1e-12)
        assert ap.correction_terms[1] / u**2 == pytest.approx(1.0 / 40.0, rel=1e-12)

    def test_log_slope(self):
        p = params()
        t1, t2 = 200.0, 400.0
        slope = (
            math.log(tail_at_zero(t2, p).value) - math.log(tail_at_zero(t1, p).value)
        ) / (t2 - t1)
        assert slope == pytest.approx(-0.5, abs=1e-2)

    def test_exact_small_horizon_limit(self):
        # T -> 0: threshold -> delta, so the value approaches P(chi2_delta <= delta)
        assert exact_tail_at_zero(1e-9, params()) == pytest.approx(0.6826895, abs=1e-6)

    def test_exact_slope_approaches_rate(self):
        p = params()
        r30 = -math.log(exact_tail_at_zero(30.0, p)) / 30.0
        r60 = -math.log(exact_tail_at_zero(60.0, p)) / 60.0
        assert abs(r60 - 0.5) < abs(r30 - 0.5)

    def test_exact_against_endpoint_mc(self):
        p = params(delta=2.0, T=6.0)
        gen = RngStream(seed=33).generator()
        draws = horizon_scale(p) * gen.gamma(shape=p.delta / 2.0, scale=2.0, size=200_000)
        frac = (draws <= p.delta * p.horizon).mean()
        exact = exact_tail_at_zero(6.0, p)
        se = math.sqrt(exact * (1 - exact) / draws.size)
        assert abs(frac - exact) <= 3 * se

    @pytest.mark.parametrize("delta", [1.0, 3.0])
    def test_series_over_exact_ratio_converges(self, delta):
        # the ratio stabilizes fast; its limit is a finding, not an assertion
        p = params(delta=delta)
        ratios = [
            tail_at_zero(T, p, order_p=2).value / exact_tail_at_zero(T, p)
            for T in (8.0, 16.0, 32.0, 64.0)
        ]
        diffs = np.abs(np.diff(ratios))
        assert diffs[0] / diffs[1] >= 2.0
        assert diffs[1] / diffs[2] >= 2.0
        # record the observed limit for the report
        assert ratios[-1] == pytest.approx(math.sqrt(delta / 2.0), rel=1e-9)


class TestDispatchAndFlags:
    def test_dispatch_regimes(self):
        p = params()
        assert tail_approx(-2.0, 9.0, p).regime is Regime.BELOW_MINUS_B
        assert tail_approx(-1.0, 9.0, p).regime is Regime.AT_MINUS_B
        assert tail_approx(0.0, 9.0, p).regime is Regime.AT_ZERO
        assert tail_approx(0.5, 9.0, p).regime is Regime.INTERIOR
        assert tail_approx(2.0, 9.0, p).regime is Regime.ABOVE_B

    def test_truth_point_refused(self):
        with pytest.raises(RegimeError):
            tail_approx(1.0, 9.0, params())

    def test_validity_needs_efoldings(self):
        # T*rate = 0.75 < 2: asymptotics flagged
        ap = tail_approx(2.0, 0.5, params())
        assert not ap.valid

    def test_value_matches_bracket_identity(self):
        ap = tail_above_b(2.0, 9.0, params(), order_p=1)
        assert ap.value == pytest.approx(
            math.exp(ap.log_leading) * (1.0 + sum(ap.correction_terms)), rel=1e-15
        )
