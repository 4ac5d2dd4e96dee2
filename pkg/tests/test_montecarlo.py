"""Tests for tail-probability estimation, proposals, and report assembly."""

import math

import numpy as np
import pytest

from cir_sldp import (
    ModelParams,
    Method,
    UnsupportedRegimeError,
    compare_report,
    estimate_tail,
    is_drift,
    proposal_schedule,
)


def params(delta=1.0, b=1.0, T=10.0):
    return ModelParams(delta=delta, b=b, horizon=T)


class TestIsDrift:
    @pytest.mark.parametrize(
        "d,expected",
        [(-2.0, -2.0), (2.0, -3.0), (-1.0, -1.0), (0.5, -1.0), (0.0, -1.0)],
    )
    def test_proposals(self, d, expected):
        assert is_drift(d, params()) == expected

    def test_truth_point_refused(self):
        with pytest.raises(UnsupportedRegimeError):
            is_drift(1.0, params())


class TestProposalSchedule:
    def test_below_is_single_segment(self):
        assert proposal_schedule(-2.0, 8.0, params()) == [(8.0, -2.0)]

    def test_above_is_two_phase(self):
        sched = proposal_schedule(2.0, 8.0, params())
        assert len(sched) == 2
        (t1, b1), (t2, b2) = sched
        assert b1 == -3.0 and b2 == 3.0
        assert 0.0 < t1 < t2 == 8.0

    def test_interior_has_terminal_window(self):
        sched = proposal_schedule(0.5, 8.0, params())
        assert len(sched) == 2
        assert sched[0][1] == -1.0 and sched[1][1] == 1.0


class TestEstimateTail:
    def test_requires_paths(self):
        with pytest.raises(ValueError):
            estimate_tail(0.5, 3.0, params(), n_paths=10)

    def test_impossible_event_is_zero(self):
        est = estimate_tail(1e6, 3.0, params(), n_paths=2000, n_steps=64, seed=1)
        assert est.mean == 0.0
        assert est.n_hits == 0
        assert est.relative_error == math.inf

    def test_naive_and_is_agree_on_non_rare_event(self):
        p = params()
        naive = estimate_tail(0.9, 3.0, p, n_paths=20_000, method=Method.NAIVE, seed=5)
        twisted = estimate_tail(0.9, 3.0, p, n_paths=20_000, method=Method.DRIFT_IS, seed=6)
        joint = math.hypot(naive.stderr, twisted.stderr)
        assert abs(naive.mean - twisted.mean) <= 3 * joint

    def test_variance_reduction_in_rare_regime(self):
        # above b the naive estimator typically never hits the event
        p = params()
        naive = estimate_tail(2.0, 10.0, p, n_paths=20_000, method=Method.NAIVE, seed=7)
        twisted = estimate_tail(2.0, 10.0, p, n_paths=20_000, method=Method.DRIFT_IS, seed=7)
        assert naive.n_hits == 0
        assert twisted.n_hits > 1000
        assert twisted.relative_error < naive.relative_error  # finite < inf
        assert twisted.relative_error < 0.2

    def test_stderr_scaling(self):
        p = params()
        small = estimate_tail(0.9, 3.0, p, n_paths=10_000, method=Method.NAIVE, seed=8)
        big = estimate_tail(0.9, 3.0, p, n_paths=40_000, method=Method.NAIVE, seed=8)
        assert small.stderr / big.stderr == pytest.approx(2.0, rel=0.2)

    def test_deterministic_given_seed(self):
        p = params()
        a = estimate_tail(-2.0, 4.0, p, n_paths=5000, seed=11)
        b = estimate_tail(-2.0, 4.0, p, n_paths=5000, seed=11)
        assert (a.mean, a.stderr, a.n_hits) == (b.mean, b.stderr, b.n_hits)

    def test_worker_count_does_not_change_result(self, monkeypatch):
        p = params()
        ref = estimate_tail(-2.0, 4.0, p, n_paths=60_000, seed=12)
        monkeypatch.setenv("CIR_SLDP_THREADS", "3")
        par = estimate_tail(-2.0, 4.0, p, n_paths=60_000, seed=12)
        assert (ref.mean, ref.stderr, ref.n_hits) == (par.mean, par.stderr, par.n_hits)

    def test_below_regime_unbiased_against_approx(self):
        # d < -b: estimates land within a factor reflecting the 1/T correction
        p = params()
        report = compare_report(-2.0, 9.0, p, n_paths=30_000, seed=13)
        assert report.mc.n_hits > 10_000
        assert 0.3 < report.ratio_mc_over_approx < 1.2


class TestCompareReport:
    def test_exact_only_at_zero(self):
        p = params()
        rep0 = compare_report(0.0, 8.0, p, n_paths=5000, seed=21)
        assert rep0.exact is not None
        assert abs(rep0.mc.mean - rep0.exact) <= 3 * rep0.mc.stderr
        rep1 = compare_report(0.5, 8.0, p, n_paths=2000, seed=22)
        assert rep1.exact is None

    def test_small_horizon_flagged_but_reported(self):
        rep = compare_report(2.0, 1.0, params(), n_paths=2000, n_steps=128, seed=23)
        assert not rep.approx.valid
        assert rep.mc.n_paths == 2000

    def test_ratio_field(self):
        rep = compare_report(-2.0, 6.0, params(), n_paths=5000, seed=24)
        assert rep.ratio_mc_over_approx == pytest.approx(rep.mc.mean / rep.approx.value)

    def test_round_trip_dict(self):
        rep = compare_report(0.0, 6.0, params(), n_paths=2000, seed=25)
        payload = rep.to_dict()
        assert payload["config"]["d"] == 0.0
        assert payload["mc"]["n_paths"] == 2000
        assert payload["approx"]["regime"] == "at_zero"
