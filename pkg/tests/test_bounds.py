import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclaplace.errors import (ConstraintError, DegenerateInputError, DivergenceError,
                                HypothesisError, PreconditionError)
from fraclaplace.funcspace import BumpMix, Indicator, Linear, PowerCutoff, dilate, lp_norm
from fraclaplace.specfun import (ExponentPair, TransformParams, lower_bound_37, w_const,
                                 z_const)
from fraclaplace.bounds import (ScalingProbe, empirical_norm, holder_sup_bound_check,
                                mellin_bound_check, ratio, ratio_result, scaling_sweep,
                                sharpness_profile, weighted_empirical_norm, weighted_ratio)
from fraclaplace.transform import CustomKernel, ExpKernel, FLTKernel

K11 = TransformParams(1.0, 1.0)


@pytest.fixture(scope="module")
def report_19():
    return empirical_norm(K11, ExponentPair(1.9))


class TestRatio:
    def test_p_one_indicator(self):
        assert ratio(K11, ExponentPair(1.0), Indicator(1.0)) == pytest.approx(1.0, rel=1e-12)
        assert z_const(K11, 1.0) == 1.0

    def test_trial_near_two_close_to_w(self):
        val = ratio(K11, ExponentPair(1.99), PowerCutoff(0.5, 1.0))
        assert abs(val / w_const(K11) - 1.0) < 0.1

    def test_frozen_quotients(self):
        # numerators from mpmath quadrature of the transform output
        assert ratio(K11, 1.5, Indicator(1.0)) == pytest.approx(0.5 ** (1 / 3), rel=1e-9)
        expected = 2.1968805347203768001 / 4.0 ** (2.0 / 3.0)
        assert ratio(K11, 1.5, PowerCutoff(0.5, 1.0)) == pytest.approx(expected, rel=1e-9)

    def test_zero_function(self):
        with pytest.raises(DegenerateInputError):
            ratio(K11, ExponentPair(1.5), Indicator(0.0))

    def test_infinite_norm(self):
        with pytest.raises(DegenerateInputError):
            ratio(K11, ExponentPair(2.0), PowerCutoff(0.5, 1.0))

    def test_error_estimate_reported(self):
        res = ratio_result(K11, 1.5, BumpMix(1, 3))
        assert 0 < res.rel_error < 1e-6
        assert res.value == pytest.approx(res.numerator / res.denominator, rel=1e-15)

    @given(st.floats(0.05, 20.0), st.floats(1.1, 1.9))
    @settings(max_examples=10)
    def test_dilation_invariance_at_conjugate(self, lam, p):
        f = BumpMix(4, 2)
        base = ratio(K11, p, f)
        assert ratio(K11, p, dilate(f, lam)) == pytest.approx(base, rel=1e-6)


class TestEmpiricalNorm:
    def test_sandwich_p19(self, report_19):
        c = report_19.constants
        assert c.lower37 <= report_19.empirical_ratio <= c.z
        assert report_19.ok
        assert [ch.name for ch in report_19.checks()] == ["lower37 <= ratio", "ratio <= z"]

    def test_p_one(self):
        rep = empirical_norm(K11, ExponentPair(1.0), bump_samples=10)
        assert 0.25 <= rep.empirical_ratio <= 1.0 + 1e-9
        assert rep.constants.z == 1.0

    def test_deterministic(self, report_19):
        again = empirical_norm(K11, ExponentPair(1.9))
        assert again.empirical_ratio == report_19.empirical_ratio
        assert again.witness == report_19.witness
        assert again.evaluations == report_19.evaluations

    def test_witness_reproducible(self, report_19):
        assert ratio(K11, 1.9, report_19.witness) == pytest.approx(report_19.empirical_ratio,
                                                                   rel=1e-9)

    def test_edge_exponent_rejected(self):
        with pytest.raises(PreconditionError):
            empirical_norm(K11, ExponentPair(1.995))

    def test_hypothesis_rejected(self):
        with pytest.raises(HypothesisError, match=r"Eq \(2.4\)"):
            empirical_norm(TransformParams(0.2, 0.2), ExponentPair(1.5))

    def test_budget_warning(self):
        rep = empirical_norm(K11, ExponentPair(1.5), budget=3, bump_samples=2)
        assert not rep.converged
        assert rep.warnings
        assert rep.ok

    def test_seed_changes_bump_samples_only(self):
        a = empirical_norm(K11, ExponentPair(1.5), seed=0, bump_samples=5)
        b = empirical_norm(K11, ExponentPair(1.5), seed=1, bump_samples=5)
        assert a.ok and b.ok
        assert a.empirical_ratio == pytest.approx(b.empirical_ratio, rel=1e-4)


class TestWeighted:
    def test_sandwich(self):
        rep = weighted_empirical_norm(TransformParams(1.0, 2.0), 2.0, 0.8, bump_samples=10)
        c = rep.constants
        assert c.lower49 <= rep.empirical_ratio <= c.m
        assert rep.ok
        assert [ch.name for ch in rep.checks()] == ["lower49 <= ratio", "ratio <= M"]
        assert c.theta is not None

    def test_mu_one_matches_unweighted(self):
        params = TransformParams(2.0, 0.5)
        for p in (1.2, 1.6):
            w = weighted_empirical_norm(params, p, 1.0, bump_samples=5)
            u = empirical_norm(params, ExponentPair(p), bump_samples=5)
            assert w.empirical_ratio == pytest.approx(u.empirical_ratio, rel=1e-6)

    def test_constraint(self):
        with pytest.raises(ConstraintError, match="1/mu < p"):
            weighted_empirical_norm(K11, 1.2, 0.8)

    def test_weighted_ratio_reduces(self):
        f = BumpMix(3, 2)
        assert weighted_ratio(K11, 1.5, 1.0, f) == ratio(K11, 1.5, f)


@pytest.fixture(scope="module")
def scaling_rows():
    probe = ScalingProbe(tuple(np.geomspace(0.25, 4.0, 9)), 1.5, (2.0, 3.0, 4.0), BumpMix(1, 3))
    return scaling_sweep(probe, K11)


@pytest.fixture(scope="module")
def sharp_rows():
    return sharpness_profile(K11, [1.0, 1.5, 1.6, 1.7, 1.8, 1.9, 1.95, 1.99])


class TestScaling:
    def test_slopes(self, scaling_rows):
        rows = scaling_rows
        for row in rows:
            assert row.residual < 1e-3
        assert [r.conjugate for r in rows] == [False, True, False]
        assert rows[0].expected == pytest.approx(1 / 6, rel=1e-14)
        assert abs(rows[1].slope) < 1e-3

    def test_single_lambda(self):
        with pytest.raises(PreconditionError):
            ScalingProbe((2.0,), 1.5, (3.0,), Indicator(1.0))
        with pytest.raises(PreconditionError):
            ScalingProbe((2.0, 2.0), 1.5, (3.0,), Indicator(1.0))

    def test_nonpositive_lambda(self):
        with pytest.raises(PreconditionError):
            ScalingProbe((0.0, 2.0), 1.5, (3.0,), Indicator(1.0))


class TestSharpness:
    def test_near_two(self, sharp_rows):
        rows = sharp_rows
        assert 0.9 <= rows[-1].relative <= 1.0

    def test_monotone(self, sharp_rows):
        rows = sharp_rows
        rel = [r.relative for r in rows if r.p >= 1.5]
        assert all(b >= a for a, b in zip(rel, rel[1:]))

    def test_p_one(self, sharp_rows):
        rows = sharp_rows
        assert rows[0].p == 1.0
        assert rows[0].lower37 == pytest.approx(0.25, rel=1e-14)
        assert rows[0].ratio >= rows[0].lower37

    def test_sandwich_rows(self, sharp_rows):
        for r in sharp_rows:
            assert r.lower37 <= r.ratio <= r.z

    def test_grid_checks(self):
        with pytest.raises(PreconditionError):
            sharpness_profile(K11, [1.5, 1.4])
        with pytest.raises(PreconditionError):
            sharpness_profile(K11, [1.5, 2.0])
        with pytest.raises(HypothesisError, match=r"Eq \(3.5\)"):
            sharpness_profile(TransformParams(0.5, 0.4), [1.5])


class TestHolder:
    def test_exp_kernel(self):
        chk = holder_sup_bound_check(ExpKernel(), Indicator(1.0), ExponentPair(2.0))
        assert chk.rhs == pytest.approx(math.sqrt(0.5), rel=1e-12)
        assert chk.holds

    def test_flt_kernel(self):
        chk = holder_sup_bound_check(FLTKernel(K11), Indicator(1.0), ExponentPair(2.0))
        assert chk.rhs == pytest.approx(math.sqrt(1 / 3), rel=1e-12)
        assert chk.holds

    def test_zero_function(self):
        chk = holder_sup_bound_check(ExpKernel(), Indicator(0.0), ExponentPair(1.5))
        assert chk.lhs == 0.0 and chk.holds

    def test_divergent_kernel(self):
        with pytest.raises(DivergenceError):
            # q (kappa + r) = 3 * 0.2 <= 1
            holder_sup_bound_check(FLTKernel(TransformParams(0.3, -0.1)), Indicator(1.0),
                                   ExponentPair(1.5))


class TestMellin:
    def test_exp_kernel(self):
        rep = mellin_bound_check(ExpKernel(), Indicator(1.0), 2.0)
        assert rep.zeta_inv_p == pytest.approx(math.sqrt(math.pi), rel=1e-14)
        assert rep.holds
        assert "p" in rep.first_fits

    def test_zero_function(self):
        rep = mellin_bound_check(ExpKernel(), Indicator(0.0), 2.0)
        assert rep.first_lhs == 0.0 and rep.second_lhs == 0.0 and rep.holds

    def test_flt_nonnegative_bumps(self):
        rep = mellin_bound_check(FLTKernel(K11), BumpMix(1, 3, nonnegative=True), 2.0)
        assert rep.holds

    def test_power_of_zeta_in_first_display(self):
        # ratios differ by zeta^(p-1); both are reported
        rep = mellin_bound_check(ExpKernel(), Indicator(1.0), 1.5)
        assert rep.first_ratio_power1 == pytest.approx(
            rep.first_ratio_powerp * rep.zeta_inv_p ** 0.5, rel=1e-12)

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            mellin_bound_check(CustomKernel("damped_cos"), Indicator(1.0), 2.0)
        with pytest.raises(PreconditionError):
            mellin_bound_check(ExpKernel(), BumpMix(1, 3), 2.0)
        with pytest.raises(PreconditionError):
            mellin_bound_check(ExpKernel(), Indicator(1.0), 1.0)


@given(st.sampled_from([(1.0, 1.0), (2.0, 0.5), (0.6, 1.0), (10.0, 2.0)]),
       st.floats(1.0, 1.99), st.integers(0, 1000))
@settings(max_examples=15)
def test_any_quotient_respects_upper_bound(kr, p, seed):
    params = TransformParams(*kr)
    f = Linear(((1.0, BumpMix(seed, 2)), (0.5, PowerCutoff(0.4 / p, 1.0))))
    assert ratio(params, p, f) <= z_const(params, p) * (1 + 1e-9)


@given(st.floats(1.0, 1.99), st.integers(0, 1000))
@settings(max_examples=10)
def test_trial_exceeds_lower_bound(p, seed):
    # the power family attains lower37 by construction
    f = PowerCutoff(min(0.5, (1 - 1e-3) / p), 1.0)
    if not math.isfinite(lp_norm(f, p)):
        return
    assert ratio(K11, p, f) >= lower_bound_37(K11, p) * (1 - 1e-9)
