import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from fraclaplace.errors import DivergenceError, HypothesisError, PreconditionError
from fraclaplace.funcspace import BumpMix, Grid, Indicator, Linear, PowerCutoff, dilate
from fraclaplace.specfun import TransformParams, beta, log_gamma
from fraclaplace.transform import (CustomKernel, ExpKernel, FLTEngine, FLTKernel, KernelSpec,
                                   OutputSampler, flt_eval, flt_limit_check, flt_values,
                                   generic_kernel_eval, kernel_output_norm, laplace_eval,
                                   mellin_zeta, mellin_zeta_quadrature, output_norm,
                                   transform_lq_norm, weighted_psi_eval)

# int_0^b (1 + s t/kappa)^-(kappa+r) t^-a dt, mpmath at 40 digits
POWER_ORACLE = [
    ((1.0, 1.0, 0.5, 1.0, 1e4), 0.01570795660208221382),
    ((1.0, 1.0, 0.5, 1.0, 0.3), 1.6840972584763411275),
    ((2.0, 0.5, 0.3, 2.5, 7.0), 0.37447461040833082058),
    ((0.6, 1.0, -0.5, 1.0, 3.0), 0.10206443098309145608),
    ((10.0, 2.0, 0.45, 1.0, 1e-3), 1.8174079304132788438),
    ((100.0, 5.0, 0.7, 0.5, 40.0), 0.97663623920280912617),
    ((3.0, -2.2, 0.2, 1.0, 5.0), 0.85271663132180979374),
    ((1e4, 1.0, 0.0, 1.0, 2.0), 0.43231882530448760026),
]

GRID = Grid((0.5, 1.0, 2.0, 3.5), (0.0, 1.0, -0.5, 0.25))
GRID_ORACLE = [
    ((1.0, 1.0, 0.0), 0.3125),
    ((1.0, 1.0, 2.0), 0.054298398797552628993),
    ((2.0, 0.5, 0.1), 0.29943016655173866335),
    ((10.0, 2.0, 30.0), 2.0846908250399030119e-7),
]

# |L_{kappa,r} f|_q, mpmath at 30 digits
INDICATOR_NORMS = [
    ((1.0, 1.0, 3.0), 0.79370052598409973738),
    ((2.0, 0.5, 2.5), 1.000549299919843661),
    ((10.0, 2.0, 4.0), 0.83145963482492015074),
    ((0.6, 1.0, 2.2), 0.84397752601689599867),
]
POWER_NORMS = [
    ((1.0, 1.0, 3.0), 2.1968805347203768001),
    ((2.0, 0.5, 2.5), 3.4073248251908653304),
    ((10.0, 2.0, 3.0), 2.3772883620801911281),
]


@pytest.mark.parametrize("args,expected", POWER_ORACLE)
def test_power_atom_values(args, expected):
    k, r, a, b, s = args
    assert flt_eval(TransformParams(k, r), PowerCutoff(a, b), s) == pytest.approx(expected,
                                                                                 rel=1e-10)


@pytest.mark.parametrize("args,expected", GRID_ORACLE)
def test_grid_values(args, expected):
    k, r, s = args
    assert flt_eval(TransformParams(k, r), GRID, s) == pytest.approx(expected, rel=1e-10)


def test_indicator_closed_form():
    # kappa = 1, r = 1: int_0^1 (1 + s t)^-2 dt = 1/(1 + s)
    params = TransformParams(1.0, 1.0)
    for s in (0.0, 0.5, 3.0, 1e3):
        assert flt_eval(params, Indicator(1.0), s) == pytest.approx(1.0 / (1.0 + s), rel=1e-12)


class TestListedExamples:
    def test_flt_indicator(self):
        params = TransformParams(1.0, 1.0)
        assert flt_eval(params, Indicator(1.0), 1.0) == pytest.approx(0.5, rel=1e-13)
        for k, r in ((1.0, 1.0), (3.0, -2.0), (50.0, 0.1)):
            assert flt_eval(TransformParams(k, r), Indicator(1.0), 0.0) == pytest.approx(
                1.0, rel=1e-14)

    def test_flt_trial_asymptotic(self):
        # sqrt(pi/s) Gamma(3/2)/Gamma(2) at s = 1e4
        asym = math.sqrt(math.pi / 1e4) * math.exp(log_gamma(1.5) - log_gamma(2.0))
        val = flt_eval(TransformParams(1.0, 1.0), PowerCutoff(0.5, 1.0), 1e4)
        assert abs(val / asym - 1.0) < 0.02

    def test_laplace_examples(self):
        assert laplace_eval(Indicator(1.0), 1.0) == pytest.approx(0.6321205588, abs=1e-10)
        assert laplace_eval(Indicator(1.0), 0.0) == pytest.approx(1.0, rel=1e-14)
        # cutoff correction is below e^-s
        s = 40.0
        assert laplace_eval(PowerCutoff(0.5, 1.0), s) == pytest.approx(math.sqrt(math.pi / s),
                                                                       rel=1e-12)

    def test_limit_examples(self):
        gaps = flt_limit_check([10, 100, 1e3, 1e4], 1.0, Indicator(1.0), 1.0)
        assert gaps[-1][1] < 1e-4
        for k in (1.0, 10.0, 1e4):
            assert flt_limit_check([k], 1.0, Indicator(1.0), 0.0)[0][1] == pytest.approx(
                0.0, abs=1e-14)
        g = [v for _, v in flt_limit_check([10, 100], 0.0, BumpMix(1, 3), 2.0)]
        assert g[1] < g[0]

    def test_weighted_examples(self):
        params = TransformParams(1.0, 1.0)
        assert weighted_psi_eval(TransformParams(2.0, 3.0), 0.5, Indicator(1.0), 0.0) == \
            pytest.approx(2.0, rel=1e-13)
        f = GRID
        assert weighted_psi_eval(params, 1.0, f, 0.7) == flt_eval(params, f, 0.7)
        val = weighted_psi_eval(params, 0.5, PowerCutoff(0.25, 1.0), 100.0)
        ref = quad(lambda t: t ** -0.75 / (1 + 100 * t) ** 2, 0, 1, epsabs=0, epsrel=1e-11,
                   limit=200)[0]
        assert val == pytest.approx(ref, rel=1e-8)
        assert val >= 0.1 * 0.5

    def test_generic_examples(self):
        assert generic_kernel_eval(ExpKernel(), Indicator(1.0), 1.0) == pytest.approx(
            1.0 - math.exp(-1.0), rel=1e-12)
        for k in (ExpKernel(), CustomKernel("gaussian"), CustomKernel("rational")):
            assert generic_kernel_eval(k, Indicator(1.0), 0.0) == pytest.approx(1.0, rel=1e-13)
        k = FLTKernel(TransformParams(1.0, 1.0))
        assert generic_kernel_eval(k, Indicator(1.0), 1.0) == pytest.approx(0.5, rel=1e-13)

    def test_mellin_examples(self):
        assert mellin_zeta(ExpKernel(), 1.0) == pytest.approx(1.0, rel=1e-14)
        assert mellin_zeta(ExpKernel(), 0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
        k = FLTKernel(TransformParams(1.0, 1.0))
        assert mellin_zeta(k, 0.5) == pytest.approx(math.pi / 2, rel=1e-14)
        # x = u^2
        ref = quad(lambda u: 2.0 * (1 + u * u) ** -2, 0, np.inf, epsabs=0, epsrel=1e-12)[0]
        assert mellin_zeta(k, 0.5) == pytest.approx(ref, rel=1e-9)


def test_at_zero_is_integral():
    assert flt_eval(TransformParams(2.0, 0.5), PowerCutoff(0.5, 4.0), 0.0) == pytest.approx(
        4.0, rel=1e-12)


def test_bump_mix_against_scipy():
    f = BumpMix(2, 3)
    params = TransformParams(1.5, 0.7)
    tab = f.table()
    pts = sorted(np.concatenate([tab[:, 0] - tab[:, 1], tab[:, 0], tab[:, 0] + tab[:, 1]]))
    ref = quad(lambda t: (1 + 0.2 * t / 1.5) ** -2.2 * float(f(t)), 0, 100, points=pts,
               limit=500, epsabs=0, epsrel=1e-12)[0]
    assert flt_eval(params, f, 0.2) == pytest.approx(ref, rel=1e-9)


def test_weighted_transform_against_scipy():
    params = TransformParams(1.0, 2.0)
    ref = quad(lambda t: t ** -0.2 * (1 + 0.7 * t) ** -3, 0, 1, epsabs=0, epsrel=1e-12)[0]
    assert weighted_psi_eval(params, 0.8, Indicator(1.0), 0.7) == pytest.approx(ref, rel=1e-10)


def test_weighted_at_mu_one_is_unweighted():
    params = TransformParams(2.0, 0.5)
    f = GRID
    for s in (0.1, 1.0, 10.0):
        assert weighted_psi_eval(params, 1.0, f, s) == flt_eval(params, f, s)


def test_negative_s_rejected():
    with pytest.raises(PreconditionError):
        flt_eval(TransformParams(1.0, 1.0), Indicator(1.0), -1.0)


def test_divergent_power_rejected():
    params = TransformParams(1.0, 1.0)
    with pytest.raises(DivergenceError):
        FLTEngine(params, [a.weight(-0.6) for a in PowerCutoff(0.5, 1.0).atoms()])


def test_empty_function():
    s, v, e = flt_values(TransformParams(1.0, 1.0), Indicator(0.0), [0.0, 1.0])
    assert np.all(v == 0)
    assert transform_lq_norm(TransformParams(1.0, 1.0), Indicator(0.0), 2.0) == 0.0


@pytest.mark.parametrize("args,expected", INDICATOR_NORMS)
def test_indicator_output_norms(args, expected):
    k, r, q = args
    assert transform_lq_norm(TransformParams(k, r), Indicator(1.0), q) == pytest.approx(
        expected, rel=1e-9)


@pytest.mark.parametrize("args,expected", POWER_NORMS)
def test_power_output_norms(args, expected):
    k, r, q = args
    val = transform_lq_norm(TransformParams(k, r), PowerCutoff(0.5, 1.0), q)
    assert val == pytest.approx(expected, rel=1e-9)


def test_sup_norm_is_value_at_zero_for_nonnegative():
    params = TransformParams(1.0, 1.0)
    assert transform_lq_norm(params, Indicator(2.0), math.inf) == pytest.approx(2.0, rel=1e-12)


def test_divergent_output_norm():
    # g(s) ~ s^-1/2 for a = 1/2, so |g|_2 diverges
    assert transform_lq_norm(TransformParams(1.0, 1.0), PowerCutoff(0.5, 1.0), 2.0) == math.inf


def test_sampler_tracks_certified_norm():
    engine = FLTEngine.from_function(TransformParams(2.0, 0.5), BumpMix(3, 3))
    sampler = OutputSampler(engine)
    for q in (2.0, 3.0, 5.0):
        assert sampler.norm(q) == pytest.approx(output_norm(engine, q).value, rel=1e-6)


class TestKernels:
    def test_flt_kernel_lq_norm(self):
        k = FLTKernel(TransformParams(2.0, 1.0))
        ref = quad(lambda u: (1 + u / 2) ** -6, 0, np.inf, epsabs=0, epsrel=1e-13)[0] ** 0.5
        assert k.lq_norm(2.0) == pytest.approx(ref, rel=1e-10)
        assert KernelSpec.lq_norm(k, 2.0) == pytest.approx(ref, rel=1e-10)

    def test_flt_kernel_not_in_lq(self):
        assert FLTKernel(TransformParams(0.3, 0.3)).lq_norm(1.5) == math.inf

    def test_exp_kernel(self):
        assert ExpKernel().lq_norm(2.0) == pytest.approx(math.sqrt(0.5), rel=1e-14)

    def test_mellin_flt_oracle(self):
        k = FLTKernel(TransformParams(2.0, 1.0))
        assert mellin_zeta(k, 0.7) == pytest.approx(1.2301210108172544602, rel=1e-12)
        assert mellin_zeta(k, 0.7) == pytest.approx(2.0 ** 0.7 * beta(0.7, 2.3), rel=1e-14)

    def test_mellin_damped_cos_oracle(self):
        assert mellin_zeta(CustomKernel("damped_cos"), 0.6) == pytest.approx(
            1.0777614673634797468, rel=1e-12)

    @pytest.mark.parametrize("kernel,sigma", [
        (FLTKernel(TransformParams(2.0, 1.0)), 1.3), (ExpKernel(), 0.8),
        (CustomKernel("gaussian"), 1.7), (CustomKernel("rational"), 0.6),
        (CustomKernel("damped_cos"), 0.6)])
    def test_mellin_closed_vs_quadrature(self, kernel, sigma):
        assert mellin_zeta_quadrature(kernel, sigma) == pytest.approx(mellin_zeta(kernel, sigma),
                                                                      rel=1e-8)

    def test_mellin_strip(self):
        with pytest.raises(HypothesisError):
            mellin_zeta(FLTKernel(TransformParams(1.0, 1.0)), 2.0)

    def test_unknown_custom(self):
        with pytest.raises(PreconditionError):
            CustomKernel("sinc")

    @pytest.mark.parametrize("kernel", [FLTKernel(TransformParams(1.5, 0.5)), ExpKernel(),
                                        CustomKernel("rational")])
    def test_dict_round_trip(self, kernel):
        assert KernelSpec.from_dict(kernel.to_dict()) == kernel

    def test_laplace_of_indicator(self):
        for s in (0.5, 2.0, 10.0):
            assert laplace_eval(Indicator(1.0), s) == pytest.approx(-math.expm1(-s) / s,
                                                                   rel=1e-12)

    def test_laplace_of_power(self):
        # int_0^inf e^-t t^-1/2 = Gamma(1/2); cut at b = 60 leaves e^-60
        assert laplace_eval(PowerCutoff(0.5, 60.0), 1.0) == pytest.approx(
            math.exp(log_gamma(0.5)), rel=1e-12)

    def test_generic_matches_flt_path(self):
        params = TransformParams(2.0, 0.5)
        k = FLTKernel(params)
        f = GRID
        assert generic_kernel_eval(k, f, 1.3) == flt_eval(params, f, 1.3)

    def test_generic_output_norm_against_flt(self):
        # the rational kernel has no FLT route; compare with scipy on the Indicator
        val = kernel_output_norm(CustomKernel("rational"), Indicator(1.0), 2.0)
        g = lambda x: math.atan(x) / x if x > 0 else 1.0
        ref = (quad(lambda x: g(x) ** 2, 0, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0]) ** 0.5
        assert val == pytest.approx(ref, rel=1e-7)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 5.0, 10.0])
def test_laplace_limit(s):
    val = flt_eval(TransformParams(1e4, 1.0), Indicator(1.0), s)
    assert abs(val - (-math.expm1(-s) / s)) < 1e-4


def test_limit_check_gaps_decrease():
    gaps = [g for _, g in flt_limit_check([10, 100, 1e3, 1e4], 1.0, Indicator(1.0), 2.0)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    with pytest.raises(PreconditionError):
        flt_limit_check([100, 10], 1.0, Indicator(1.0), 2.0)


PARAMS = st.builds(TransformParams, st.floats(0.3, 50.0), st.floats(0.3, 5.0))
SVALS = st.floats(0.0, 1e3)


@given(PARAMS, st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.integers(0, 30), SVALS)
def test_linearity(params, c1, c2, seed, s):
    f, g = Indicator(1.0), BumpMix(seed, 2)
    combo = flt_eval(params, Linear(((c1, f), (c2, g))), s)
    ref = c1 * flt_eval(params, f, s) + c2 * flt_eval(params, g, s)
    assert combo == pytest.approx(ref, rel=1e-9, abs=1e-12 * (abs(c1) + abs(c2)))


@given(PARAMS, st.integers(0, 30), st.floats(0.0, 100.0), st.floats(0.0, 100.0))
def test_positivity_and_monotonicity(params, seed, s1, s2):
    f = BumpMix(seed, 3, nonnegative=True)
    lo, hi = sorted((s1, s2))
    g_lo, g_hi = flt_eval(params, f, lo), flt_eval(params, f, hi)
    assert g_hi >= 0.0
    assert g_hi <= g_lo * (1 + 1e-10)


@given(PARAMS, st.integers(0, 30), SVALS)
def test_bounded_by_l1_norm(params, seed, s):
    f = BumpMix(seed, 3)
    bound = flt_eval(params, BumpMix(seed, 3, nonnegative=False), 0.0)
    x = np.linspace(0.5, 99.5, 40001)
    l1 = float(np.sum(np.abs(f(x))) * (x[1] - x[0]))
    assert abs(flt_eval(params, f, s)) <= l1 * (1 + 1e-3)
    assert abs(bound) <= l1 * (1 + 1e-3)


@given(PARAMS, st.floats(0.1, 10.0), st.floats(0.01, 100.0))
def test_dilation_covariance(params, lam, s):
    # L[f(lam .)](s) = L[f](s/lam) / lam
    f = GRID
    lhs = flt_eval(params, dilate(f, lam), s)
    rhs = flt_eval(params, f, s / lam) / lam
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-14)


@given(PARAMS, st.floats(0.01, 50.0))
def test_mu_one_consistency(params, s):
    f = PowerCutoff(0.3, 2.0)
    assert weighted_psi_eval(params, 1.0, f, s) == flt_eval(params, f, s)
