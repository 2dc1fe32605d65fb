import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclaplace.errors import DivergenceError, HypothesisError, PreconditionError
from fraclaplace.funcspace import BumpMix, Grid, Indicator, Linear, PowerCutoff, lp_norm
from fraclaplace.gls import (Constant, NuFunction, PowerLaw, PsiFunction, TableInterp,
                             Transformed, build_nu, conjugate, embedding_check, exponent_grid,
                             gls_norm, natural_psi, restricted_support)
from fraclaplace.specfun import TransformParams, z_const

K11 = TransformParams(1.0, 1.0)


class TestExamples:
    def test_indicator_constant_psi(self):
        assert gls_norm(Indicator(1.0), Constant(1.0, (1.0, 4.0))) == pytest.approx(1.0,
                                                                                   rel=1e-14)

    @pytest.mark.parametrize("f,support", [(Indicator(2.0), (1.0, 4.0)),
                                           (PowerCutoff(0.3, 1.0), (1.1, 3.0)),
                                           (BumpMix(1, 3), (1.0, math.inf))])
    def test_natural_psi_gives_one(self, f, support):
        assert gls_norm(f, natural_psi(f, support)) == pytest.approx(1.0, rel=1e-12)

    def test_trial_on_unit_interval_diverges(self):
        assert gls_norm(PowerCutoff(0.5, 1.0), Constant(1.0, (1.0, 2.0))) == math.inf

    def test_natural_psi_examples(self):
        assert natural_psi(Indicator(1.0), (1.0, 4.0))(2.5) == pytest.approx(1.0, rel=1e-14)
        psi = natural_psi(PowerCutoff(0.5, 1.0), (1.0, 2.0))
        for p in (1.1, 1.5, 1.9):
            assert psi(p) == pytest.approx((2.0 / (2.0 - p)) ** (1.0 / p), rel=1e-14)
        with pytest.raises(DivergenceError):
            natural_psi(PowerCutoff(0.5, 1.0), (1.0, 3.0))

    def test_natural_psi_zero_function(self):
        with pytest.raises(PreconditionError):
            natural_psi(Indicator(0.0), (1.0, 2.0))

    def test_nu_examples(self):
        nu = build_nu(Constant(1.0, (1.0, 2.0)), K11)
        assert nu.support == (2.0, math.inf)
        assert nu(4.0) == pytest.approx(z_const(K11, 4.0 / 3.0), rel=1e-14)
        psi = PowerLaw(1.0, 0.5, (1.0, 3.0))
        nu = build_nu(psi, K11)
        assert nu(conjugate(1.5)) == pytest.approx(z_const(K11, 1.5) * psi(1.5), rel=1e-14)

    def test_empty_intersection(self):
        with pytest.raises(HypothesisError, match=r"Eq \(5.4\)"):
            build_nu(Constant(1.0, (3.0, 4.0)), K11)

    def test_embedding_examples(self):
        res = embedding_check(Indicator(1.0), Constant(1.0, (1.0, 2.0)), K11)
        assert res.holds
        zero = embedding_check(Indicator(0.0), Constant(1.0, (1.0, 2.0)), K11)
        assert zero.lhs == 0.0 and zero.holds
        f = PowerCutoff(0.3, 1.0)
        res = embedding_check(f, natural_psi(f, (1.1, 1.9)), K11)
        assert res.rhs == pytest.approx(1.0, rel=1e-12)
        assert res.lhs <= 1.0 + 1e-4

    def test_embedding_needs_finite_rhs(self):
        with pytest.raises(PreconditionError):
            embedding_check(PowerCutoff(0.5, 1.0), Constant(1.0, (1.0, 2.0)), K11)


class TestPsi:
    def test_conjugate(self):
        assert conjugate(1.0) == math.inf
        assert conjugate(math.inf) == 1.0
        assert conjugate(1.5) == pytest.approx(3.0, rel=1e-15)

    def test_restricted_support(self):
        assert restricted_support(Constant(1.0, (1.5, 4.0))) == (1.5, 2.0)

    def test_table(self):
        psi = TableInterp((1.0, 2.0, 3.0), (1.0, 3.0, 2.0))
        assert psi.support == (1.0, 3.0)
        assert psi(1.5) == pytest.approx(2.0)
        with pytest.raises(PreconditionError):
            TableInterp((1.0, 2.0), (1.0, -1.0))

    def test_power_law(self):
        assert PowerLaw(2.0, 0.5, (1.0, 4.0))(4.0) == pytest.approx(4.0)
        with pytest.raises(PreconditionError):
            PowerLaw(1.0, -1.0, (1.0, math.inf))

    def test_support_checks(self):
        with pytest.raises(PreconditionError):
            Constant(1.0, (0.5, 2.0))
        with pytest.raises(PreconditionError):
            Constant(1.0, (2.0, 2.0))

    @pytest.mark.parametrize("psi", [Constant(2.0, (1.0, math.inf)),
                                     PowerLaw(1.5, 0.25, (1.2, 5.0)),
                                     TableInterp((1.0, 2.0), (1.0, 2.0)),
                                     natural_psi(Grid((0.5, 1.0), (1.0, 2.0)), (1.0, 3.0))])
    def test_dict_round_trip(self, psi):
        assert PsiFunction.from_dict(psi.to_dict()).to_dict() == psi.to_dict()

    def test_grid_size(self):
        with pytest.raises(PreconditionError):
            exponent_grid(1.0, 2.0, 8)

    @given(st.floats(1.0, 3.0), st.floats(0.01, 5.0), st.sampled_from([16, 32, 64]))
    def test_grids_nested_and_interior(self, A, width, n):
        B = A + width
        small, big = exponent_grid(A, B, n), exponent_grid(A, B, 2 * n)
        assert np.all((small > A) & (small < B))
        assert np.all(np.isin(small, big))


FUNCS = [Indicator(1.0), PowerCutoff(0.3, 2.0), BumpMix(2, 3), Grid((0.5, 1.0, 2.0), (1, -1, 0.5))]
PSIS = [Constant(1.0, (1.0, 4.0)), PowerLaw(1.0, 0.5, (1.2, 2.5)),
        TableInterp((1.0, 1.5, 3.0), (1.0, 0.8, 2.0))]


@given(st.sampled_from(FUNCS), st.sampled_from(PSIS), st.sampled_from([16, 32, 64]))
def test_grid_monotonicity(f, psi, n):
    assert gls_norm(f, psi, 2 * n) >= gls_norm(f, psi, n) - 1e-12


@given(st.sampled_from(FUNCS[:3]), st.sampled_from([16, 32]))
@settings(max_examples=8)
def test_grid_monotonicity_transformed(f, n):
    nu = build_nu(Constant(1.0, (1.0, 2.0)), K11)
    img = Transformed(K11, f)
    assert gls_norm(img, nu, 2 * n) >= gls_norm(img, nu, n) - 1e-12


@given(st.sampled_from(FUNCS), st.sampled_from(PSIS),
       st.floats(-5.0, 5.0).filter(lambda a: abs(a) > 1e-3))
def test_homogeneity(f, psi, alpha):
    base = gls_norm(f, psi)
    assert gls_norm(Linear(((alpha, f),)), psi) == pytest.approx(abs(alpha) * base, rel=1e-9)


@given(st.sampled_from([(1.0, 1.0), (0.5, 1.0), (10.0, 2.0)]), st.sampled_from(FUNCS[:3]))
@settings(max_examples=8)
def test_embedding_property(kr, f):
    res = embedding_check(f, Constant(1.0, (1.0, 2.0)), TransformParams(*kr))
    assert res.holds


def test_nu_is_psi_function():
    nu = build_nu(Constant(1.0, (1.2, 1.8)), K11)
    assert isinstance(nu, NuFunction)
    assert nu.support == pytest.approx((conjugate(1.8), conjugate(1.2)))
    assert lp_norm(Indicator(1.0), 2.0) == 1.0
