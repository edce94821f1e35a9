"""
Tests for the affine term-structure functions.

Closed forms are checked against numerical quadrature of their defining
integrals and against each other in the degenerate multi-curve limit.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from vasicek_gpr_mcp.affine import (
    affine_A,
    affine_B,
    bond_intercept,
    cov_log_bond,
    factor_covariance,
    factor_mean,
    mean_log_bond,
    mixed_second_moment,
    phi,
    psi1,
    psi2,
)
from vasicek_gpr_mcp.errors import ConfigurationError, DomainError
from vasicek_gpr_mcp.models import CurveId, MultiCurveParams, SingleCurveParams


def _b(kappa, u):
    return (1.0 - np.exp(-kappa * u)) / kappa


class TestRiccatiSolutions:
    """Test A, B, Phi, Psi1 and Psi2."""

    def test_b_closed_form(self):
        assert affine_B(2.0, 1.0) == pytest.approx((1.0 - np.exp(-2.0)) / 2.0, rel=1e-15)
        assert affine_B(2.0, 0.0) == 0.0

    def test_b_vectorized(self):
        tau = np.array([0.0, 0.5, 1.0])
        result = affine_B(2.0, tau)
        assert isinstance(result, np.ndarray)
        np.testing.assert_allclose(result, _b(2.0, tau), rtol=1e-14)

    @pytest.mark.parametrize("tau", [0.1, 0.5, 1.0, 3.0])
    def test_a_matches_expanded_formula(self, single_params, tau):
        k, th, s = single_params.kappa, single_params.theta, single_params.sigma
        expected = th / k * (np.exp(-k * tau) + k * tau - 1.0) + s**2 / (4.0 * k**3) * (
            np.exp(-2.0 * k * tau) - 4.0 * np.exp(-k * tau) - 2.0 * k * tau + 3.0
        )
        assert affine_A(single_params, tau) == pytest.approx(expected, rel=1e-10)

    def test_a_vanishes_at_maturity(self, single_params):
        assert affine_A(single_params, 0.0) == 0.0

    def test_psi_loadings(self):
        assert psi1(2.0, 0.7) == pytest.approx(-_b(2.0, 0.7), rel=1e-14)
        assert psi2(0.5, 0.7) == pytest.approx(_b(0.5, 0.7), rel=1e-14)

    @pytest.mark.parametrize("rho", [0.0, 0.6, -0.3])
    def test_phi_matches_quadrature(self, multi_params, rho):
        params = multi_params.model_copy(update={"rho": rho})
        f1, f2 = params.factor1, params.factor2
        tau = 0.8

        def integrand(u):
            b1, b2 = _b(f1.kappa, u), _b(f2.kappa, u)
            drift = -f1.kappa * f1.theta * b1 + f2.kappa * f2.theta * b2
            variance = 0.5 * (f1.sigma * b1) ** 2 + 0.5 * (f2.sigma * b2) ** 2
            return drift + variance - rho * f1.sigma * f2.sigma * b1 * b2

        expected, _ = quad(integrand, 0.0, tau, epsabs=1e-14, epsrel=1e-13)
        assert phi(params, tau) == pytest.approx(expected, rel=1e-9)

    def test_negative_kappa_rejected(self):
        with pytest.raises(DomainError):
            affine_B(-1.0, 0.5)

    def test_negative_tau_rejected(self):
        with pytest.raises(DomainError):
            affine_B(1.0, -0.5)


class TestFactorMoments:
    """Test the OU factor mean and covariance functions."""

    def test_mean_closed_form(self, single_params):
        expected = 0.5 * np.exp(-2.0) + 0.1 * (1.0 - np.exp(-2.0))
        assert factor_mean(single_params, 1.0) == pytest.approx(expected, rel=1e-14)

    def test_variance_on_diagonal(self, single_params):
        variance = factor_covariance(single_params, 1, 1, 1.0, 1.0)
        expected = 0.2**2 * (1.0 - np.exp(-4.0)) / 4.0
        assert variance == pytest.approx(expected, rel=1e-13)

    def test_covariance_decays_with_lag(self, single_params):
        near = factor_covariance(single_params, 1, 1, 0.5, 0.6)
        far = factor_covariance(single_params, 1, 1, 0.5, 0.9)
        assert 0.0 < far < near

    def test_cross_factor_needs_multi_params(self, single_params):
        with pytest.raises(ConfigurationError):
            factor_covariance(single_params, 1, 2, 0.5, 0.5)

    def test_mixed_second_moment_closed_form(self, correlated_params):
        f1, f2 = correlated_params.factor1, correlated_params.factor2
        s, t = 0.5, 0.7
        total = f1.kappa + f2.kappa
        cov = (
            correlated_params.rho
            * f1.sigma
            * f2.sigma
            / total
            * np.exp(-(f1.kappa * s + f2.kappa * t))
            * (np.exp(total * min(s, t)) - 1.0)
        )
        expected = factor_mean(f1, s) * factor_mean(f2, t) + cov
        assert mixed_second_moment(correlated_params, s, t) == pytest.approx(expected, rel=1e-12)

    def test_large_times_do_not_overflow(self, single_params):
        value = factor_covariance(single_params, 1, 1, 500.0, 500.0)
        assert np.isfinite(value)
        assert value == pytest.approx(0.2**2 / 4.0, rel=1e-12)


class TestLogBondMoments:
    """Test mean_log_bond and cov_log_bond."""

    def test_log_price_mean_at_maturity_is_zero(self, multi_params):
        assert mean_log_bond(multi_params, CurveId.ZERO, 1.0, 1.0) == 0.0
        assert mean_log_bond(multi_params, CurveId.DELTA, 1.0, 1.0) == 0.0

    def test_zero_curve_mean_formula(self, single_params):
        t, maturity = 0.3, 1.0
        tau = maturity - t
        expected = -affine_A(single_params, tau) - affine_B(2.0, tau) * factor_mean(single_params, t)
        assert mean_log_bond(single_params, CurveId.ZERO, t, maturity) == pytest.approx(expected, rel=1e-14)

    def test_delta_curve_needs_multi_params(self, single_params):
        with pytest.raises(ConfigurationError):
            mean_log_bond(single_params, CurveId.DELTA, 0.5, 1.0)
        with pytest.raises(ConfigurationError):
            bond_intercept(single_params, CurveId.DELTA, 0.5)

    def test_times_outside_horizon_rejected(self, single_params):
        with pytest.raises(DomainError):
            mean_log_bond(single_params, CurveId.ZERO, 1.5, 1.0)
        with pytest.raises(DomainError):
            cov_log_bond(single_params, CurveId.ZERO, CurveId.ZERO, -0.1, 0.5, 1.0)

    def test_variance_vanishes_at_maturity_and_time_zero(self, single_params):
        assert cov_log_bond(single_params, CurveId.ZERO, CurveId.ZERO, 1.0, 1.0, 1.0) == 0.0
        assert cov_log_bond(single_params, CurveId.ZERO, CurveId.ZERO, 0.0, 0.0, 1.0) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(
        s=st.floats(0.0, 1.0),
        t=st.floats(0.0, 1.0),
        rho=st.floats(-1.0, 1.0),
        curve_a=st.sampled_from(list(CurveId)),
        curve_b=st.sampled_from(list(CurveId)),
    )
    def test_kernel_is_exactly_symmetric(self, s, t, rho, curve_a, curve_b):
        params = MultiCurveParams(
            factor1=SingleCurveParams(r0=0.5, kappa=2.0, theta=0.1, sigma=0.2),
            factor2=SingleCurveParams(r0=0.7, kappa=0.5, theta=0.03, sigma=0.8),
            rho=rho,
        )
        forward = cov_log_bond(params, curve_a, curve_b, s, t, 1.0)
        backward = cov_log_bond(params, curve_b, curve_a, t, s, 1.0)
        assert forward == backward

    def test_zero_delta_block_with_degenerate_second_factor(self, multi_params):
        params = multi_params.model_copy(
            update={"factor2": SingleCurveParams(r0=0.7, kappa=0.5, theta=0.03, sigma=0.0), "rho": 0.0}
        )
        s, t = 0.3, 0.6
        expected = affine_B(2.0, 1.0 - s) * affine_B(2.0, 1.0 - t) * factor_covariance(params, 1, 1, s, t)
        assert cov_log_bond(params, CurveId.ZERO, CurveId.DELTA, s, t, 1.0) == pytest.approx(expected, rel=1e-14)

    def test_variance_reaches_stationary_limit(self, single_params):
        # kappa * t = 40
        variance = cov_log_bond(single_params, CurveId.ZERO, CurveId.ZERO, 20.0, 20.0, 21.0)
        stationary = affine_B(2.0, 1.0) ** 2 * 0.2**2 / (2.0 * 2.0)
        assert variance == pytest.approx(stationary, rel=1e-6)

    @pytest.mark.parametrize("curve_a, curve_b", [(CurveId.ZERO, CurveId.DELTA), (CurveId.DELTA, CurveId.DELTA)])
    def test_continuous_as_second_kappa_meets_first(self, correlated_params, curve_a, curve_b):
        kappa = correlated_params.factor1.kappa
        equal = correlated_params.model_copy(
            update={"factor2": correlated_params.factor2.model_copy(update={"kappa": kappa})}
        )
        nearby = correlated_params.model_copy(
            update={"factor2": correlated_params.factor2.model_copy(update={"kappa": kappa * (1.0 + 1e-8)})}
        )
        for s, t in [(0.3, 0.6), (0.5, 0.5), (0.9, 0.1)]:
            at = cov_log_bond(equal, curve_a, curve_b, s, t, 1.0)
            near = cov_log_bond(nearby, curve_a, curve_b, s, t, 1.0)
            assert near == pytest.approx(at, rel=1e-6)


class TestDegenerateMultiCurve:
    """A multi-curve model with an inert second factor reduces to the single-curve model."""

    @pytest.fixture
    def degenerate(self, single_params):
        inert = SingleCurveParams(r0=0.0, kappa=0.5, theta=0.0, sigma=0.0)
        return MultiCurveParams(factor1=single_params, factor2=inert, rho=0.3)

    def test_zero_curve_matches_single_curve(self, single_params, degenerate):
        times = np.linspace(0.0, 1.0, 100)
        np.testing.assert_allclose(
            mean_log_bond(degenerate, CurveId.ZERO, times, 1.0),
            mean_log_bond(single_params, CurveId.ZERO, times, 1.0),
            rtol=1e-12,
            atol=0.0,
        )
        s, t = times[:, None], times[None, :]
        np.testing.assert_allclose(
            cov_log_bond(degenerate, CurveId.ZERO, CurveId.ZERO, s, t, 1.0),
            cov_log_bond(single_params, CurveId.ZERO, CurveId.ZERO, s, t, 1.0),
            rtol=1e-12,
            atol=0.0,
        )

    def test_delta_curve_matches_zero_curve(self, single_params, degenerate):
        times = np.linspace(0.0, 1.0, 100)
        np.testing.assert_allclose(
            mean_log_bond(degenerate, CurveId.DELTA, times, 1.0),
            mean_log_bond(single_params, CurveId.ZERO, times, 1.0),
            rtol=1e-12,
            atol=1e-16,
        )
        s, t = times[:, None], times[None, :]
        np.testing.assert_allclose(
            cov_log_bond(degenerate, CurveId.DELTA, CurveId.DELTA, s, t, 1.0),
            cov_log_bond(single_params, CurveId.ZERO, CurveId.ZERO, s, t, 1.0),
            rtol=1e-12,
            atol=0.0,
        )
