"""
Affine term-structure machinery for the single- and multi-curve Vasicek models.

Closed-form Riccati solutions (A, B, Phi, Psi1, Psi2), the factor moments and
the exact mean/covariance functions of log-bond prices.  Every function
accepts scalars or broadcastable numpy arrays; scalar inputs give floats.

A log-bond price on curve c at time t with maturity T is affine in the
factors:  log P = intercept_c(T-t) + l1_c(T-t) r1_t + l2_c(T-t) r2_t, with
    Zero:  intercept = -A,   loadings = (-B1, 0)
    Delta: intercept = Phi,  loadings = (Psi1, Psi2)
so means and covariances follow from the factor moments.

The closed forms are used as-is near tau = 0 (they vanish exactly there);
cancellation is negligible for tau >= 1e-12 years.
"""

import logging
from typing import Any, Optional, Tuple, Union

import numpy as np

from .errors import ConfigurationError, DomainError
from .models import CurveId, CurveParams, MultiCurveParams, SingleCurveParams

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _result(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def _check_kappa(kappa: Any, name: str = "kappa") -> np.ndarray:
    kappa = np.asarray(kappa, dtype=float)
    if not np.all(np.isfinite(kappa)) or np.any(kappa <= 0.0):
        raise DomainError(f"{name} must be positive and finite, got {kappa}")
    return kappa


def _check_tau(tau: Any) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if np.any(np.isnan(tau)) or np.any(tau < 0.0):
        raise DomainError(f"time to maturity must be non-negative, got {tau}")
    return tau


def _check_times(t: Any, maturity: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0.0) or np.any(t > maturity):
        raise DomainError(f"times must lie in [0, {maturity}], got {t}")
    return t


def split_factors(params: CurveParams) -> Tuple[SingleCurveParams, Optional[SingleCurveParams], float]:
    """(factor1, factor2 or None, rho) of either parameter set."""
    if isinstance(params, MultiCurveParams):
        return params.factor1, params.factor2, params.rho
    return params, None, 0.0


# =============================================================================
# RICCATI SOLUTIONS
# =============================================================================


def affine_B(kappa: Any, tau: Any) -> ArrayLike:
    """B(tau) = (1 - exp(-kappa tau)) / kappa."""
    kappa = _check_kappa(kappa)
    tau = _check_tau(tau)
    return _result(-np.expm1(-kappa * tau) / kappa)


def _drift_integral(kappa: np.ndarray, tau: np.ndarray) -> np.ndarray:
    # tau - B(tau) = integral of (1 - B') over [0, tau]
    return (np.expm1(-kappa * tau) + kappa * tau) / kappa


def _integrated_b_product(kappa_a: np.ndarray, kappa_b: np.ndarray, tau: np.ndarray) -> np.ndarray:
    # integral over [0, tau] of B_a(u) B_b(u) du
    ba = -np.expm1(-kappa_a * tau) / kappa_a
    bb = -np.expm1(-kappa_b * tau) / kappa_b
    bab = -np.expm1(-(kappa_a + kappa_b) * tau) / (kappa_a + kappa_b)
    return (tau - ba - bb + bab) / (kappa_a * kappa_b)


def _integrated_b_squared(kappa: np.ndarray, tau: np.ndarray) -> np.ndarray:
    x = kappa * tau
    return (2.0 * x + 4.0 * np.expm1(-x) - np.expm1(-2.0 * x)) / (2.0 * kappa**3)


def affine_A(params: SingleCurveParams, tau: Any) -> ArrayLike:
    """A(tau) = theta/kappa (e^{-k tau} + k tau - 1) + sigma^2/(4 k^3)(e^{-2 k tau} - 4 e^{-k tau} - 2 k tau + 3)."""
    tau = _check_tau(tau)
    kappa = _check_kappa(params.kappa)
    value = params.theta * _drift_integral(kappa, tau) - 0.5 * params.sigma**2 * _integrated_b_squared(kappa, tau)
    return _result(value)


def psi1(kappa1: Any, tau: Any) -> ArrayLike:
    """Psi1(tau) = -B(kappa1, tau)."""
    return _result(-np.asarray(affine_B(kappa1, tau)))


def psi2(kappa2: Any, tau: Any) -> ArrayLike:
    """Psi2(tau) = (1 - exp(-kappa2 tau)) / kappa2."""
    kappa2 = _check_kappa(kappa2, "kappa2")
    tau = _check_tau(tau)
    return _result(-np.expm1(-kappa2 * tau) / kappa2)


def phi(params: MultiCurveParams, tau: Any) -> ArrayLike:
    """Phi(tau) of the tenor-delta bond, including the rho sigma1 sigma2 cross term."""
    tau = _check_tau(tau)
    f1, f2 = params.factor1, params.factor2
    k1 = _check_kappa(f1.kappa, "kappa1")
    k2 = _check_kappa(f2.kappa, "kappa2")
    value = (
        -f1.theta * _drift_integral(k1, tau)
        + f2.theta * _drift_integral(k2, tau)
        + 0.5 * f1.sigma**2 * _integrated_b_squared(k1, tau)
        + 0.5 * f2.sigma**2 * _integrated_b_squared(k2, tau)
        - params.rho * (f1.sigma * f2.sigma) * _integrated_b_product(k1, k2, tau)
    )
    return _result(value)


# =============================================================================
# FACTOR MOMENTS
# =============================================================================


def factor_mean(params: SingleCurveParams, t: Any) -> ArrayLike:
    """E[r_t] = r0 e^{-kappa t} + theta (1 - e^{-kappa t})."""
    t = np.asarray(t, dtype=float)
    decay = np.exp(-params.kappa * t)
    return _result(params.r0 * decay + params.theta * (1.0 - decay))


def _ou_covariance(
    kappa_a: float, sigma_a: float, kappa_b: float, sigma_b: float, corr: float, s: np.ndarray, t: np.ndarray
) -> np.ndarray:
    # corr sa sb / (ka + kb) e^{-(ka s + kb t)} (e^{(ka + kb)(s ^ t)} - 1), rearranged to avoid overflow
    total = kappa_a + kappa_b
    m = np.minimum(s, t)
    coefficient = corr * (sigma_a * sigma_b) / total
    return coefficient * np.exp(total * m - (kappa_a * s + kappa_b * t)) * (-np.expm1(-total * m))


def factor_covariance(params: CurveParams, i: int, j: int, s: Any, t: Any) -> ArrayLike:
    """Cov(r^i_s, r^j_t) for factor indices i, j in {1, 2}."""
    f1, f2, rho = split_factors(params)
    factors = {1: f1, 2: f2}
    if factors.get(i) is None or factors.get(j) is None:
        raise ConfigurationError(f"factor pair ({i}, {j}) needs multi-curve parameters")
    a, b = factors[i], factors[j]
    corr = 1.0 if i == j else rho
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return _result(_ou_covariance(a.kappa, a.sigma, b.kappa, b.sigma, corr, s, t))


def mixed_second_moment(params: MultiCurveParams, s: Any, t: Any) -> ArrayLike:
    """E[r^1_s r^2_t] = E[r^1_s] E[r^2_t] + Cov(r^1_s, r^2_t)."""
    mean1 = np.asarray(factor_mean(params.factor1, s))
    mean2 = np.asarray(factor_mean(params.factor2, t))
    return _result(mean1 * mean2 + np.asarray(factor_covariance(params, 1, 2, s, t)))


# =============================================================================
# LOG-BOND PRICES
# =============================================================================


def bond_intercept(params: CurveParams, curve: CurveId, tau: Any) -> ArrayLike:
    """Deterministic part of log P: -A(tau) on Zero, Phi(tau) on Delta."""
    curve = CurveId(curve)
    f1, _, _ = split_factors(params)
    if curve == CurveId.ZERO:
        return _result(-np.asarray(affine_A(f1, tau)))
    if not isinstance(params, MultiCurveParams):
        raise ConfigurationError("the delta curve needs multi-curve parameters")
    return phi(params, tau)


def bond_loadings(params: CurveParams, curve: CurveId, tau: Any) -> Tuple[np.ndarray, np.ndarray]:
    """Factor loadings (l1, l2) of log P on (r^1, r^2)."""
    curve = CurveId(curve)
    f1, _, _ = split_factors(params)
    l1 = np.asarray(psi1(f1.kappa, tau))
    if curve == CurveId.ZERO:
        return l1, np.zeros_like(l1)
    if not isinstance(params, MultiCurveParams):
        raise ConfigurationError("the delta curve needs multi-curve parameters")
    return l1, np.asarray(psi2(params.factor2.kappa, tau))


def mean_log_bond(params: CurveParams, curve: CurveId, t: Any, maturity: float) -> ArrayLike:
    """E[log P(t, T)] on the given curve."""
    curve = CurveId(curve)
    t = _check_times(t, maturity)
    tau = maturity - t
    f1, f2, _ = split_factors(params)
    intercept = np.asarray(bond_intercept(params, curve, tau))
    l1, l2 = bond_loadings(params, curve, tau)
    value = intercept + l1 * np.asarray(factor_mean(f1, t))
    if curve == CurveId.DELTA:
        value = value + l2 * np.asarray(factor_mean(f2, t))
    return _result(value)


def cov_log_bond(
    params: CurveParams, curve_a: CurveId, curve_b: CurveId, s: Any, t: Any, maturity: float
) -> ArrayLike:
    """Cov(log P_a(s, T), log P_b(t, T)); s and t broadcast against each other.

    Summation order keeps the result exactly symmetric under (s, a) <-> (t, b).
    """
    curve_a, curve_b = CurveId(curve_a), CurveId(curve_b)
    s = _check_times(s, maturity)
    t = _check_times(t, maturity)
    f1, f2, rho = split_factors(params)
    la1, la2 = bond_loadings(params, curve_a, maturity - s)
    lb1, lb2 = bond_loadings(params, curve_b, maturity - t)

    value = (la1 * lb1) * _ou_covariance(f1.kappa, f1.sigma, f1.kappa, f1.sigma, 1.0, s, t)
    if f2 is not None and (curve_a == CurveId.DELTA or curve_b == CurveId.DELTA):
        cross = (la1 * lb2) * _ou_covariance(f1.kappa, f1.sigma, f2.kappa, f2.sigma, rho, s, t) + (
            la2 * lb1
        ) * _ou_covariance(f2.kappa, f2.sigma, f1.kappa, f1.sigma, rho, s, t)
        second = (la2 * lb2) * _ou_covariance(f2.kappa, f2.sigma, f2.kappa, f2.sigma, 1.0, s, t)
        value = value + cross + second
    return _result(value)


__all__ = [
    "affine_A",
    "affine_B",
    "psi1",
    "psi2",
    "phi",
    "factor_mean",
    "factor_covariance",
    "mixed_second_moment",
    "bond_intercept",
    "bond_loadings",
    "mean_log_bond",
    "cov_log_bond",
    "split_factors",
]
