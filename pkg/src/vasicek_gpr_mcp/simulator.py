"""
Exact simulation of the Vasicek short-rate factors and their log-bond prices.

Paths are drawn from the exact Gaussian transition of the OU process, so the
marginals are correct for any grid spacing.  Randomness comes from a
counter-based Philox generator; run i of a batch uses the sub-seed
``master_seed ^ i``.
"""

import logging
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .affine import bond_intercept, bond_loadings, split_factors
from .errors import ConfigurationError
from .models import (
    CURVE_ORDER,
    CurveId,
    CurveParams,
    MultiCurveParams,
    SimulatedSeries,
    SingleCurveParams,
    TimeGrid,
)

logger = logging.getLogger(__name__)


def make_rng(seed: int) -> np.random.Generator:
    """Philox generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def sub_seed(master_seed: int, run_index: int) -> int:
    return int(master_seed) ^ int(run_index)


def _steps(grid: TimeGrid) -> np.ndarray:
    return np.diff(np.concatenate([[0.0], grid.points]))


def _transition_variance(kappa: float, dt: float) -> float:
    # Var of the unit-volatility OU increment over dt: (1 - e^{-2 kappa dt}) / (2 kappa)
    two_kappa = 2.0 * kappa
    return float(-np.expm1(-two_kappa * dt) / two_kappa)


def simulate_ou_path(
    params: SingleCurveParams,
    grid: TimeGrid,
    rng: np.random.Generator,
    n_paths: Optional[int] = None,
) -> np.ndarray:
    """Short-rate path(s) on the grid, started from r0 at time 0.

    Returns shape (n,) or (n_paths, n).
    """
    shape = (1 if n_paths is None else n_paths,)
    rates = np.empty(shape + (grid.size,))
    current = np.full(shape, params.r0, dtype=float)
    for i, dt in enumerate(_steps(grid)):
        decay = np.exp(-params.kappa * dt)
        mean = params.theta + (current - params.theta) * decay
        if dt > 0.0:
            sd = params.sigma * np.sqrt(_transition_variance(params.kappa, dt))
            current = mean + sd * rng.standard_normal(shape)
        else:
            current = mean
        rates[:, i] = current
    return rates[0] if n_paths is None else rates


def simulate_correlated_ou(
    params: MultiCurveParams,
    grid: TimeGrid,
    rng: np.random.Generator,
    n_paths: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Jointly Gaussian (r^1, r^2) paths with Brownian correlation rho.

    The second driver is rho W1 + sqrt(1 - rho^2) W3, which gives the exact
    per-step correlation of the two OU increments.
    """
    f1, f2 = params.factor1, params.factor2
    shape = (1 if n_paths is None else n_paths,)
    rates1 = np.empty(shape + (grid.size,))
    rates2 = np.empty(shape + (grid.size,))
    current1 = np.full(shape, f1.r0, dtype=float)
    current2 = np.full(shape, f2.r0, dtype=float)
    for i, dt in enumerate(_steps(grid)):
        mean1 = f1.theta + (current1 - f1.theta) * np.exp(-f1.kappa * dt)
        mean2 = f2.theta + (current2 - f2.theta) * np.exp(-f2.kappa * dt)
        if dt > 0.0:
            v1 = _transition_variance(f1.kappa, dt)
            v2 = _transition_variance(f2.kappa, dt)
            total = f1.kappa + f2.kappa
            v12 = float(-np.expm1(-total * dt) / total)
            corr = float(np.clip(params.rho * v12 / np.sqrt(v1 * v2), -1.0, 1.0))
            residual = np.sqrt(max(0.0, (1.0 - corr) * (1.0 + corr)))
            z1 = rng.standard_normal(shape)
            z3 = rng.standard_normal(shape)
            current1 = mean1 + f1.sigma * np.sqrt(v1) * z1
            current2 = mean2 + f2.sigma * np.sqrt(v2) * (corr * z1 + residual * z3)
        else:
            current1, current2 = mean1, mean2
        rates1[:, i] = current1
        rates2[:, i] = current2
    if n_paths is None:
        return rates1[0], rates2[0]
    return rates1, rates2


def _normalize_curves(params: CurveParams, curves: Iterable[CurveId]) -> Tuple[CurveId, ...]:
    requested = {CurveId(curve) for curve in curves}
    if not requested:
        raise ConfigurationError("at least one curve must be requested")
    if CurveId.DELTA in requested and not isinstance(params, MultiCurveParams):
        raise ConfigurationError("the delta curve needs multi-curve parameters")
    return tuple(curve for curve in CURVE_ORDER if curve in requested)


def sample_log_bonds(
    params: CurveParams,
    curves: Iterable[CurveId],
    grid: TimeGrid,
    rng: np.random.Generator,
    n_paths: int,
) -> Tuple[Dict[CurveId, np.ndarray], np.ndarray]:
    """Log-bond paths of shape (n_paths, n) per curve plus the factor paths.

    All curves are computed from one shared factor realization.
    """
    curves = _normalize_curves(params, curves)
    if isinstance(params, MultiCurveParams):
        rates1, rates2 = simulate_correlated_ou(params, grid, rng, n_paths=n_paths)
        factors = np.stack([rates1, rates2])
    else:
        rates1 = simulate_ou_path(params, grid, rng, n_paths=n_paths)
        rates2 = np.zeros_like(rates1)
        factors = rates1[np.newaxis]

    tau = grid.maturity - grid.points
    log_prices: Dict[CurveId, np.ndarray] = {}
    for curve in curves:
        intercept = np.asarray(bond_intercept(params, curve, tau))
        l1, l2 = bond_loadings(params, curve, tau)
        values = intercept + l1 * rates1
        if curve == CurveId.DELTA:
            values = values + l2 * rates2
        log_prices[curve] = values
    return log_prices, factors


def simulate_log_bonds(
    params: CurveParams,
    curves: Iterable[CurveId],
    grid: TimeGrid,
    rng: np.random.Generator,
    seed: Optional[int] = None,
    noise_var: float = 0.0,
) -> SimulatedSeries:
    """One log-bond series per requested curve, optionally with i.i.d. observation noise."""
    log_prices, factors = sample_log_bonds(params, curves, grid, rng, n_paths=1)
    series_curves = {curve: values[0] for curve, values in log_prices.items()}
    if noise_var > 0.0:
        noise_sd = np.sqrt(noise_var)
        series_curves = {
            curve: values + noise_sd * rng.standard_normal(values.shape) for curve, values in series_curves.items()
        }
    _, factor2, _ = split_factors(params)
    short_rates = factors[:, 0, :] if factor2 is not None else factors[0, 0, :]
    logger.debug(f"Simulated {grid.size} points on curves {[c.value for c in series_curves]} (seed={seed})")
    return SimulatedSeries(grid=grid, curves=series_curves, short_rates=short_rates, seed=seed)


__all__ = [
    "make_rng",
    "sub_seed",
    "simulate_ou_path",
    "simulate_correlated_ou",
    "sample_log_bonds",
    "simulate_log_bonds",
]
