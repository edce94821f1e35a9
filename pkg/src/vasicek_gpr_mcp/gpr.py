"""
Gaussian process regression on log-bond prices.

Assembles prior means and covariance matrices over (time, curve) labels,
evaluates the log marginal likelihood and conditions on observations.

Observations whose prior variance is exactly zero (t = T, or t = 0 without
noise) are deterministic.  When the observed value equals the prior mean they
carry no information and are left out of the factorization; otherwise they
stay in and the jitter policy applies.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg
from scipy.stats import norm

from .affine import cov_log_bond, mean_log_bond
from .errors import DomainError, FactorizationError
from .models import (
    CurveId,
    CurveParams,
    GaussianBelief,
    Label,
    ObservationSet,
    PredictionRequest,
)

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


class JitterPolicy(BaseModel):
    """Diagonal jitter eps * mean(diag), eps escalating in decades."""

    model_config = ConfigDict(frozen=True)

    min_exponent: int = Field(default=-10, le=0)
    max_exponent: int = Field(default=-6, le=0)

    @model_validator(mode="after")
    def _check_order(self) -> "JitterPolicy":
        if self.min_exponent > self.max_exponent:
            raise ValueError("min_exponent must not exceed max_exponent")
        return self

    def schedule(self) -> List[float]:
        return [10.0**exponent for exponent in range(self.min_exponent, self.max_exponent + 1)]


DEFAULT_JITTER = JitterPolicy()


@dataclass(frozen=True)
class Factorization:
    lower: np.ndarray
    jitter: float


@dataclass(frozen=True)
class LikelihoodEvaluation:
    value: float
    jitter: float
    n_used: int
    n_pinned: int


def factorize(cov: np.ndarray, policy: JitterPolicy = DEFAULT_JITTER) -> Factorization:
    """Lower Cholesky factor, escalating diagonal jitter on failure."""
    if not np.all(np.isfinite(cov)):
        raise FactorizationError("covariance matrix contains non-finite entries")
    try:
        return Factorization(lower=linalg.cholesky(cov, lower=True), jitter=0.0)
    except linalg.LinAlgError:
        pass

    scale = float(np.mean(np.diag(cov)))
    if not scale > 0.0:
        scale = 1.0
    identity = np.eye(cov.shape[0])
    jitter = 0.0
    for eps in policy.schedule():
        jitter = eps * scale
        try:
            lower = linalg.cholesky(cov + jitter * identity, lower=True)
        except linalg.LinAlgError:
            continue
        logger.debug(f"Cholesky succeeded with jitter {jitter:.3e} (eps={eps:.0e})")
        return Factorization(lower=lower, jitter=jitter)
    raise FactorizationError(f"covariance matrix not positive definite even with jitter {jitter:.3e}", jitter)


# =============================================================================
# PRIOR ASSEMBLY
# =============================================================================


def _split_labels(index: Sequence[Label]) -> Tuple[np.ndarray, List[CurveId]]:
    times = np.array([float(t) for t, _ in index], dtype=float)
    curves = [CurveId(curve) for _, curve in index]
    return times, curves


def _mean_vector(params: CurveParams, index: Sequence[Label], maturity: float) -> np.ndarray:
    times, curves = _split_labels(index)
    mean = np.empty(times.size)
    for curve in set(curves):
        mask = np.array([c == curve for c in curves], dtype=bool)
        mean[mask] = mean_log_bond(params, curve, times[mask], maturity)
    return mean


def cross_covariance(
    params: CurveParams, index_a: Sequence[Label], index_b: Sequence[Label], maturity: float
) -> np.ndarray:
    """Matrix of cov_log_bond over two label lists."""
    times_a, curves_a = _split_labels(index_a)
    times_b, curves_b = _split_labels(index_b)
    cov = np.zeros((times_a.size, times_b.size))
    for curve_a in set(curves_a):
        rows = np.flatnonzero([c == curve_a for c in curves_a])
        for curve_b in set(curves_b):
            cols = np.flatnonzero([c == curve_b for c in curves_b])
            block = cov_log_bond(
                params, curve_a, curve_b, times_a[rows][:, np.newaxis], times_b[cols][np.newaxis, :], maturity
            )
            cov[np.ix_(rows, cols)] = block
    return cov


def assemble_prior(
    params: CurveParams, obs_index: Sequence[Label], maturity: float, noise_var: float = 0.0
) -> GaussianBelief:
    """Prior mean and covariance of the labelled log prices, noise on the diagonal."""
    if noise_var < 0.0 or not np.isfinite(noise_var):
        raise DomainError(f"noise variance must be finite and non-negative, got {noise_var}")
    index = [(float(t), CurveId(c)) for t, c in obs_index]
    mean = _mean_vector(params, index, maturity)
    cov = cross_covariance(params, index, index, maturity)
    if noise_var > 0.0:
        cov[np.diag_indices_from(cov)] += noise_var
    return GaussianBelief(mean=mean, cov=cov, labels=tuple(index))


def _informative(belief: GaussianBelief, values: np.ndarray) -> np.ndarray:
    variance = np.diag(belief.cov)
    residual = np.abs(values - belief.mean)
    pinned = (variance == 0.0) & (residual <= 1e-12 * np.maximum(1.0, np.abs(belief.mean)))
    return ~pinned


# =============================================================================
# MARGINAL LIKELIHOOD
# =============================================================================


def log_density(
    belief: GaussianBelief, values: np.ndarray, policy: JitterPolicy = DEFAULT_JITTER
) -> LikelihoodEvaluation:
    """log N(values; mean, cov) including the (n/2) log 2 pi constant."""
    values = np.asarray(values, dtype=float)
    if values.shape != belief.mean.shape:
        raise DomainError(f"{values.size} values for a belief of size {belief.size}")
    keep = _informative(belief, values)
    n_used = int(np.count_nonzero(keep))
    if n_used == 0:
        return LikelihoodEvaluation(value=0.0, jitter=0.0, n_used=0, n_pinned=values.size)

    residual = (values - belief.mean)[keep]
    factor = factorize(belief.cov[np.ix_(keep, keep)], policy)
    whitened = linalg.solve_triangular(factor.lower, residual, lower=True)
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor.lower))))
    value = -0.5 * float(whitened @ whitened) - 0.5 * log_det - 0.5 * n_used * LOG_2PI
    return LikelihoodEvaluation(value=value, jitter=factor.jitter, n_used=n_used, n_pinned=values.size - n_used)


def evaluate_log_marginal_likelihood(
    params: CurveParams, obs: ObservationSet, policy: JitterPolicy = DEFAULT_JITTER
) -> LikelihoodEvaluation:
    prior = assemble_prior(params, obs.index, obs.maturity, obs.noise_var)
    return log_density(prior, obs.stacked, policy)


def log_marginal_likelihood(
    params: CurveParams, obs: ObservationSet, policy: JitterPolicy = DEFAULT_JITTER
) -> float:
    """Full log p(y) of the observations under the model."""
    return evaluate_log_marginal_likelihood(params, obs, policy).value


def summed_log_marginal_likelihood(
    params: CurveParams, obs: ObservationSet, policy: JitterPolicy = DEFAULT_JITTER
) -> float:
    """Sum of per-curve likelihoods, ignoring cross-curve covariance.

    Equals the joint likelihood only for independent curves; correlated curves
    must be calibrated with log_marginal_likelihood.
    """
    total = 0.0
    for curve in obs.curves:
        single = ObservationSet(grid=obs.grid, values={curve: obs.values[curve]}, noise_var=obs.noise_var)
        total += log_marginal_likelihood(params, single, policy)
    return total


# =============================================================================
# POSTERIOR PREDICTION
# =============================================================================


def posterior(
    params: CurveParams,
    obs: Optional[ObservationSet],
    request: PredictionRequest,
    policy: JitterPolicy = DEFAULT_JITTER,
) -> GaussianBelief:
    """Belief over the requested (noise-free) log prices given the observations.

    Without observations the prior of the targets is returned.
    """
    maturity = request.maturity if request.maturity is not None else (obs.maturity if obs else None)
    if maturity is None:
        raise DomainError("a maturity is needed to predict without observations")
    if obs is not None and abs(obs.maturity - maturity) > 1e-12 * maturity:
        raise DomainError(f"request maturity {maturity} differs from observation maturity {obs.maturity}")

    targets = [(float(t), CurveId(c)) for t, c in request.targets]
    target_prior = assemble_prior(params, targets, maturity)
    if obs is None:
        return target_prior

    obs_prior = assemble_prior(params, obs.index, maturity, obs.noise_var)
    values = obs.stacked
    keep = _informative(obs_prior, values)
    if not np.any(keep):
        return target_prior

    index = [label for label, used in zip(obs_prior.labels, keep) if used]
    factor = factorize(obs_prior.cov[np.ix_(keep, keep)], policy)
    residual = (values - obs_prior.mean)[keep]
    k_obs_target = cross_covariance(params, index, targets, maturity)

    alpha = linalg.cho_solve((factor.lower, True), residual)
    v = linalg.solve_triangular(factor.lower, k_obs_target, lower=True)
    mean = target_prior.mean + k_obs_target.T @ alpha
    cov = target_prior.cov - v.T @ v
    cov = 0.5 * (cov + cov.T)
    return GaussianBelief(mean=mean, cov=cov, labels=tuple(targets))


def confidence_band(belief: GaussianBelief, level: float = 0.95) -> Tuple[np.ndarray, np.ndarray]:
    """Per-target (lower, upper) = mean -/+ z(level) sqrt(var); negative variances count as 0."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must lie in (0, 1), got {level}")
    z = float(norm.ppf(0.5 + 0.5 * level))
    half_width = z * np.sqrt(np.clip(belief.variance, 0.0, None))
    return belief.mean - half_width, belief.mean + half_width


__all__ = [
    "JitterPolicy",
    "DEFAULT_JITTER",
    "Factorization",
    "LikelihoodEvaluation",
    "factorize",
    "cross_covariance",
    "assemble_prior",
    "log_density",
    "evaluate_log_marginal_likelihood",
    "log_marginal_likelihood",
    "summed_log_marginal_likelihood",
    "posterior",
    "confidence_band",
]
