"""
Prediction quality: train/validation splits, SMSE and MSLL.
"""

import logging
from typing import Sequence, Tuple

import numpy as np

from .errors import DomainError
from .gpr import DEFAULT_JITTER, JitterPolicy, posterior
from .models import (
    CurveId,
    CurveParams,
    EvalReport,
    GaussianBelief,
    ObservationSet,
    PredictionRequest,
    SplitSpec,
    SplitStrategy,
    TimeGrid,
)
from .simulator import make_rng

logger = logging.getLogger(__name__)

# Predictive variances are floored here before taking logs
VARIANCE_FLOOR = 1e-30


def train_size(n: int, fraction: float) -> int:
    return int(min(max(np.floor(fraction * n + 1e-9), 1), n - 1))


def split(obs: ObservationSet, spec: SplitSpec = SplitSpec()) -> Tuple[ObservationSet, ObservationSet]:
    """Partition the grid positions into a training and a validation set.

    Every curve is split at the same times.  The prefix strategy keeps the
    first ``train_fraction`` of the times for training.
    """
    n = obs.grid.size
    if n < 2:
        raise DomainError(f"need at least 2 observation times to split, got {n}")
    n_train = train_size(n, spec.train_fraction)
    if spec.strategy == SplitStrategy.RANDOM:
        order = make_rng(spec.seed).permutation(n)
        train_positions, validation_positions = order[:n_train], order[n_train:]
    else:
        train_positions, validation_positions = np.arange(n_train), np.arange(n_train, n)
    return obs.take(train_positions), obs.take(validation_positions)


def merge(first: ObservationSet, second: ObservationSet) -> ObservationSet:
    """Inverse of split: union of two disjoint observation sets on the same curves."""
    if set(first.values) != set(second.values):
        raise DomainError("observation sets cover different curves")
    if first.maturity != second.maturity or first.noise_var != second.noise_var:
        raise DomainError("observation sets differ in maturity or noise variance")
    points = np.concatenate([first.grid.points, second.grid.points])
    order = np.argsort(points, kind="stable")
    if np.any(np.diff(points[order]) == 0.0):
        raise DomainError("observation sets share observation times")
    values = {curve: np.concatenate([first.values[curve], second.values[curve]])[order] for curve in first.curves}
    grid = TimeGrid(points=points[order], maturity=first.maturity)
    return ObservationSet(grid=grid, values=values, noise_var=first.noise_var)


def smse(predicted_mean: Sequence[float], targets: Sequence[float]) -> float:
    """Mean squared error divided by the (population) variance of the targets."""
    predicted = np.asarray(predicted_mean, dtype=float).ravel()
    targets = np.asarray(targets, dtype=float).ravel()
    if predicted.shape != targets.shape:
        raise DomainError(f"{predicted.size} predictions for {targets.size} targets")
    if targets.size < 2:
        raise DomainError("SMSE needs at least two targets")
    target_var = float(np.var(targets))
    if target_var <= 0.0:
        raise DomainError("SMSE is undefined for targets with zero variance")
    return float(np.mean((targets - predicted) ** 2) / target_var)


def _neg_log_density(values: np.ndarray, mean: np.ndarray, variance: np.ndarray) -> np.ndarray:
    return 0.5 * np.log(2.0 * np.pi * variance) + 0.5 * (values - mean) ** 2 / variance


def _floored(variance: np.ndarray) -> np.ndarray:
    scale = max(VARIANCE_FLOOR, float(np.max(np.abs(variance))) if variance.size else 0.0)
    if np.any(variance < -1e-10 * scale):
        raise DomainError(f"negative predictive variance {float(np.min(variance)):.3e}")
    return np.maximum(variance, VARIANCE_FLOOR)


def _trivial_moments(belief: GaussianBelief, train: ObservationSet) -> Tuple[np.ndarray, np.ndarray]:
    if belief.labels:
        curves = [CurveId(curve) for _, curve in belief.labels]
    elif len(train.values) == 1:
        curves = list(train.values) * belief.size
    else:
        raise DomainError("an unlabelled belief needs a single-curve training set")

    mean = np.empty(belief.size)
    variance = np.empty(belief.size)
    for i, curve in enumerate(curves):
        if curve not in train.values:
            raise DomainError(f"no training values for curve {curve.value}")
        values = train.values[curve]
        mean[i] = float(np.mean(values))
        variance[i] = float(np.var(values))
    if np.any(variance <= 0.0):
        raise DomainError("trivial model needs training values with positive variance")
    return mean, variance


def msll(belief: GaussianBelief, targets: Sequence[float], train: ObservationSet) -> float:
    """Mean standardized log loss against the trivial Gaussian fitted to the training values.

    Uses the marginal predictive density of each target; the trivial model is
    built per curve from the training mean and population variance.
    Negative values mean the predictor beats the trivial model.
    """
    targets = np.asarray(targets, dtype=float).ravel()
    if targets.size != belief.size:
        raise DomainError(f"{targets.size} targets for a belief of size {belief.size}")
    variance = _floored(belief.variance)
    trivial_mean, trivial_var = _trivial_moments(belief, train)
    model_loss = _neg_log_density(targets, belief.mean, variance)
    trivial_loss = _neg_log_density(targets, trivial_mean, trivial_var)
    return float(np.mean(model_loss - trivial_loss))


def evaluate(
    params: CurveParams,
    obs: ObservationSet,
    spec: SplitSpec = SplitSpec(),
    policy: JitterPolicy = DEFAULT_JITTER,
) -> EvalReport:
    """Split, condition on the training part and score the validation part."""
    train, validation = split(obs, spec)
    request = PredictionRequest(targets=tuple(validation.index), maturity=obs.maturity)
    belief = posterior(params, train, request, policy)
    targets = validation.stacked
    report = EvalReport(
        smse=smse(belief.mean, targets),
        msll=msll(belief, targets, train),
        residuals=(targets - belief.mean).tolist(),
        predictive_variances=belief.variance.tolist(),
        n_train=train.size,
        n_validation=validation.size,
    )
    logger.debug(f"Evaluation: smse={report.smse:.6g} msll={report.msll:.6g} ({report.n_train}/{report.n_validation})")
    return report


__all__ = ["VARIANCE_FLOOR", "train_size", "split", "merge", "smse", "msll", "evaluate"]
