"""
Hyper-parameter search for the Vasicek GP models.

The objective is the negative log marginal likelihood in an unconstrained
space where kappa and sigma are log-transformed.  Two optimizers are provided:
Polak-Ribiere+ nonlinear conjugate gradient with a strong Wolfe line search,
and full-batch Adam.  Both work on any callable ``x -> (value, gradient)``;
``calibrate`` ties them to an observation set.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.optimize import line_search

from .errors import DomainError, VasicekGPRError
from .gpr import DEFAULT_JITTER, JitterPolicy, LikelihoodEvaluation, evaluate_log_marginal_likelihood
from .models import (
    CalibrationResult,
    CurveParams,
    InitRanges,
    ModelKind,
    MultiCurveParams,
    ObservationSet,
    OptimizerConfig,
    OptimizerMethod,
    SingleCurveParams,
    parameter_names,
)
from .simulator import make_rng

logger = logging.getLogger(__name__)

# Objective value returned for points where the likelihood cannot be evaluated
BARRIER = 1e20

# Sufficient descent constant for the PR+ direction
_DESCENT_SIGMA = 0.01

Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]


class ParamTransform:
    """Map between constrained parameters and the optimizer's unconstrained vector.

    r0 and theta pass through; kappa and sigma are stored as logarithms.
    """

    def __init__(self, kind: ModelKind, rho: float = 0.0):
        self.kind = ModelKind(kind)
        self.rho = float(rho)
        self.names = parameter_names(self.kind)
        self.positive = np.array([name.split("_")[0] in ("kappa", "sigma") for name in self.names])

    @property
    def dim(self) -> int:
        return len(self.names)

    def encode(self, values: np.ndarray) -> np.ndarray:
        """Constrained vector -> unconstrained vector."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.dim,):
            raise DomainError(f"expected {self.dim} parameters, got shape {values.shape}")
        if np.any(values[self.positive] <= 0.0):
            raise DomainError("kappa and sigma must be strictly positive to be log-transformed")
        x = values.copy()
        x[self.positive] = np.log(values[self.positive])
        return x

    def decode(self, x: np.ndarray) -> np.ndarray:
        """Unconstrained vector -> constrained vector."""
        x = np.asarray(x, dtype=float)
        values = x.copy()
        with np.errstate(over="ignore"):
            values[self.positive] = np.exp(x[self.positive])
        return values

    def to_unconstrained(self, params: CurveParams) -> np.ndarray:
        return self.encode(params.to_vector())

    def to_constrained(self, x: np.ndarray) -> CurveParams:
        values = self.decode(x)
        if self.kind == ModelKind.MULTI:
            return MultiCurveParams.from_vector(values, rho=self.rho)
        return SingleCurveParams.from_vector(values)


# =============================================================================
# OBJECTIVE
# =============================================================================


class NegativeLogLikelihood:
    """-log p(y | params(x)) with a central finite-difference gradient.

    Any failure to evaluate (invalid parameters, factorization failure,
    overflow) yields BARRIER instead of an exception.
    """

    def __init__(
        self,
        obs: ObservationSet,
        transform: ParamTransform,
        policy: JitterPolicy = DEFAULT_JITTER,
        fd_step: float = 1e-6,
    ):
        self.obs = obs
        self.transform = transform
        self.policy = policy
        self.fd_step = fd_step
        self.evaluations = 0

    def evaluate(self, x: np.ndarray) -> Optional[LikelihoodEvaluation]:
        self.evaluations += 1
        try:
            with np.errstate(all="ignore"):
                params = self.transform.to_constrained(x)
                evaluation = evaluate_log_marginal_likelihood(params, self.obs, self.policy)
        except (ValidationError, VasicekGPRError, ArithmeticError, ValueError) as e:
            logger.debug(f"Objective barrier at x={np.asarray(x).tolist()}: {e}")
            return None
        if not np.isfinite(evaluation.value):
            return None
        return evaluation

    def value(self, x: np.ndarray) -> float:
        evaluation = self.evaluate(x)
        if evaluation is None:
            return BARRIER
        return min(-evaluation.value, BARRIER)

    def gradient(self, x: np.ndarray, f0: Optional[float] = None) -> np.ndarray:
        """Central differences with step fd_step * max(1, |x_i|), one-sided next to the barrier."""
        x = np.asarray(x, dtype=float)
        grad = np.zeros_like(x)
        for i in range(x.size):
            h = self.fd_step * max(1.0, abs(x[i]))
            step = np.zeros_like(x)
            step[i] = h
            f_plus = self.value(x + step)
            f_minus = self.value(x - step)
            if f_plus < BARRIER and f_minus < BARRIER:
                grad[i] = (f_plus - f_minus) / (2.0 * h)
                continue
            if f0 is None:
                f0 = self.value(x)
            if f0 >= BARRIER:
                continue
            if f_plus < BARRIER:
                grad[i] = (f_plus - f0) / h
            elif f_minus < BARRIER:
                grad[i] = (f0 - f_minus) / h
        return grad

    def __call__(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        f0 = self.value(x)
        return f0, self.gradient(x, f0)


def nll_objective(
    obs: ObservationSet,
    model_kind: ModelKind,
    point: np.ndarray,
    rho: float = 0.0,
    policy: JitterPolicy = DEFAULT_JITTER,
    fd_step: float = 1e-6,
) -> Tuple[float, np.ndarray]:
    """(value, gradient) of the negative log marginal likelihood at an unconstrained point."""
    objective = NegativeLogLikelihood(obs, ParamTransform(model_kind, rho), policy, fd_step)
    return objective(np.asarray(point, dtype=float))


class _CachedObjective:
    """Remembers the last evaluated point so value and gradient share one call."""

    def __init__(self, objective: Objective):
        self.objective = objective
        self._x: Optional[np.ndarray] = None
        self._f = 0.0
        self._g: Optional[np.ndarray] = None
        self._values: dict = {}

    def both(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        if self._x is None or not np.array_equal(x, self._x):
            f, g = self.objective(x)
            self._x, self._f, self._g = np.array(x, dtype=float), float(f), np.asarray(g, dtype=float)
        return self._f, self._g

    def f(self, x: np.ndarray) -> float:
        if self._x is not None and np.array_equal(x, self._x):
            return self._f
        value_only = getattr(self.objective, "value", None)
        if value_only is None:
            return self.both(x)[0]
        key = np.asarray(x, dtype=float).tobytes()
        if key not in self._values:
            self._values[key] = float(value_only(x))
        return self._values[key]

    def g(self, x: np.ndarray) -> np.ndarray:
        return self.both(x)[1]

    def reset(self) -> None:
        self._values.clear()


# =============================================================================
# OPTIMIZERS
# =============================================================================


@dataclass
class OptimizationResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str
    trace: Optional[List[Tuple[float, float]]] = field(default=None)


def _check_start(x0: np.ndarray) -> np.ndarray:
    x = np.array(x0, dtype=float).ravel()
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise DomainError(f"starting point must be finite and non-empty, got {x0}")
    return x


def minimize_cg(
    objective: Objective, x0: np.ndarray, config: OptimizerConfig = OptimizerConfig()
) -> OptimizationResult:
    """Polak-Ribiere+ conjugate gradient with a strong Wolfe line search.

    Restarts along the steepest descent when beta is clipped to zero, every
    10 * dim iterations, or when the new direction is not a sufficient
    descent direction.  A failed line search is retried once along -g; a
    second failure ends the run with converged=False at the best point.

    Only a gradient norm at or below ``grad_tol`` counts as convergence.  A step
    whose relative objective reduction falls below ``f_tol`` while the gradient
    is still larger stops the run as stalled, with converged=False.
    """
    cache = _CachedObjective(objective)
    x = _check_start(x0)
    f, g = cache.both(x)
    grad_norm = float(np.linalg.norm(g))
    trace: Optional[List[Tuple[float, float]]] = [(f, grad_norm)] if config.record_trace else None
    if f >= BARRIER:
        return OptimizationResult(x, f, grad_norm, 0, False, "objective not defined at the starting point", trace)

    restart_every = 10 * x.size
    direction = -g
    converged = False
    message = "maximum number of iterations reached"
    iterations = 0

    while iterations < config.max_iters:
        if grad_norm <= config.grad_tol:
            converged, message = True, "gradient norm below tolerance"
            break
        if float(g @ direction) >= 0.0:
            direction = -g

        alpha = None
        for attempt in range(2):
            cache.reset()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                alpha, _, _, f_new, _, _ = line_search(
                    cache.f,
                    cache.g,
                    x,
                    direction,
                    gfk=g,
                    old_fval=f,
                    old_old_fval=None,
                    c1=config.wolfe_c1,
                    c2=config.wolfe_c2,
                    maxiter=config.max_line_search,
                )
            if alpha is not None or np.array_equal(direction, -g):
                break
            logger.debug(f"Line search failed at iteration {iterations}, retrying along steepest descent")
            direction = -g
        if alpha is None or f_new is None or f_new > f:
            message = "line search failed"
            logger.debug(f"CG stopped at iteration {iterations}: {message} (f={f:.6g})")
            break

        x_new = x + alpha * direction
        f_new, g_new = cache.both(x_new)
        iterations += 1

        beta = max(0.0, float(g_new @ (g_new - g)) / float(g @ g))
        if iterations % restart_every == 0:
            beta = 0.0
        direction = -g_new + beta * direction
        if float(direction @ g_new) > -_DESCENT_SIGMA * float(g_new @ g_new):
            direction = -g_new

        f_change = f - f_new
        x, f, g = x_new, f_new, g_new
        grad_norm = float(np.linalg.norm(g))
        if trace is not None:
            trace.append((f, grad_norm))
        if f_change <= config.f_tol * max(1.0, abs(f)) and grad_norm > config.grad_tol:
            message = "stalled: relative objective reduction below f_tol"
            logger.debug(f"CG stalled at iteration {iterations} with gradient norm {grad_norm:.3g}")
            break

    if grad_norm <= config.grad_tol:
        converged, message = True, "gradient norm below tolerance"
    return OptimizationResult(x, f, grad_norm, iterations, converged, message, trace)


def minimize_adam(
    objective: Objective, x0: np.ndarray, config: OptimizerConfig = OptimizerConfig()
) -> OptimizationResult:
    """Bias-corrected Adam for exactly ``config.epochs`` full-gradient steps; returns the best iterate."""
    x = _check_start(x0)
    f, g = objective(x)
    best_x, best_f, best_g = x.copy(), float(f), np.asarray(g, dtype=float)
    trace: Optional[List[Tuple[float, float]]] = (
        [(best_f, float(np.linalg.norm(best_g)))] if config.record_trace else None
    )
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    lr, b1, b2, eps = config.learning_rate, config.beta1, config.beta2, config.adam_eps

    for step in range(1, config.epochs + 1):
        g = np.nan_to_num(np.asarray(g, dtype=float), nan=0.0, posinf=0.0, neginf=0.0)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**step)
        v_hat = v / (1.0 - b2**step)
        x = x - lr * m_hat / (np.sqrt(v_hat) + eps)
        f, g = objective(x)
        f = float(f)
        if f < best_f:
            best_x, best_f, best_g = x.copy(), f, np.asarray(g, dtype=float)
        if trace is not None:
            trace.append((f, float(np.linalg.norm(g))))

    converged = best_f < BARRIER
    message = f"completed {config.epochs} epochs" if converged else "objective never defined along the run"
    return OptimizationResult(best_x, best_f, float(np.linalg.norm(best_g)), config.epochs, converged, message, trace)


def random_init(
    model_kind: ModelKind, init_ranges: InitRanges, rng: np.random.Generator, rho: float = 0.0
) -> np.ndarray:
    """Uniform draw per parameter in constrained space, returned in unconstrained coordinates."""
    bounds = np.array(init_ranges.for_kind(ModelKind(model_kind)), dtype=float)
    values = rng.uniform(bounds[:, 0], bounds[:, 1])
    return ParamTransform(model_kind, rho).encode(values)


# =============================================================================
# CALIBRATION
# =============================================================================


def calibrate(
    obs: ObservationSet,
    model_kind: ModelKind,
    config: OptimizerConfig = OptimizerConfig(),
    rng: Optional[np.random.Generator] = None,
    x0: Optional[CurveParams] = None,
    rho: float = 0.0,
    policy: JitterPolicy = DEFAULT_JITTER,
) -> CalibrationResult:
    """Fit model parameters to one observation set by minimizing the negative log marginal likelihood.

    Starts from ``x0`` when given, otherwise from a random draw of
    ``config.init_ranges`` (rng defaults to one seeded with ``config.seed``).
    """
    transform = ParamTransform(model_kind, rho)
    objective = NegativeLogLikelihood(obs, transform, policy, config.fd_step)
    if x0 is not None:
        start = transform.to_unconstrained(x0)
    else:
        start = random_init(transform.kind, config.init_ranges, rng if rng is not None else make_rng(config.seed), rho)

    if config.method == OptimizerMethod.ADAM:
        outcome = minimize_adam(objective, start, config)
    else:
        outcome = minimize_cg(objective, start, config)

    evaluation = objective.evaluate(outcome.x)
    if evaluation is None:
        raise DomainError(f"calibration ended at a point where the likelihood is undefined: {outcome.message}")
    params = transform.to_constrained(outcome.x)
    logger.debug(
        f"{config.method.value} calibration: nll={outcome.fun:.6f} iterations={outcome.iterations} "
        f"converged={outcome.converged} evaluations={objective.evaluations}"
    )
    return CalibrationResult(
        params=params,
        method=config.method,
        final_nll=outcome.fun,
        iterations=outcome.iterations,
        converged=outcome.converged,
        grad_norm_final=outcome.grad_norm,
        jitter_used=evaluation.jitter,
        message=outcome.message,
        trace=outcome.trace,
    )


__all__ = [
    "BARRIER",
    "ParamTransform",
    "NegativeLogLikelihood",
    "OptimizationResult",
    "nll_objective",
    "minimize_cg",
    "minimize_adam",
    "random_init",
    "calibrate",
]
