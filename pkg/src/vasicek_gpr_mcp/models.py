"""
Domain models for the Vasicek GPR toolkit

Pydantic models for model parameters, time grids, observation sets, Gaussian
beliefs, optimizer settings, calibration results and batch summaries.
Array-valued fields hold read-only float64 numpy arrays.
"""

from enum import Enum
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Trading days per year used by the simulated grids
DAYS_PER_YEAR = 250


def _frozen_array(value: Any) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


# =============================================================================
# ENUMERATIONS
# =============================================================================


class CurveId(str, Enum):
    """Curve label: zero-coupon bonds P(t,T,0) or tenor-delta bonds P(t,T,delta)."""

    ZERO = "zero"
    DELTA = "delta"


CURVE_ORDER: Tuple[CurveId, ...] = (CurveId.ZERO, CurveId.DELTA)


class ModelKind(str, Enum):
    SINGLE = "single"
    MULTI = "multi"


class OptimizerMethod(str, Enum):
    CG = "cg"
    ADAM = "adam"


class SplitStrategy(str, Enum):
    PREFIX = "prefix"
    RANDOM = "random"


# =============================================================================
# MODEL PARAMETERS
# =============================================================================


class SingleCurveParams(BaseModel):
    """Hyper-parameters (r0, kappa, theta, sigma) of the one-factor Vasicek model.

    sigma = 0 is accepted as the deterministic limit of the model.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    names: ClassVar[Tuple[str, ...]] = ("r0", "kappa", "theta", "sigma")

    r0: float
    kappa: float = Field(gt=0.0)
    theta: float
    sigma: float = Field(ge=0.0)

    def to_vector(self) -> np.ndarray:
        return np.array([self.r0, self.kappa, self.theta, self.sigma], dtype=float)

    @classmethod
    def from_vector(cls, vector: Any) -> "SingleCurveParams":
        r0, kappa, theta, sigma = (float(v) for v in vector)
        return cls(r0=r0, kappa=kappa, theta=theta, sigma=sigma)

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.names, self.to_vector().tolist()))


class MultiCurveParams(BaseModel):
    """Two-factor Vasicek parameters plus the fixed Brownian correlation rho."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    names: ClassVar[Tuple[str, ...]] = (
        "r0_1",
        "kappa_1",
        "theta_1",
        "sigma_1",
        "r0_2",
        "kappa_2",
        "theta_2",
        "sigma_2",
    )

    factor1: SingleCurveParams
    factor2: SingleCurveParams
    rho: float = Field(default=0.0, ge=-1.0, le=1.0)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.factor1.to_vector(), self.factor2.to_vector()])

    @classmethod
    def from_vector(cls, vector: Any, rho: float = 0.0) -> "MultiCurveParams":
        values = np.asarray(vector, dtype=float)
        return cls(
            factor1=SingleCurveParams.from_vector(values[:4]),
            factor2=SingleCurveParams.from_vector(values[4:8]),
            rho=rho,
        )

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.names, self.to_vector().tolist()))


CurveParams = Union[SingleCurveParams, MultiCurveParams]

SINGLE_CURVE_TRUTH = SingleCurveParams(r0=0.5, kappa=2.0, theta=0.1, sigma=0.2)
MULTI_CURVE_TRUTH = MultiCurveParams(
    factor1=SingleCurveParams(r0=0.5, kappa=2.0, theta=0.1, sigma=0.2),
    factor2=SingleCurveParams(r0=0.7, kappa=0.5, theta=0.03, sigma=0.8),
    rho=0.0,
)


def model_kind_of(params: CurveParams) -> ModelKind:
    return ModelKind.MULTI if isinstance(params, MultiCurveParams) else ModelKind.SINGLE


def parameter_names(kind: ModelKind) -> Tuple[str, ...]:
    return MultiCurveParams.names if kind == ModelKind.MULTI else SingleCurveParams.names


# =============================================================================
# GRIDS, SERIES AND OBSERVATIONS
# =============================================================================


class TimeGrid(BaseModel):
    """Strictly increasing observation times in [0, maturity], in years."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    points: np.ndarray
    maturity: float = Field(gt=0.0, allow_inf_nan=False)

    @field_validator("points", mode="before")
    @classmethod
    def _coerce_points(cls, value: Any) -> np.ndarray:
        return _frozen_array(value).ravel()

    @model_validator(mode="after")
    def _check_points(self) -> "TimeGrid":
        points = self.points
        if points.size == 0:
            raise ValueError("time grid needs at least one point")
        if not np.all(np.isfinite(points)):
            raise ValueError("time grid contains non-finite values")
        if np.any(np.diff(points) <= 0.0):
            raise ValueError("time grid must be strictly increasing")
        if points[0] < 0.0 or points[-1] > self.maturity:
            raise ValueError(f"time grid must lie in [0, {self.maturity}]")
        return self

    @classmethod
    def uniform(cls, n_points: int, maturity: float = 1.0) -> "TimeGrid":
        """n_points equidistant times maturity/n, ..., maturity."""
        if n_points < 1:
            raise ValueError("n_points must be positive")
        points = maturity * np.arange(1, n_points + 1, dtype=float) / n_points
        return cls(points=points, maturity=maturity)

    @property
    def size(self) -> int:
        return int(self.points.size)


class SimulatedSeries(BaseModel):
    """Synthetic log-bond price series on one grid, one vector per curve."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    curves: Dict[CurveId, np.ndarray]
    short_rates: Optional[np.ndarray] = None
    seed: Optional[int] = None

    @field_validator("curves", mode="before")
    @classmethod
    def _coerce_curves(cls, value: Any) -> Dict[CurveId, np.ndarray]:
        return {CurveId(key): _frozen_array(vec).ravel() for key, vec in dict(value).items()}

    @field_validator("short_rates", mode="before")
    @classmethod
    def _coerce_rates(cls, value: Any) -> Optional[np.ndarray]:
        return None if value is None else _frozen_array(value)

    @model_validator(mode="after")
    def _check_lengths(self) -> "SimulatedSeries":
        if not self.curves:
            raise ValueError("series needs at least one curve")
        for curve, values in self.curves.items():
            if values.size != self.grid.size:
                raise ValueError(f"curve {curve.value} has {values.size} values for {self.grid.size} times")
            if not np.all(np.isfinite(values)):
                raise ValueError(f"curve {curve.value} contains non-finite values")
        return self


class ObservationSet(BaseModel):
    """Observed log-bond prices per curve on a shared grid, plus noise variance."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    values: Dict[CurveId, np.ndarray]
    noise_var: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)

    @field_validator("values", mode="before")
    @classmethod
    def _coerce_values(cls, value: Any) -> Dict[CurveId, np.ndarray]:
        return {CurveId(key): _frozen_array(vec).ravel() for key, vec in dict(value).items()}

    @model_validator(mode="after")
    def _check_values(self) -> "ObservationSet":
        if not self.values:
            raise ValueError("observation set needs at least one curve")
        for curve, values in self.values.items():
            if values.size != self.grid.size:
                raise ValueError(f"curve {curve.value} has {values.size} values for {self.grid.size} times")
            if not np.all(np.isfinite(values)):
                raise ValueError(f"curve {curve.value} contains non-finite values")
        return self

    @classmethod
    def from_series(cls, series: SimulatedSeries, noise_var: float = 0.0) -> "ObservationSet":
        return cls(grid=series.grid, values=dict(series.curves), noise_var=noise_var)

    @property
    def curves(self) -> Tuple[CurveId, ...]:
        return tuple(curve for curve in CURVE_ORDER if curve in self.values)

    @property
    def maturity(self) -> float:
        return self.grid.maturity

    @property
    def index(self) -> List[Tuple[float, CurveId]]:
        """Ordered (time, curve) labels: the Zero block first, then the Delta block."""
        times = self.grid.points.tolist()
        return [(t, curve) for curve in self.curves for t in times]

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.values[curve] for curve in self.curves])

    @property
    def size(self) -> int:
        return self.grid.size * len(self.values)

    def take(self, positions: Any) -> "ObservationSet":
        """Restrict to the given grid positions (kept in time order)."""
        positions = np.sort(np.asarray(positions, dtype=int))
        grid = TimeGrid(points=self.grid.points[positions], maturity=self.grid.maturity)
        values = {curve: vec[positions] for curve, vec in self.values.items()}
        return ObservationSet(grid=grid, values=values, noise_var=self.noise_var)


# =============================================================================
# GAUSSIAN BELIEFS AND PREDICTION
# =============================================================================

Label = Tuple[float, CurveId]


class GaussianBelief(BaseModel):
    """Mean and covariance of a finite-dimensional Gaussian (prior or posterior)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mean: np.ndarray
    cov: np.ndarray
    labels: Tuple[Label, ...] = ()

    @field_validator("mean", "cov", mode="before")
    @classmethod
    def _coerce(cls, value: Any) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_shapes(self) -> "GaussianBelief":
        m = self.mean.size
        if self.mean.ndim != 1:
            raise ValueError("mean must be a vector")
        if self.cov.shape != (m, m):
            raise ValueError(f"covariance shape {self.cov.shape} does not match mean length {m}")
        if self.labels and len(self.labels) != m:
            raise ValueError("labels must match the mean length")
        if m:
            scale = float(np.max(np.abs(self.cov)))
            if float(np.max(np.abs(self.cov - self.cov.T))) > 1e-12 * scale:
                raise ValueError("covariance is not symmetric")
        return self

    @property
    def variance(self) -> np.ndarray:
        return np.diag(self.cov).copy()

    @property
    def size(self) -> int:
        return int(self.mean.size)


class PredictionRequest(BaseModel):
    """Ordered (time, curve) targets to predict."""

    model_config = ConfigDict(frozen=True)

    targets: Tuple[Label, ...] = Field(min_length=1)
    maturity: Optional[float] = Field(default=None, gt=0.0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_times(self) -> "PredictionRequest":
        for t, _ in self.targets:
            if not np.isfinite(t) or t < 0.0:
                raise ValueError(f"invalid target time {t}")
        return self

    @classmethod
    def on_times(
        cls,
        times: Any,
        curves: Tuple[CurveId, ...] = (CurveId.ZERO,),
        maturity: Optional[float] = None,
    ) -> "PredictionRequest":
        times = np.asarray(times, dtype=float).ravel().tolist()
        return cls(targets=tuple((t, curve) for curve in curves for t in times), maturity=maturity)


class BandRow(BaseModel):
    t: float
    curve: CurveId
    mean: float
    lower: float
    upper: float


# =============================================================================
# OPTIMIZATION
# =============================================================================


class InitRanges(BaseModel):
    """Uniform sampling intervals (constrained space) for the random initialization.

    The same ranges apply to both factors of the multi-curve model.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    r0: Tuple[float, float] = (0.0, 1.0)
    kappa: Tuple[float, float] = (0.1, 5.0)
    theta: Tuple[float, float] = (0.0, 0.5)
    sigma: Tuple[float, float] = (0.05, 1.0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "InitRanges":
        for name in ("r0", "kappa", "theta", "sigma"):
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"empty init range for {name}: [{low}, {high}]")
        if self.kappa[0] <= 0.0 or self.sigma[0] <= 0.0:
            raise ValueError("kappa and sigma init ranges must be strictly positive")
        return self

    def for_kind(self, kind: ModelKind) -> List[Tuple[float, float]]:
        per_factor = [self.r0, self.kappa, self.theta, self.sigma]
        return per_factor * (2 if kind == ModelKind.MULTI else 1)


class OptimizerConfig(BaseModel):
    """Settings of the CG and Adam optimizers."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    method: OptimizerMethod = OptimizerMethod.CG
    max_iters: int = Field(default=1000, ge=1)
    grad_tol: float = Field(default=1e-5, ge=0.0)
    f_tol: float = Field(default=1e-12, ge=0.0)
    learning_rate: float = Field(default=0.05, gt=0.0)
    epochs: int = Field(default=700, ge=1)
    wolfe_c1: float = Field(default=1e-4, gt=0.0, lt=1.0)
    wolfe_c2: float = Field(default=0.1, gt=0.0, lt=1.0)
    max_line_search: int = Field(default=25, ge=1)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    fd_step: float = Field(default=1e-6, gt=0.0)
    init_ranges: InitRanges = Field(default_factory=InitRanges)
    seed: int = Field(default=0, ge=0)
    record_trace: bool = True

    @model_validator(mode="after")
    def _check_wolfe(self) -> "OptimizerConfig":
        if not self.wolfe_c1 < self.wolfe_c2:
            raise ValueError("Wolfe constants must satisfy 0 < c1 < c2 < 1")
        return self


class CalibrationResult(BaseModel):
    """Outcome of one hyper-parameter optimization."""

    model_config = ConfigDict(frozen=True)

    params: CurveParams
    method: OptimizerMethod
    final_nll: float = Field(allow_inf_nan=False)
    iterations: int = Field(ge=0)
    converged: bool
    grad_norm_final: float
    jitter_used: float = Field(default=0.0, ge=0.0)
    message: str = ""
    trace: Optional[List[Tuple[float, float]]] = None


# =============================================================================
# METRICS
# =============================================================================


class SplitSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    train_fraction: float = Field(default=0.7, gt=0.0, lt=1.0)
    strategy: SplitStrategy = SplitStrategy.PREFIX
    seed: int = Field(default=0, ge=0)


class EvalReport(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    smse: float = Field(ge=0.0)
    msll: float
    residuals: List[float]
    predictive_variances: List[float]
    n_train: int
    n_validation: int


# =============================================================================
# EXPERIMENTS
# =============================================================================


class ExperimentConfig(BaseModel):
    """One batch of independent simulate -> calibrate runs."""

    model_config = ConfigDict(frozen=True)

    model_kind: ModelKind = ModelKind.SINGLE
    true_params: CurveParams
    n_runs: int = Field(default=100, ge=1)
    n_points: int = Field(default=DAYS_PER_YEAR, ge=2)
    maturity: float = Field(default=1.0, gt=0.0)
    noise_var: float = Field(default=0.0, ge=0.0)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    master_seed: int = Field(default=0, ge=0)
    output_dir: Optional[Path] = None
    curves: Tuple[CurveId, ...] = ()
    threads: Optional[int] = Field(default=None, ge=1)
    bins: int = Field(default=50, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _default_curves(cls, data: Any) -> Any:
        if isinstance(data, dict) and not data.get("curves"):
            kind = ModelKind(data.get("model_kind", ModelKind.SINGLE))
            data = dict(data)
            data["curves"] = CURVE_ORDER if kind == ModelKind.MULTI else (CurveId.ZERO,)
        return data

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        if model_kind_of(self.true_params) != self.model_kind:
            raise ValueError(f"true_params do not match model_kind={self.model_kind.value}")
        if self.model_kind == ModelKind.SINGLE and CurveId.DELTA in self.curves:
            raise ValueError("the delta curve needs multi-curve parameters")
        return self

    @classmethod
    def published_defaults(cls, model_kind: ModelKind = ModelKind.SINGLE, **overrides: Any) -> "ExperimentConfig":
        """Truth and grid of the published batch experiments (250 or 2x125 points)."""
        kind = ModelKind(model_kind)
        data: Dict[str, Any] = {
            "model_kind": kind,
            "true_params": MULTI_CURVE_TRUTH if kind == ModelKind.MULTI else SINGLE_CURVE_TRUTH,
            "n_points": DAYS_PER_YEAR // 2 if kind == ModelKind.MULTI else DAYS_PER_YEAR,
        }
        data.update(overrides)
        return cls(**data)


class Histogram(BaseModel):
    edges: List[float]
    counts: List[int]


class ParameterStats(BaseModel):
    mean: float
    stdev: float
    histogram: Histogram


class RunRecord(BaseModel):
    """Result of one batch run; failures carry the error message instead."""

    run_id: int
    seed: int
    result: Optional[CalibrationResult] = None
    error: Optional[str] = None


class BatchSummary(BaseModel):
    """Learned-parameter statistics over a batch of calibrations.

    ``parameters`` aggregates converged runs only; ``unfiltered_*`` covers every
    run that produced a result.
    """

    parameter_names: List[str]
    n_runs: int
    n_included: int
    n_excluded: int
    n_failed: int = 0
    convergence_rate: float
    parameters: Dict[str, ParameterStats]
    unfiltered_mean: Dict[str, float]
    unfiltered_stdev: Dict[str, float]
    true_params: Optional[Dict[str, float]] = None
    method: Optional[OptimizerMethod] = None
    learning_rate: Optional[float] = None
