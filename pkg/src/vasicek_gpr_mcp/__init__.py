"""
Vasicek GPR

Calibration of single- and multi-curve Vasicek short-rate models by Gaussian
process regression on log-bond prices, with a command-line harness and an
MCP server.
"""

__version__ = "0.1.0"

from .affine import cov_log_bond, mean_log_bond
from .errors import (
    ConfigurationError,
    DomainError,
    FactorizationError,
    SeriesParseError,
    VasicekGPRError,
)
from .gpr import assemble_prior, confidence_band, log_marginal_likelihood, posterior
from .harness import predict_band, run_experiment, summarize
from .metrics import evaluate, msll, smse, split
from .models import (
    CalibrationResult,
    CurveId,
    ExperimentConfig,
    GaussianBelief,
    ModelKind,
    MultiCurveParams,
    ObservationSet,
    OptimizerConfig,
    PredictionRequest,
    SingleCurveParams,
    TimeGrid,
)
from .optimize import calibrate, minimize_adam, minimize_cg
from .simulator import make_rng, simulate_log_bonds

__all__ = [
    "__version__",
    "VasicekGPRError",
    "DomainError",
    "ConfigurationError",
    "FactorizationError",
    "SeriesParseError",
    "CurveId",
    "ModelKind",
    "SingleCurveParams",
    "MultiCurveParams",
    "TimeGrid",
    "ObservationSet",
    "GaussianBelief",
    "PredictionRequest",
    "OptimizerConfig",
    "CalibrationResult",
    "ExperimentConfig",
    "mean_log_bond",
    "cov_log_bond",
    "make_rng",
    "simulate_log_bonds",
    "assemble_prior",
    "log_marginal_likelihood",
    "posterior",
    "confidence_band",
    "calibrate",
    "minimize_cg",
    "minimize_adam",
    "split",
    "smse",
    "msll",
    "evaluate",
    "run_experiment",
    "summarize",
    "predict_band",
]
