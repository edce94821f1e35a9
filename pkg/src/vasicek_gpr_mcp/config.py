"""
Configuration loading: INI config files and environment.

Config file sections mirror the toolkit modules:

    [simulation]  model_kind, n_points, maturity, noise_var, curves,
                  r0, kappa, theta, sigma (single) or r0_1 ... sigma_2, rho (multi)
    [optimizer]   method, max_iters, grad_tol, f_tol, learning_rate, epochs,
                  wolfe_c1, wolfe_c2, max_line_search, fd_step, record_trace,
                  init_r0, init_kappa, init_theta, init_sigma  ("low, high")
    [experiment]  n_runs, master_seed, output_dir, threads, bins
    [predict]     prefix, level, extra_indices
    [jitter]      min_exponent, max_exponent

Values given on the command line override the file.  Environment variables
(optionally from a ``.env`` file): VASICEK_GPR_THREADS, VASICEK_GPR_LOG_LEVEL.
"""

import configparser
import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import ValidationError

from .errors import ConfigurationError
from .gpr import JitterPolicy
from .models import (
    MULTI_CURVE_TRUTH,
    SINGLE_CURVE_TRUTH,
    CurveParams,
    ExperimentConfig,
    InitRanges,
    ModelKind,
    MultiCurveParams,
    OptimizerConfig,
    SingleCurveParams,
)

logger = logging.getLogger(__name__)

ENV_THREADS = "VASICEK_GPR_THREADS"
ENV_LOG_LEVEL = "VASICEK_GPR_LOG_LEVEL"

_PARAM_KEYS = set(SingleCurveParams.names) | set(MultiCurveParams.names) | {"rho"}

KNOWN_KEYS: Dict[str, set] = {
    "simulation": {"model_kind", "n_points", "maturity", "noise_var", "curves"} | _PARAM_KEYS,
    "optimizer": {
        "method",
        "max_iters",
        "grad_tol",
        "f_tol",
        "learning_rate",
        "epochs",
        "wolfe_c1",
        "wolfe_c2",
        "max_line_search",
        "fd_step",
        "record_trace",
        "init_r0",
        "init_kappa",
        "init_theta",
        "init_sigma",
    },
    "experiment": {"n_runs", "master_seed", "output_dir", "threads", "bins"},
    "predict": {"prefix", "level", "extra_indices"},
    "jitter": {"min_exponent", "max_exponent"},
}

Sections = Dict[str, Dict[str, str]]


def load_environment(dotenv_path: Optional[Union[str, Path]] = None) -> None:
    """Load a .env file into the process environment without overriding set variables."""
    load_dotenv(dotenv_path=dotenv_path, override=False)


def env_threads() -> Optional[int]:
    raw = os.getenv(ENV_THREADS)
    if not raw:
        return None
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigurationError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    if threads < 1:
        raise ConfigurationError(f"{ENV_THREADS} must be positive, got {threads}")
    return threads


def env_log_level(default: str = "INFO") -> str:
    return os.getenv(ENV_LOG_LEVEL, default).upper()


def load_config(path: Optional[Union[str, Path]]) -> Sections:
    """Read an INI file into {section: {key: raw value}}; unknown sections or keys are errors."""
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigurationError(f"{path}: {e}") from None

    sections: Sections = {}
    for section in parser.sections():
        if section not in KNOWN_KEYS:
            raise ConfigurationError(f"{path}: unknown section [{section}]")
        unknown = set(parser[section]) - KNOWN_KEYS[section]
        if unknown:
            raise ConfigurationError(f"{path}: unknown keys in [{section}]: {', '.join(sorted(unknown))}")
        sections[section] = dict(parser[section])
    logger.debug(f"Loaded config {path}: sections {sorted(sections)}")
    return sections


def _pair(raw: str, key: str) -> Tuple[float, float]:
    parts = [part.strip() for part in raw.split(",")]
    if len(parts) != 2:
        raise ConfigurationError(f"{key} must be 'low, high', got {raw!r}")
    return float(parts[0]), float(parts[1])


def merged(section: Mapping[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Section values updated with every override that is not None."""
    data = dict(section)
    data.update({key: value for key, value in overrides.items() if value is not None})
    return data


def build_optimizer_config(sections: Sections, overrides: Mapping[str, Any] = {}) -> OptimizerConfig:
    data = merged(sections.get("optimizer", {}), overrides)
    ranges = {}
    for name in ("r0", "kappa", "theta", "sigma"):
        raw = data.pop(f"init_{name}", None)
        if raw is not None:
            ranges[name] = _pair(raw, f"init_{name}") if isinstance(raw, str) else tuple(raw)
    try:
        if ranges:
            data["init_ranges"] = InitRanges(**ranges)
        return OptimizerConfig(**data)
    except ValidationError as e:
        raise ConfigurationError(f"invalid optimizer settings: {e}") from None


def build_jitter_policy(sections: Sections) -> JitterPolicy:
    try:
        return JitterPolicy(**sections.get("jitter", {}))
    except ValidationError as e:
        raise ConfigurationError(f"invalid jitter settings: {e}") from None


def true_params_from(section: Mapping[str, Any], kind: ModelKind) -> CurveParams:
    """Truth of a simulation section, defaulting to the published parameter sets."""
    defaults = MULTI_CURVE_TRUTH if kind == ModelKind.MULTI else SINGLE_CURVE_TRUTH
    values = defaults.as_dict()
    values.update({key: float(value) for key, value in section.items() if key in defaults.names})
    try:
        if kind == ModelKind.MULTI:
            rho = float(section.get("rho", defaults.rho))
            return MultiCurveParams.from_vector([values[name] for name in MultiCurveParams.names], rho=rho)
        return SingleCurveParams(**values)
    except ValidationError as e:
        raise ConfigurationError(f"invalid model parameters: {e}") from None


def build_experiment_config(
    sections: Sections,
    simulation_overrides: Mapping[str, Any] = {},
    experiment_overrides: Mapping[str, Any] = {},
    optimizer_overrides: Mapping[str, Any] = {},
    true_params: Optional[CurveParams] = None,
) -> ExperimentConfig:
    simulation = merged(sections.get("simulation", {}), simulation_overrides)
    experiment = merged(sections.get("experiment", {}), experiment_overrides)
    kind = ModelKind(simulation.pop("model_kind", ModelKind.SINGLE))
    params = true_params if true_params is not None else true_params_from(simulation, kind)
    for key in _PARAM_KEYS:
        simulation.pop(key, None)

    curves = simulation.pop("curves", None)
    if isinstance(curves, str):
        curves = tuple(part.strip() for part in curves.split(",") if part.strip())
    optimizer = build_optimizer_config(sections, optimizer_overrides)
    data: Dict[str, Any] = {**simulation, **experiment, "optimizer": optimizer}
    if curves:
        data["curves"] = curves
    try:
        return ExperimentConfig.published_defaults(kind, true_params=params, **data)
    except ValidationError as e:
        raise ConfigurationError(f"invalid experiment settings: {e}") from None


__all__ = [
    "ENV_THREADS",
    "ENV_LOG_LEVEL",
    "KNOWN_KEYS",
    "load_environment",
    "env_threads",
    "env_log_level",
    "load_config",
    "merged",
    "build_optimizer_config",
    "build_jitter_policy",
    "true_params_from",
    "build_experiment_config",
]
