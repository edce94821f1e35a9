"""
Calibration Manager Portmanteau

Hyper-parameter calibration by marginal-likelihood maximization:
- single calibrations to a supplied series
- small reproducible batches of simulate -> calibrate runs
"""

import asyncio
import logging
from typing import Any, Dict, List, Optional

from ..harness import run_experiment
from ..models import (
    CurveId,
    ExperimentConfig,
    ModelKind,
    ObservationSet,
    OptimizerConfig,
    TimeGrid,
)
from ..optimize import calibrate
from ..series_io import params_from_dict

logger = logging.getLogger(__name__)

MAX_BATCH_RUNS = 50


def observations_from_payload(
    times: List[float], curves: Dict[str, List[float]], maturity: float = 1.0, noise_var: float = 0.0
) -> ObservationSet:
    return ObservationSet(grid=TimeGrid(points=times, maturity=maturity), values=curves, noise_var=noise_var)


def calibrate_payload(
    times: List[float],
    curves: Dict[str, List[float]],
    maturity: float = 1.0,
    model: Optional[str] = None,
    method: str = "cg",
    learning_rate: float = 0.05,
    epochs: int = 700,
    max_iters: int = 1000,
    seed: int = 0,
    noise_var: float = 0.0,
    rho: float = 0.0,
    start: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    obs = observations_from_payload(times, curves, maturity, noise_var)
    if model is None:
        kind = ModelKind.MULTI if CurveId.DELTA in obs.values else ModelKind.SINGLE
    else:
        kind = ModelKind(model)
    config = OptimizerConfig(
        method=method, learning_rate=learning_rate, epochs=epochs, max_iters=max_iters, seed=seed, record_trace=False
    )
    x0 = params_from_dict(start) if start else None
    result = calibrate(obs, kind, config, x0=x0, rho=rho)
    return {
        "success": True,
        "params": result.params.as_dict(),
        "result": result.model_dump(mode="json", exclude={"trace"}),
    }


def batch_payload(
    model: str = "single",
    method: str = "cg",
    n_runs: int = 4,
    n_points: Optional[int] = None,
    master_seed: int = 0,
    learning_rate: float = 0.05,
    epochs: int = 700,
    bins: int = 50,
    threads: int = 1,
) -> Dict[str, Any]:
    if not 1 <= n_runs <= MAX_BATCH_RUNS:
        raise ValueError(f"n_runs must lie in [1, {MAX_BATCH_RUNS}] for interactive batches, got {n_runs}")
    overrides: Dict[str, Any] = {
        "n_runs": n_runs,
        "master_seed": master_seed,
        "bins": bins,
        "optimizer": OptimizerConfig(method=method, learning_rate=learning_rate, epochs=epochs, record_trace=False),
    }
    if n_points is not None:
        overrides["n_points"] = n_points
    config = ExperimentConfig.published_defaults(ModelKind(model), **overrides)
    summary = run_experiment(config, threads=threads)
    return {"success": True, "summary": summary.model_dump(mode="json")}


def register_calibration_tools(app):
    """Register all calibration manager tools with the MCP server."""

    @app.tool()
    async def calibrate_series(
        times: List[float],
        curves: Dict[str, List[float]],
        maturity: float = 1.0,
        model: Optional[str] = None,
        method: str = "cg",
        learning_rate: float = 0.05,
        epochs: int = 700,
        max_iters: int = 1000,
        seed: int = 0,
        noise_var: float = 0.0,
        rho: float = 0.0,
        start: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        """
        Calibrate Vasicek parameters to an observed log-bond price series.

        Args:
            times: Strictly increasing observation times in [0, maturity]
            curves: Observed log prices per curve, e.g. {"zero": [...], "delta": [...]}
            maturity: Bond maturity T in years
            model: "single" or "multi" (default: multi when a delta curve is given)
            method: "cg" (conjugate gradient) or "adam"
            learning_rate: Adam learning rate
            epochs: Adam epochs
            max_iters: Conjugate gradient iteration limit
            seed: Seed of the random start point
            noise_var: Observation noise variance
            rho: Fixed Brownian correlation of the multi-curve factors
            start: Optional start parameters instead of a random draw

        Returns:
            Learned parameters, final negative log likelihood and optimizer diagnostics
        """
        try:
            payload = await asyncio.to_thread(
                calibrate_payload,
                times,
                curves,
                maturity,
                model,
                method,
                learning_rate,
                epochs,
                max_iters,
                seed,
                noise_var,
                rho,
                start,
            )
            logger.info(f"Calibrated {len(times)}-point series with {method}")
            return payload
        except Exception as e:
            logger.error(f"Failed to calibrate series: {e}")
            return {"error": str(e)}

    @app.tool()
    async def run_calibration_batch(
        model: str = "single",
        method: str = "cg",
        n_runs: int = 4,
        n_points: Optional[int] = None,
        master_seed: int = 0,
        learning_rate: float = 0.05,
        epochs: int = 700,
        bins: int = 50,
        threads: int = 1,
    ) -> Dict[str, Any]:
        """
        Run a small batch of simulate -> calibrate cycles with the published truth.

        Args:
            model: "single" or "multi"
            method: "cg" or "adam"
            n_runs: Number of runs (at most 50)
            n_points: Grid size (default: 250 single, 125 multi)
            master_seed: Run i uses seed master_seed XOR i
            learning_rate: Adam learning rate
            epochs: Adam epochs
            bins: Histogram bins per parameter
            threads: Worker processes

        Returns:
            Batch summary with per-parameter mean, stdev and histogram
        """
        try:
            payload = await asyncio.to_thread(
                batch_payload, model, method, n_runs, n_points, master_seed, learning_rate, epochs, bins, threads
            )
            logger.info(f"Completed {model}/{method} batch of {n_runs} runs")
            return payload
        except Exception as e:
            logger.error(f"Failed to run calibration batch: {e}")
            return {"error": str(e)}
