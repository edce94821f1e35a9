"""
Prediction Manager Portmanteau

Posterior prediction of log-bond prices (smoothing and filtering) with
confidence bands, and SMSE/MSLL evaluation on a train/validation split.
"""

import asyncio
import logging
from typing import Any, Dict, List, Optional

from ..harness import predict_band
from ..metrics import evaluate
from ..models import SplitSpec
from ..series_io import params_from_dict
from .calibration_manager import observations_from_payload

logger = logging.getLogger(__name__)


def predict_payload(
    times: List[float],
    curves: Dict[str, List[float]],
    params: Dict[str, Any],
    maturity: float = 1.0,
    prefix: Optional[int] = None,
    extra_indices: Optional[List[int]] = None,
    target_times: Optional[List[float]] = None,
    level: float = 0.95,
    noise_var: float = 0.0,
) -> Dict[str, Any]:
    obs = observations_from_payload(times, curves, maturity, noise_var)
    rows = predict_band(
        params_from_dict(params),
        obs,
        obs.grid.size if prefix is None else prefix,
        target_times=target_times,
        extra_indices=extra_indices or (),
        level=level,
    )
    return {"success": True, "level": level, "band": [row.model_dump(mode="json") for row in rows]}


def evaluate_payload(
    times: List[float],
    curves: Dict[str, List[float]],
    params: Dict[str, Any],
    maturity: float = 1.0,
    train_fraction: float = 0.7,
    split: str = "prefix",
    seed: int = 0,
    noise_var: float = 0.0,
) -> Dict[str, Any]:
    obs = observations_from_payload(times, curves, maturity, noise_var)
    spec = SplitSpec(train_fraction=train_fraction, strategy=split, seed=seed)
    report = evaluate(params_from_dict(params), obs, spec)
    return {"success": True, "report": report.model_dump(mode="json")}


def register_prediction_tools(app):
    """Register all prediction manager tools with the MCP server."""

    @app.tool()
    async def predict_log_bonds(
        times: List[float],
        curves: Dict[str, List[float]],
        params: Dict[str, Any],
        maturity: float = 1.0,
        prefix: Optional[int] = None,
        extra_indices: Optional[List[int]] = None,
        target_times: Optional[List[float]] = None,
        level: float = 0.95,
        noise_var: float = 0.0,
    ) -> Dict[str, Any]:
        """
        Predict log-bond prices with a confidence band.

        Args:
            times: Observation times of the series
            curves: Log prices per curve, e.g. {"zero": [...]}
            params: Model parameters used for the prediction
            maturity: Bond maturity T in years
            prefix: Number of leading points treated as observed (default: all, 0 for the prior)
            extra_indices: Additional observed grid indices, e.g. future points
            target_times: Times to predict (default: every series time)
            level: Confidence level of the band
            noise_var: Observation noise variance

        Returns:
            One row per target with t, curve, mean, lower and upper
        """
        try:
            payload = await asyncio.to_thread(
                predict_payload, times, curves, params, maturity, prefix, extra_indices, target_times, level, noise_var
            )
            logger.info(f"Predicted {len(payload['band'])} targets at level {level}")
            return payload
        except Exception as e:
            logger.error(f"Failed to predict log bonds: {e}")
            return {"error": str(e)}

    @app.tool()
    async def evaluate_prediction(
        times: List[float],
        curves: Dict[str, List[float]],
        params: Dict[str, Any],
        maturity: float = 1.0,
        train_fraction: float = 0.7,
        split: str = "prefix",
        seed: int = 0,
        noise_var: float = 0.0,
    ) -> Dict[str, Any]:
        """
        Score predictions on a train/validation split of a series.

        Args:
            times: Observation times of the series
            curves: Log prices per curve
            params: Model parameters used for the prediction
            maturity: Bond maturity T in years
            train_fraction: Share of the times used for training
            split: "prefix" (first times train) or "random"
            seed: Seed of the random split
            noise_var: Observation noise variance

        Returns:
            SMSE, MSLL, residuals and predictive variances of the validation targets
        """
        try:
            payload = await asyncio.to_thread(
                evaluate_payload, times, curves, params, maturity, train_fraction, split, seed, noise_var
            )
            logger.info(f"Evaluated prediction: smse={payload['report']['smse']:.4g}")
            return payload
        except Exception as e:
            logger.error(f"Failed to evaluate prediction: {e}")
            return {"error": str(e)}
