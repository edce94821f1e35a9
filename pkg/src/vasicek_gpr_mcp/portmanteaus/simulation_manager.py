"""
Simulation Manager Portmanteau

Synthetic log-bond price series from the single- or multi-curve Vasicek model,
simulated with exact OU transitions from a seeded generator.
"""

import asyncio
import logging
from typing import Any, Dict, List, Optional

from ..models import (
    DAYS_PER_YEAR,
    MULTI_CURVE_TRUTH,
    SINGLE_CURVE_TRUTH,
    CurveId,
    ModelKind,
    TimeGrid,
    model_kind_of,
)
from ..series_io import params_from_dict, series_to_dict
from ..simulator import make_rng, simulate_log_bonds

logger = logging.getLogger(__name__)

MAX_POINTS = 2000


def simulate_payload(
    model: str = "single",
    n_points: Optional[int] = None,
    maturity: float = 1.0,
    seed: int = 0,
    curves: Optional[List[str]] = None,
    params: Optional[Dict[str, Any]] = None,
    noise_var: float = 0.0,
) -> Dict[str, Any]:
    true_params = params_from_dict(params) if params else None
    kind = model_kind_of(true_params) if true_params else ModelKind(model)
    if true_params is None:
        true_params = MULTI_CURVE_TRUTH if kind == ModelKind.MULTI else SINGLE_CURVE_TRUTH
    if n_points is None:
        n_points = DAYS_PER_YEAR // 2 if kind == ModelKind.MULTI else DAYS_PER_YEAR
    if not 1 <= n_points <= MAX_POINTS:
        raise ValueError(f"n_points must lie in [1, {MAX_POINTS}], got {n_points}")
    if curves:
        requested = [CurveId(c) for c in curves]
    else:
        requested = [CurveId.ZERO, CurveId.DELTA] if kind == ModelKind.MULTI else [CurveId.ZERO]

    grid = TimeGrid.uniform(n_points, maturity)
    series = simulate_log_bonds(true_params, requested, grid, make_rng(seed), seed=seed, noise_var=noise_var)
    return {"success": True, "model": kind.value, "series": series_to_dict(series, true_params)}


def register_simulation_tools(app):
    """Register all simulation manager tools with the MCP server."""

    @app.tool()
    async def simulate_log_bond_series(
        model: str = "single",
        n_points: Optional[int] = None,
        maturity: float = 1.0,
        seed: int = 0,
        curves: Optional[List[str]] = None,
        params: Optional[Dict[str, Any]] = None,
        noise_var: float = 0.0,
    ) -> Dict[str, Any]:
        """
        Simulate a log-bond price series.

        Args:
            model: "single" (zero curve) or "multi" (zero and tenor-delta curves)
            n_points: Number of equidistant observation times in (0, maturity]
                (default: 250 single, 125 multi)
            maturity: Bond maturity T in years
            seed: Generator seed; the same seed reproduces the same series
            curves: Curves to simulate, subset of ["zero", "delta"]
            params: Model parameters, e.g. {"r0": 0.5, "kappa": 2, "theta": 0.1, "sigma": 0.2}
                (default: the published truth of the chosen model)
            noise_var: Variance of i.i.d. observation noise

        Returns:
            Times, maturity, one value list per curve, parameters and seed
        """
        try:
            payload = await asyncio.to_thread(
                simulate_payload, model, n_points, maturity, seed, curves, params, noise_var
            )
            logger.info(f"Simulated {model} series with seed {seed}")
            return payload
        except Exception as e:
            logger.error(f"Failed to simulate series: {e}")
            return {"error": str(e)}
