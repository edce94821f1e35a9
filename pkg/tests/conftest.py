"""Shared fixtures for the Vasicek GPR tests."""

import pytest

from vasicek_gpr_mcp.models import (
    MULTI_CURVE_TRUTH,
    SINGLE_CURVE_TRUTH,
    CurveId,
    MultiCurveParams,
    ObservationSet,
    SingleCurveParams,
    TimeGrid,
)
from vasicek_gpr_mcp.simulator import make_rng, simulate_log_bonds


@pytest.fixture
def single_params() -> SingleCurveParams:
    return SINGLE_CURVE_TRUTH


@pytest.fixture
def multi_params() -> MultiCurveParams:
    return MULTI_CURVE_TRUTH


@pytest.fixture
def correlated_params() -> MultiCurveParams:
    return MULTI_CURVE_TRUTH.model_copy(update={"rho": 0.6})


@pytest.fixture
def small_grid() -> TimeGrid:
    return TimeGrid.uniform(10, 1.0)


@pytest.fixture
def single_obs(single_params) -> ObservationSet:
    grid = TimeGrid.uniform(20, 1.0)
    series = simulate_log_bonds(single_params, [CurveId.ZERO], grid, make_rng(7), seed=7)
    return ObservationSet.from_series(series)


@pytest.fixture
def multi_obs(multi_params) -> ObservationSet:
    grid = TimeGrid.uniform(12, 1.0)
    series = simulate_log_bonds(multi_params, [CurveId.ZERO, CurveId.DELTA], grid, make_rng(11), seed=11)
    return ObservationSet.from_series(series)
