"""
Tests for Vasicek GPR MCP Server

Tests tool registration, the core tools and the portmanteau payloads, both
directly and through an in-memory MCP client.
"""

import asyncio
import json

import pytest
from fastmcp import Client

from vasicek_gpr_mcp import __version__
from vasicek_gpr_mcp.portmanteaus.calibration_manager import batch_payload, calibrate_payload
from vasicek_gpr_mcp.portmanteaus.prediction_manager import evaluate_payload, predict_payload
from vasicek_gpr_mcp.portmanteaus.simulation_manager import simulate_payload
from vasicek_gpr_mcp.server import CORE_TOOLS, PORTMANTEAU_INFO, SERVER_NAME, app

ALL_TOOLS = {
    "get_server_status",
    "get_portmanteau_info",
    "simulate_log_bond_series",
    "calibrate_series",
    "run_calibration_batch",
    "predict_log_bonds",
    "evaluate_prediction",
}


async def _list_tools():
    async with Client(app) as client:
        return await client.list_tools()


async def _call(name, arguments=None):
    async with Client(app) as client:
        result = await client.call_tool(name, arguments or {})
        return json.loads(result.content[0].text)


def call_tool(name, arguments=None):
    return asyncio.run(_call(name, arguments))


@pytest.fixture
def small_series():
    return simulate_payload(n_points=15, seed=21)["series"]


class TestServer:
    """Test server initialization and the core tools."""

    def test_app_creation(self):
        """Test that the FastMCP app is created correctly."""
        assert app.name == SERVER_NAME == "vasicek-gpr-mcp"

    def test_all_tools_registered(self):
        """Test that every portmanteau tool is exposed."""
        tools = asyncio.run(_list_tools())
        assert {tool.name for tool in tools} == ALL_TOOLS

    def test_registry_matches_tools(self):
        """Test that PORTMANTEAU_INFO lists exactly the registered tools."""
        listed = set(CORE_TOOLS) | {tool for info in PORTMANTEAU_INFO.values() for tool in info["tools"]}
        assert listed == ALL_TOOLS

    def test_server_status_tool(self):
        """Test the get_server_status tool."""
        result = call_tool("get_server_status")
        assert result["status"] == "healthy"
        assert result["service"] == "vasicek-gpr-mcp"
        assert result["version"] == __version__
        assert result["portmanteaus"] == ["simulation_manager", "calibration_manager", "prediction_manager"]
        assert result["tools_count"] == 7
        assert {"python", "numpy", "scipy"} <= set(result["runtime"])

    @pytest.mark.parametrize(
        "portmanteau,expected_tools",
        [
            ("simulation_manager", 1),
            ("calibration_manager", 2),
            ("prediction_manager", 2),
        ],
    )
    def test_portmanteau_tool_counts(self, portmanteau, expected_tools):
        """Test that each portmanteau has the correct number of tools."""
        result = call_tool("get_portmanteau_info", {"portmanteau": portmanteau})
        assert result["tools_count"] == expected_tools
        assert len(result["tools"]) == expected_tools
        assert "description" in result
        assert "categories" in result

    def test_portmanteau_info_invalid(self):
        """Test get_portmanteau_info with an invalid portmanteau."""
        result = call_tool("get_portmanteau_info", {"portmanteau": "invalid_portmanteau"})
        assert "error" in result
        assert len(result["available_portmanteaus"]) == 3


class TestSimulationManager:
    """Test the simulation portmanteau."""

    def test_simulate_payload(self):
        payload = simulate_payload(model="multi", n_points=10, seed=4)
        assert payload["success"] is True
        assert payload["model"] == "multi"
        assert set(payload["series"]["curves"]) == {"zero", "delta"}
        assert payload["series"]["seed"] == 4

    def test_same_seed_same_series(self):
        assert simulate_payload(n_points=10, seed=8) == simulate_payload(n_points=10, seed=8)

    def test_custom_params(self):
        payload = simulate_payload(n_points=5, params={"r0": 0.1, "kappa": 1.0, "theta": 0.05, "sigma": 0.0})
        assert payload["series"]["params"]["sigma"] == 0.0

    def test_too_many_points(self):
        with pytest.raises(ValueError):
            simulate_payload(n_points=5000)

    def test_tool_reports_errors(self):
        result = call_tool("simulate_log_bond_series", {"model": "single", "curves": ["delta"]})
        assert "error" in result

    def test_tool(self):
        result = call_tool("simulate_log_bond_series", {"n_points": 6, "seed": 2})
        assert result["success"] is True
        assert len(result["series"]["t"]) == 6


class TestCalibrationManager:
    """Test the calibration portmanteau."""

    def test_calibrate_payload(self, small_series):
        payload = calibrate_payload(
            small_series["t"], small_series["curves"], method="adam", epochs=5, seed=1
        )
        assert payload["success"] is True
        assert set(payload["params"]) == {"r0", "kappa", "theta", "sigma"}
        assert payload["result"]["iterations"] == 5

    def test_calibrate_from_start(self, small_series, single_params):
        payload = calibrate_payload(
            small_series["t"], small_series["curves"], max_iters=5, start=single_params.as_dict()
        )
        assert payload["result"]["method"] == "cg"

    def test_batch_payload(self):
        payload = batch_payload(n_runs=2, n_points=10, method="adam", epochs=3, bins=3, master_seed=6)
        summary = payload["summary"]
        assert summary["n_runs"] == 2
        assert summary["learning_rate"] == 0.05

    def test_batch_size_limit(self):
        with pytest.raises(ValueError):
            batch_payload(n_runs=51)

    def test_tool_reports_errors(self):
        result = call_tool("calibrate_series", {"times": [0.5, 0.25], "curves": {"zero": [-0.1, -0.2]}})
        assert "error" in result


class TestPredictionManager:
    """Test the prediction portmanteau."""

    def test_predict_payload(self, small_series, single_params):
        payload = predict_payload(
            small_series["t"], small_series["curves"], single_params.as_dict(), prefix=5, target_times=[0.5, 0.9]
        )
        assert payload["level"] == 0.95
        assert [row["t"] for row in payload["band"]] == [0.5, 0.9]
        assert all(row["curve"] == "zero" for row in payload["band"])

    def test_evaluate_payload(self, small_series, single_params):
        payload = evaluate_payload(small_series["t"], small_series["curves"], single_params.as_dict())
        report = payload["report"]
        assert report["n_train"] + report["n_validation"] == 15
        assert report["smse"] >= 0.0

    def test_tool(self, small_series, single_params):
        result = call_tool(
            "predict_log_bonds",
            {
                "times": small_series["t"],
                "curves": small_series["curves"],
                "params": single_params.as_dict(),
                "prefix": 0,
            },
        )
        assert len(result["band"]) == 15

    def test_tool_reports_errors(self, small_series):
        result = call_tool(
            "evaluate_prediction",
            {"times": small_series["t"], "curves": small_series["curves"], "params": {"r0": 0.5}},
        )
        assert "error" in result
