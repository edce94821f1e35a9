#!/usr/bin/env python3
"""
Vasicek GPR MCP Server

Exposes simulation, calibration and prediction of single- and multi-curve
Vasicek models through consolidated portmanteau tools.
"""

import logging
import platform
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import scipy
from fastmcp import FastMCP

from . import __version__
from .config import env_log_level, load_environment
from .portmanteaus.calibration_manager import register_calibration_tools
from .portmanteaus.prediction_manager import register_prediction_tools
from .portmanteaus.simulation_manager import register_simulation_tools
from .transport import create_argument_parser, run_server

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)

SERVER_NAME = "vasicek-gpr-mcp"

app = FastMCP(name=SERVER_NAME, version=__version__)

PORTMANTEAU_INFO: Dict[str, Dict[str, Any]] = {
    "simulation_manager": {
        "description": "Exact simulation of single- and multi-curve log-bond price series",
        "categories": ["simulation"],
        "tools": ["simulate_log_bond_series"],
    },
    "calibration_manager": {
        "description": "Marginal-likelihood calibration with conjugate gradient or Adam",
        "categories": ["calibration", "experiments"],
        "tools": ["calibrate_series", "run_calibration_batch"],
    },
    "prediction_manager": {
        "description": "Posterior prediction bands and SMSE/MSLL evaluation",
        "categories": ["prediction", "metrics"],
        "tools": ["predict_log_bonds", "evaluate_prediction"],
    },
}

CORE_TOOLS: List[str] = ["get_server_status", "get_portmanteau_info"]


# =============================================================================
# CORE TOOLS
# =============================================================================


@app.tool()
async def get_server_status() -> Dict[str, Any]:
    """
    Get server status and runtime information.
    """
    return {
        "status": "healthy",
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "service": SERVER_NAME,
        "version": __version__,
        "runtime": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "portmanteaus": list(PORTMANTEAU_INFO),
        "tools_count": len(CORE_TOOLS) + sum(len(info["tools"]) for info in PORTMANTEAU_INFO.values()),
    }


@app.tool()
async def get_portmanteau_info(portmanteau: str) -> Dict[str, Any]:
    """
    Get detailed information about a specific portmanteau.

    Args:
        portmanteau: Name of the portmanteau ("simulation_manager", "calibration_manager", "prediction_manager")

    Returns:
        Description and tool list of the portmanteau
    """
    if portmanteau not in PORTMANTEAU_INFO:
        return {
            "error": f"Unknown portmanteau: {portmanteau}",
            "available_portmanteaus": list(PORTMANTEAU_INFO),
        }
    info = dict(PORTMANTEAU_INFO[portmanteau])
    info["tools_count"] = len(info["tools"])
    return info


# =============================================================================
# PORTMANTEAU REGISTRATION
# =============================================================================

register_simulation_tools(app)
register_calibration_tools(app)
register_prediction_tools(app)

logger.debug("All portmanteau tools registered")


# =============================================================================
# MAIN ENTRY POINT
# =============================================================================


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Main entry point for running the MCP server."""
    load_environment()
    logging.getLogger().setLevel(env_log_level())
    args = create_argument_parser(SERVER_NAME).parse_args(argv)
    run_server(app, args, server_name=SERVER_NAME)


if __name__ == "__main__":
    main()
