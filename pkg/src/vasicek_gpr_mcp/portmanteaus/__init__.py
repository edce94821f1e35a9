"""
Portmanteaus Package

Tool collections of the vasicek-gpr-mcp server, one per area:
- simulation_manager: synthetic log-bond price series
- calibration_manager: single calibrations and small batch experiments
- prediction_manager: posterior bands and prediction quality metrics
"""

from .calibration_manager import register_calibration_tools
from .prediction_manager import register_prediction_tools
from .simulation_manager import register_simulation_tools

__all__ = [
    "register_simulation_tools",
    "register_calibration_tools",
    "register_prediction_tools",
]
