"""
Exception hierarchy for the Vasicek GPR toolkit.

Library functions raise these; the CLI maps them to exit codes and the MCP
tools turn them into ``{"error": ...}`` payloads.
"""

from pathlib import Path
from typing import Optional


class VasicekGPRError(Exception):
    """Base class for all toolkit errors."""


class DomainError(VasicekGPRError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigurationError(VasicekGPRError):
    """Inconsistent or unknown configuration."""


class FactorizationError(VasicekGPRError):
    """Covariance matrix could not be factorized, even at maximum jitter."""

    def __init__(self, message: str, max_jitter: float = 0.0):
        super().__init__(message)
        self.max_jitter = max_jitter


class SeriesParseError(VasicekGPRError):
    """Malformed series, band or parameter file."""

    def __init__(self, message: str, path: Optional[Path] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


__all__ = [
    "VasicekGPRError",
    "DomainError",
    "ConfigurationError",
    "FactorizationError",
    "SeriesParseError",
]
