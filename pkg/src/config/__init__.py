"""
Config package - Logging, system parameters and scenario files.
"""

from .system_params import SystemParams
from .scenario_config import (
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
    ScenarioConfig,
    parse_config,
    serialize_config,
)

__all__ = [
    "SystemParams",
    "ConfigError",
    "ConfigParseError",
    "ConfigValidationError",
    "ScenarioConfig",
    "parse_config",
    "serialize_config",
]
