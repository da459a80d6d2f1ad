"""Experiment configuration, presets, fitting, run directories and the command line."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .fitting import FitError, FitReport, fit_exponential, fit_power
from .presets import PRESETS, build_profile, get_preset
from .runner import RunResult, execute

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "FitError",
    "FitReport",
    "PRESETS",
    "RunResult",
    "build_profile",
    "execute",
    "fit_exponential",
    "fit_power",
    "get_preset",
    "load_config",
    "parse_config",
]
