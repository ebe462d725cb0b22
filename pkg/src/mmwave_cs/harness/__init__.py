"""Scenario simulation driver, metrics and CLI."""
from .config import ConfigError, ScenarioConfig, UserSpec, build_config, default_config, load_config
from .metrics import beam_weights, beamforming_gain, error_metric, quantize_weights
from .report import summarize, write_csv
from .scenario import MetricsRecord, RunParameters, run_parameters, run_scenario

__all__ = [
    "ConfigError", "MetricsRecord", "RunParameters", "ScenarioConfig", "UserSpec", "beam_weights",
    "beamforming_gain", "build_config", "default_config", "error_metric", "load_config", "quantize_weights",
    "run_parameters", "run_scenario", "summarize", "write_csv",
]
