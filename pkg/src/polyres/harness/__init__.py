"""Experiment orchestration: configs, runners, CSV and SVG output."""

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import ResultRow, run_closed_loop, run_open_loop, summarize
from .io import emit_csv, parse_csv, read_csv
from .plots import emit_plot

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "ResultRow",
    "run_open_loop",
    "run_closed_loop",
    "summarize",
    "emit_csv",
    "parse_csv",
    "read_csv",
    "emit_plot",
]
