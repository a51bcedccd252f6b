"""Experiment runner: configs, the experiment registry, reports and the CLI."""

from .config import ConfigError, ExperimentConfig, load_config, validate
from .experiments import REGISTRY
from .report import Metric, RunReport
from .runner import run

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "validate", "REGISTRY",
           "Metric", "RunReport", "run"]
