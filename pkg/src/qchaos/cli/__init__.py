"""Batch experiment runner."""
from .config import ConfigError, ExperimentConfig, diagnose, load, parse, validate
from .runner import run

__all__ = ["ConfigError", "ExperimentConfig", "diagnose", "load", "parse", "run", "validate"]
