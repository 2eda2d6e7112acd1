"""Rotated-digit experiment pipeline driving the coverage CLI."""

__version__ = "0.1.0"

from .config import ExperimentConfig

__all__ = ["ExperimentConfig"]
