"""Finite-difference laboratory for the generalised Einstein equations."""
from __future__ import annotations

from .grid import Grid, TensorField, build_grid
from .scenarios import SCENARIOS, ScenarioConfig, run_scenario

__version__ = "0.1.0"

__all__ = ["Grid", "SCENARIOS", "ScenarioConfig", "TensorField", "build_grid", "run_scenario"]
