"""Experiment driver: config files, training runs, sweeps, landscape
grids, convergence summaries, and the command-line interface."""

from .config import ExperimentConfig, config_from_file, parse_config
from .convergence import ConvergenceReport, convergence_summary
from .landscape import LandscapeGrid, landscape_grid, save_landscape
from .runner import GOLDEN_HEADER, RunResult, run_experiment
from .sweeps import SweepResult, sweep

__all__ = [
    "ExperimentConfig", "config_from_file", "parse_config",
    "ConvergenceReport", "convergence_summary",
    "LandscapeGrid", "landscape_grid", "save_landscape",
    "GOLDEN_HEADER", "RunResult", "run_experiment",
    "SweepResult", "sweep",
]
