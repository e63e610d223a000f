"""Scenario files, sweeps, figure presets and CSV output."""

from shuffledefense.scenario.config import ScenarioConfig, load, parse_text, serialize, validate
from shuffledefense.scenario.figures import PRESETS, run_figure
from shuffledefense.scenario.runner import run_scenario
from shuffledefense.scenario.table import ResultTable, emit_csv, read_csv, to_csv

__all__ = [
    "PRESETS",
    "ResultTable",
    "ScenarioConfig",
    "emit_csv",
    "load",
    "parse_text",
    "read_csv",
    "run_figure",
    "run_scenario",
    "serialize",
    "to_csv",
    "validate",
]
