"""Experiment configuration, Monte Carlo runner, brute-force oracle and CLI."""

from .cli import cli_main
from .oracle import brute_force_secrecy, design_values
from .runner import (
    CSV_HEADER,
    ExperimentResult,
    ResultRow,
    drop_seed_sequence,
    emit_results,
    load_rows_json,
    run_experiment,
    summarize,
)
from .spec import PRESETS, SOLVER_NAMES, ExperimentSpec, load_spec, preset, run_solver, spec_from_dict

__all__ = [
    "CSV_HEADER",
    "ExperimentResult",
    "ExperimentSpec",
    "PRESETS",
    "ResultRow",
    "SOLVER_NAMES",
    "brute_force_secrecy",
    "cli_main",
    "design_values",
    "drop_seed_sequence",
    "emit_results",
    "load_rows_json",
    "load_spec",
    "preset",
    "run_experiment",
    "run_solver",
    "spec_from_dict",
    "summarize",
]
