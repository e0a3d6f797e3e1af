"""Run pipelines composing the library into the CLI commands."""

from sqzlab.analysis.pipelines import (
    RUNNERS,
    FitModel,
    SimulationMode,
    replay,
    run_fit,
    run_fixtures,
    run_laser_noise,
    run_project,
    run_simulate,
    run_spectrum,
    run_transmission,
)

__all__ = [
    "RUNNERS",
    "FitModel",
    "SimulationMode",
    "replay",
    "run_fit",
    "run_fixtures",
    "run_laser_noise",
    "run_project",
    "run_simulate",
    "run_spectrum",
    "run_transmission",
]
