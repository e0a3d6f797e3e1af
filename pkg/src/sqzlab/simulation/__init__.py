"""Time-domain homodyne simulation of the sub-threshold OPO."""

from sqzlab.simulation.detection import (
    balanced_detect,
    band_average,
    electronic_noise_series,
    welch_psd,
)
from sqzlab.simulation.langevin import drift_matrix, propagate_mean, simulate_cavity
from sqzlab.simulation.rng import RunStreams
from sqzlab.simulation.sweeps import (
    PhaseSweepRow,
    ShotNoiseRow,
    phase_sweep,
    shotnoise_sweep,
    spectrum_sweep,
    squeezed_lo_phase,
)

__all__ = [
    "PhaseSweepRow",
    "RunStreams",
    "ShotNoiseRow",
    "balanced_detect",
    "band_average",
    "drift_matrix",
    "electronic_noise_series",
    "phase_sweep",
    "propagate_mean",
    "shotnoise_sweep",
    "simulate_cavity",
    "spectrum_sweep",
    "squeezed_lo_phase",
    "welch_psd",
]
