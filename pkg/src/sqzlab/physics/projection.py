"""Projected squeezing for a device with improved components.

The improved device keeps the calibrated geometry; its nonlinear rate scales as
g ∝ √η_norm and its threshold follows p_th ∝ (κ/g)². Projections report the on-chip
spectra (only the escape efficiency applies) next to the spectra a detection chain with
improved off-chip parts would record.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from sqzlab.models import CavityParams, LossChain, ShgModel, ThresholdModel
from sqzlab.physics.pump import pump_ratio, shg_power
from sqzlab.physics.squeezing import measured_spectrum, pump_ratio_for_squeezing
from sqzlab.units import to_db

# Aspheric lens coupling and photodiode QE considered achievable.
IMPROVED_PATH_TRANSMISSION = 0.90
IMPROVED_DETECTOR_QE = 0.99


@dataclass(frozen=True)
class ProjectionRow:
    p_fh: float
    p_sh: float
    pump_ratio: float
    on_chip_minus_db: Optional[float]
    on_chip_plus_db: Optional[float]
    measured_minus_db: Optional[float]
    measured_plus_db: Optional[float]

    @property
    def above_threshold(self) -> bool:
        return self.pump_ratio >= 1.0


@dataclass(frozen=True)
class ConsistencyPair:
    """Pump ratio reaching a squeezing target and the anti-squeezing that comes with it."""

    pump_ratio: float
    squeezing_db: float
    anti_squeezing_db: float


def improved_threshold(
    calibrated: ThresholdModel,
    reference_efficiency: float,
    improved_efficiency: float,
    improved_cavity: CavityParams,
) -> ThresholdModel:
    """Threshold of the improved device from the calibrated one."""
    return calibrated.scaled(improved_efficiency / reference_efficiency, improved_cavity.total_rate)


def project_improved(
    fh_powers: NDArray[np.float64],
    shg: ShgModel,
    threshold: ThresholdModel,
    cavity: CavityParams,
    omega: float = 0.0,
    path_transmission: float = IMPROVED_PATH_TRANSMISSION,
    detector_qe: float = IMPROVED_DETECTOR_QE,
    wavelength: Optional[float] = None,
) -> list[ProjectionRow]:
    """On-chip and measured projections over an FH power grid.

    Points at or above threshold are flagged and left uncomputed.
    """
    fh_wavelength = cavity.resonance_wavelength if wavelength is None else wavelength
    on_chip = LossChain.from_cavity(cavity)
    measured = LossChain.from_cavity(
        cavity, path_transmission=path_transmission, detector_qe=detector_qe
    )
    rows: list[ProjectionRow] = []
    for p_fh in np.asarray(fh_powers, dtype=float):
        p_sh = shg_power(shg, float(p_fh), fh_wavelength)
        x = pump_ratio(p_sh, threshold)
        if x >= 1.0:
            rows.append(ProjectionRow(float(p_fh), p_sh, x, None, None, None, None))
            continue
        chip = measured_spectrum(cavity, x, on_chip, omega)
        detected = measured_spectrum(cavity, x, measured, omega)
        rows.append(
            ProjectionRow(
                float(p_fh),
                p_sh,
                x,
                float(chip.s_minus_db),
                float(chip.s_plus_db),
                float(detected.s_minus_db),
                float(detected.s_plus_db),
            )
        )
    return rows


def consistency_pair(
    target_db: float, escape_efficiency: float, omega_over_kappa: float = 0.0
) -> ConsistencyPair:
    """Anti-squeezing implied by an on-chip squeezing target at escape efficiency ρ."""
    x = pump_ratio_for_squeezing(target_db, escape_efficiency, omega_over_kappa)
    r = 4.0 * omega_over_kappa**2
    s_minus = 1.0 - escape_efficiency * 4 * x / ((1 + x) ** 2 + r)
    s_plus = 1.0 + escape_efficiency * 4 * x / ((1 - x) ** 2 + r)
    return ConsistencyPair(x, float(to_db(s_minus)), float(to_db(s_plus)))
