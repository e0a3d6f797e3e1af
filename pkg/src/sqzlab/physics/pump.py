"""Pump power budget: SHG conversion, threshold calibration and pump ratio.

Power flows FH (on-chip, into the SHG section) -> SH via P_SH = η_norm(λ)·P_FH² -> pump
ratio x = √(P_SH/P_th). The OPA nonlinear rate g is never computed from first principles;
it is calibrated from the measured threshold through |β|_thr = κ/(4g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import structlog
from numpy.typing import NDArray

from sqzlab.errors import DomainError, MissingResponseError
from sqzlab.models import CavityParams, LossChain, PumpState, ShgModel, ThresholdModel
from sqzlab.physics.squeezing import measured_spectrum

logger = structlog.get_logger(__name__)

# Tabulated responses are matched to within this distance (nm).
_RESPONSE_TOLERANCE_NM = 1e-3


def efficiency_at(model: ShgModel, wavelength: float) -> float:
    """η_norm at ``wavelength`` (m): peak efficiency times the relative response.

    Raises:
        MissingResponseError: If the wavelength lies outside the response table
    """
    if not model.response_nm:
        return model.normalized_efficiency
    table = sorted(model.response_nm.items())
    grid = np.array([w for w, _ in table])
    values = np.array([r for _, r in table])
    wavelength_nm = wavelength * 1e9
    if (
        wavelength_nm < grid[0] - _RESPONSE_TOLERANCE_NM
        or wavelength_nm > grid[-1] + _RESPONSE_TOLERANCE_NM
    ):
        raise MissingResponseError(
            f"No SHG response at {wavelength_nm:.4f} nm; table covers "
            f"{grid[0]:.4f}-{grid[-1]:.4f} nm"
        )
    return model.normalized_efficiency * float(np.interp(wavelength_nm, grid, values))


def shg_power(model: ShgModel, p_fh: float, wavelength: float) -> float:
    """Second-harmonic power (W) from fundamental power ``p_fh`` (W) at ``wavelength`` (m)."""
    if p_fh < 0:
        raise DomainError(f"FH power must be non-negative, got {p_fh}")
    return efficiency_at(model, wavelength) * p_fh**2


def calibrate_threshold(
    p_th_sh: float, cavity: CavityParams, photon_energy: float
) -> ThresholdModel:
    """Calibrate g from the SH power at oscillation threshold.

    Args:
        p_th_sh: SH power at threshold (W)
        cavity: Cavity the threshold was measured on
        photon_energy: ħω of the pump photons (J)

    Returns:
        ThresholdModel with g = κ/(4|β|_thr), |β|_thr = √(p_th_sh/ħω)

    Raises:
        DomainError: If a power or energy is not positive
    """
    if p_th_sh <= 0:
        raise DomainError(f"Threshold power must be positive, got {p_th_sh}")
    if photon_energy <= 0:
        raise DomainError(f"Photon energy must be positive, got {photon_energy}")
    beta_thr = math.sqrt(p_th_sh / photon_energy)
    return ThresholdModel(
        p_th_sh=p_th_sh,
        kappa_ref=cavity.total_rate,
        nonlinear_rate=cavity.total_rate / (4.0 * beta_thr),
        photon_energy=photon_energy,
    )


def pump_ratio(p_sh: float, threshold: ThresholdModel) -> float:
    """x = √(P_SH/P_th). Values at or above one are logged, not raised."""
    if p_sh < 0:
        raise DomainError(f"SH power must be non-negative, got {p_sh}")
    x = math.sqrt(p_sh / threshold.p_th_sh)
    if x >= 1.0:
        logger.warning(
            "pump_ratio_above_threshold", pump_ratio=x, p_sh=p_sh, p_th=threshold.p_th_sh
        )
    return x


def pump_state(
    p_sh: float, threshold: ThresholdModel, pump_phase: float = -math.pi / 2
) -> PumpState:
    """PumpState for SH power ``p_sh`` on the calibrated cavity."""
    magnitude = math.sqrt(p_sh / threshold.photon_energy)
    return PumpState(
        nonlinear_rate=threshold.nonlinear_rate,
        pump_magnitude=magnitude,
        pump_phase=pump_phase,
        pump_ratio=4.0 * threshold.nonlinear_rate * magnitude / threshold.kappa_ref,
        sh_power=p_sh,
    )


@dataclass(frozen=True)
class PowerSweepRow:
    """One FH power point; squeezing fields are None above threshold."""

    p_fh: float
    p_sh: float
    pump_ratio: float
    s_minus_db: Optional[float]
    s_plus_db: Optional[float]

    @property
    def above_threshold(self) -> bool:
        return self.pump_ratio >= 1.0


def power_sweep_curve(
    fh_powers: NDArray[np.float64],
    shg: ShgModel,
    threshold: ThresholdModel,
    cavity: CavityParams,
    chain: LossChain,
    omega: float,
    wavelength: Optional[float] = None,
) -> list[PowerSweepRow]:
    """Measured squeezing versus FH power: shg_power -> pump_ratio -> measured_spectrum.

    Args:
        fh_powers: On-chip FH powers (W)
        shg: SHG model
        threshold: Threshold calibration valid for ``cavity``
        cavity: OPO cavity
        chain: Loss chain
        omega: Sideband angular frequency (rad/s)
        wavelength: FH wavelength (m); the cavity resonance when omitted

    Returns:
        One row per power; rows at or above threshold carry no spectrum
    """
    fh_wavelength = cavity.resonance_wavelength if wavelength is None else wavelength
    rows: list[PowerSweepRow] = []
    for p_fh in np.asarray(fh_powers, dtype=float):
        p_sh = shg_power(shg, float(p_fh), fh_wavelength)
        x = pump_ratio(p_sh, threshold)
        if x >= 1.0:
            rows.append(PowerSweepRow(float(p_fh), p_sh, x, None, None))
            continue
        spectrum = measured_spectrum(cavity, x, chain, omega)
        rows.append(
            PowerSweepRow(
                float(p_fh), p_sh, x, float(spectrum.s_minus_db), float(spectrum.s_plus_db)
            )
        )
    return rows
