"""Cavity transmission with intracavity parametric gain, linewidths and Q conversions.

The gain argument ``g_beta`` is the coupling rate that appears in the transmission
denominator Δ² + κ²/4 − g²|β|². It equals the Langevin parametric rate 2g|β| of a
PumpState, so the gain/loss ratio G = g_beta/(κ/2) coincides with the pump ratio x and
reaches one exactly at the oscillation threshold.

Design Philosophy:
- Closed forms evaluated on numpy grids; no hidden state
- Linewidths of non-Lorentzian, gain-narrowed lines are measured on the curve itself
- Coupling condition is visible both in the gain sweep and in the phase response
"""

from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np
from numpy.polynomial import Polynomial
from numpy.typing import NDArray
from scipy.optimize import brentq

from sqzlab.errors import (
    AboveThresholdError,
    AmbiguousLineshapeError,
    DomainError,
    InconsistentDataError,
)
from sqzlab.models import CavityParams, GainLossRatio, TransmissionCurve
from sqzlab.units import SPEED_OF_LIGHT, wavelength_span_to_hz

Detuning = Union[float, NDArray[np.float64]]


def _check_gain(cavity: CavityParams, g_beta: float) -> None:
    if g_beta < 0:
        raise DomainError(f"Gain rate must be non-negative, got {g_beta}")
    if g_beta >= cavity.total_rate / 2:
        raise AboveThresholdError(
            f"Gain rate {g_beta:.6g} rad/s reaches κ/2 = {cavity.total_rate / 2:.6g} rad/s"
        )


def transmission_amplitude(cavity: CavityParams, g_beta: float, detuning: Detuning) -> Detuning:
    """Complex amplitude 1 + κ_e(iΔ − κ/2)/(Δ² + κ²/4 − g²|β|²)."""
    _check_gain(cavity, g_beta)
    kappa = cavity.total_rate
    delta = np.asarray(detuning, dtype=float)
    return 1.0 + cavity.external_rate * (1j * delta - kappa / 2) / (
        delta**2 + kappa**2 / 4 - g_beta**2
    )


def transmission_with_gain(
    cavity: CavityParams, g_beta: float, detuning: Detuning
) -> tuple[Detuning, Detuning]:
    """Power transmission and amplitude phase at detuning Δ.

    Raises:
        AboveThresholdError: If g_beta ≥ κ/2
    """
    amplitude = transmission_amplitude(cavity, g_beta, detuning)
    transmittance = np.abs(amplitude) ** 2
    phase = np.angle(amplitude)
    if np.ndim(transmittance) == 0:
        return float(transmittance), float(phase)
    return transmittance, phase


def cold_transmission(cavity: CavityParams, detuning: Detuning) -> Detuning:
    """Lorentzian dip 1 − κ_eκ_i/(Δ² + κ²/4) of the cavity without gain."""
    delta = np.asarray(detuning, dtype=float)
    result = 1.0 - cavity.external_rate * cavity.intrinsic_rate / (
        delta**2 + cavity.total_rate**2 / 4
    )
    return float(result) if np.ndim(result) == 0 else result


def transmission_curve(
    cavity: CavityParams, g_beta: float, detunings: NDArray[np.float64]
) -> TransmissionCurve:
    transmittance, phase = transmission_with_gain(cavity, g_beta, np.asarray(detunings))
    return TransmissionCurve(
        detunings=np.asarray(detunings, dtype=float),
        transmittance=np.atleast_1d(transmittance),
        amplitude_phase=np.atleast_1d(phase),
    )


def gain_loss_ratio(cavity: CavityParams, g_beta: float) -> GainLossRatio:
    _check_gain(cavity, g_beta)
    return GainLossRatio(value=g_beta / (cavity.total_rate / 2))


def g_beta_for_ratio(cavity: CavityParams, ratio: float) -> float:
    """Gain rate producing gain/loss ratio G."""
    if not 0.0 <= ratio < 1.0:
        raise DomainError(f"Gain/loss ratio must lie in [0, 1), got {ratio}")
    return ratio * cavity.total_rate / 2


def pole_linewidth(cavity: CavityParams, g_beta: float) -> float:
    """κ√(1 − G²), twice the imaginary part of the transmission poles."""
    ratio = gain_loss_ratio(cavity, g_beta).value
    return cavity.total_rate * math.sqrt(1.0 - ratio**2)


def extinction_gain(cavity: CavityParams) -> Optional[float]:
    """Gain/loss ratio at which the on-resonance transmission reaches zero.

    Only undercoupled cavities (ρ < 1/2) pass through zero; overcoupled dips only get
    shallower with gain, so None is returned for them.
    """
    rho = cavity.escape_efficiency
    if rho >= 0.5:
        return None
    return math.sqrt(1.0 - 2.0 * rho)


def _crossing(x: NDArray[np.float64], y: NDArray[np.float64], lo: int, level: float) -> float:
    """Abscissa where y crosses ``level`` between samples lo and lo + 1.

    A cubic through the four surrounding samples refines the linear estimate.
    """
    x0, x1, y0, y1 = x[lo], x[lo + 1], y[lo], y[lo + 1]
    linear = x0 if y1 == y0 else x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    start, stop = lo - 1, lo + 3
    if start < 0 or stop > x.size:
        return float(linear)
    local = Polynomial.fit(x[start:stop], y[start:stop] - level, deg=3)
    if local(x0) * local(x1) > 0:
        return float(linear)
    return float(brentq(local, x0, x1, xtol=abs(x1 - x0) * 1e-6))


def fwhm_numeric(curve: TransmissionCurve) -> float:
    """Full width at half depth (dip) or at half excess above unity (peak), in rad/s.

    The extremum is the sample farthest from unity; each flank is walked outwards to the
    first sample past the half level and the crossing is refined by a local cubic.

    Raises:
        AmbiguousLineshapeError: If the curve is flat, the extremum sits on the grid edge, a
            flank never crosses the half level, or a second extremum reaches the half level
    """
    delta = curve.detunings
    excess = curve.transmittance - 1.0
    if delta.size < 3:
        raise AmbiguousLineshapeError("Need at least three samples to measure a width")
    index = int(np.argmax(np.abs(excess)))
    peak = excess[index]
    if abs(peak) <= 1e-12:
        raise AmbiguousLineshapeError("Curve is flat; no extremum to measure")
    if index == 0 or index == delta.size - 1:
        raise AmbiguousLineshapeError("Extremum is not bracketed by the grid")

    level = peak / 2.0
    # Orient so the feature is positive.
    signed = excess / np.sign(peak)
    half = abs(level)

    left = index
    while left > 0 and signed[left] > half:
        left -= 1
    right = index
    while right < delta.size - 1 and signed[right] > half:
        right += 1
    if signed[left] > half or signed[right] > half:
        raise AmbiguousLineshapeError("Half level is not crossed inside the grid")
    if np.any(signed[:left] > half) or np.any(signed[right + 1 :] > half):
        raise AmbiguousLineshapeError("More than one extremum reaches the half level")

    x_left = _crossing(delta, signed, left, half)
    x_right = _crossing(delta, signed, right - 1, half)
    return float(x_right - x_left)


def gain_loss_from_linewidth(cold_fwhm: float, hot_fwhm: float) -> GainLossRatio:
    """G = √(1 − (hot/cold)²) under the pole law κ_eff = κ√(1 − G²).

    Raises:
        InconsistentDataError: If the hot line is wider than the cold one
        DomainError: If a width is not positive
    """
    if cold_fwhm <= 0 or hot_fwhm <= 0:
        raise DomainError(f"Linewidths must be positive, got {cold_fwhm}, {hot_fwhm}")
    if hot_fwhm > cold_fwhm:
        raise InconsistentDataError(
            f"Gain cannot broaden the line: hot {hot_fwhm} > cold {cold_fwhm}"
        )
    return GainLossRatio(value=math.sqrt(1.0 - (hot_fwhm / cold_fwhm) ** 2))


def q_from_linewidth(wavelength: float, linewidth: float) -> tuple[float, float]:
    """Q and Δν (Hz) from a resonance wavelength and its FWHM, both in meters."""
    if wavelength <= 0 or linewidth <= 0:
        raise DomainError(
            f"Wavelength and linewidth must be positive, got {wavelength}, {linewidth}"
        )
    delta_nu = wavelength_span_to_hz(wavelength, linewidth)
    q = (SPEED_OF_LIGHT / wavelength) / delta_nu
    return q, delta_nu


def detuning_from_temperature(
    temperature: float,
    reference_temperature: float,
    fsr: float,
    kelvin_per_fsr: float = 1.2,
) -> float:
    """Detuning (rad/s) after a TEC setting change, wrapped into (−fsr/2, fsr/2].

    Raises:
        DomainError: If ``kelvin_per_fsr`` is not positive
    """
    if kelvin_per_fsr <= 0:
        raise DomainError(f"Tuning slope must be positive, got {kelvin_per_fsr}")
    shift = (temperature - reference_temperature) / kelvin_per_fsr * fsr
    return float(shift - fsr * math.ceil(shift / fsr - 0.5))


def phase_from_voltage(voltage: Detuning, v_pi: float) -> Detuning:
    """Electro-optic phase θ = πV/V_π."""
    if v_pi <= 0:
        raise DomainError(f"V_pi must be positive, got {v_pi}")
    return math.pi * np.asarray(voltage, dtype=float) / v_pi
