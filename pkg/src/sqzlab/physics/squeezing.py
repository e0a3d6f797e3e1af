"""Closed-form output spectra of a sub-threshold degenerate OPO.

The cavity is treated in the good-cavity lossless convention: the formulas use the total
rate κ as the output coupling, and every loss (including the escape efficiency ρ) enters
through a LossChain as an equivalent beamsplitter that mixes in vacuum.

Design Philosophy:
- Pure, vectorized functions of immutable inputs; ω may be a scalar or an array
- Above-threshold inputs are rejected, never extrapolated
- dB always means 10·log10 of a noise-power ratio

The output-field numerator is evaluated with 4g²|β|²; this is the dimensionally consistent
form and it satisfies |u|² − |v|² = 1 exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from sqzlab.errors import AboveThresholdError, DomainError, InsufficientDataError
from sqzlab.models import (
    CavityParams,
    LossChain,
    PumpState,
    SpectrumTrace,
    TraceUnit,
    TransferPair,
)
from sqzlab.physics.rates import total_efficiency
from sqzlab.units import hz_to_angular, to_db

Omega = Union[float, NDArray[np.float64]]


@dataclass(frozen=True)
class MeasuredSpectrum:
    """Squeezed and anti-squeezed noise relative to shot noise."""

    s_minus: Omega
    s_plus: Omega

    @property
    def s_minus_db(self) -> Omega:
        return to_db(self.s_minus)

    @property
    def s_plus_db(self) -> Omega:
        return to_db(self.s_plus)


def _check_pump(cavity: CavityParams, pump: PumpState) -> float:
    x = pump.ratio_for(cavity)
    if not math.isclose(x, pump.pump_ratio, rel_tol=1e-9, abs_tol=1e-12):
        raise DomainError(
            f"Pump ratio {pump.pump_ratio} does not match 4g|β|/κ = {x} for this cavity"
        )
    if x >= 1.0:
        raise AboveThresholdError(f"Pump ratio x = {x:.6g} is at or above threshold")
    return pump.g_beta


def _check_ratio(x: float) -> None:
    if not 0.0 <= x < 1.0:
        raise DomainError(f"Pump ratio must lie in [0, 1), got {x}")


def output_transfer(cavity: CavityParams, pump: PumpState, omega: Omega) -> TransferPair:
    """Coefficients u, v of a_out(ω) = u·a_in(ω) + v·a_in†(−ω).

    Raises:
        AboveThresholdError: If x ≥ 1
    """
    g_beta = _check_pump(cavity, pump)
    kappa = cavity.total_rate
    w = np.asarray(omega, dtype=float)
    gain_sq = 4.0 * g_beta**2
    u = (kappa**2 / 4 + w**2 + gain_sq) / ((kappa / 2 - 1j * w) ** 2 - gain_sq)
    v = -2j * pump.nonlinear_rate * pump.beta * kappa / ((kappa / 2 + 1j * w) ** 2 - gain_sq)
    if np.ndim(omega) == 0:
        return TransferPair(u=complex(u), v=complex(v))
    return TransferPair(u=u, v=v)


def quadrature_spectrum(
    cavity: CavityParams, pump: PumpState, phi_out: Omega, omega: Omega
) -> Omega:
    """Lossless output quadrature spectrum S_XX at output phase φ_out.

    Extremes sit where sin(2φ_out + φ_β) = ±1 and equal S± of ``squeeze_antisqueeze``.
    """
    g_beta = _check_pump(cavity, pump)
    kappa = cavity.total_rate
    w = np.asarray(omega, dtype=float)
    a = g_beta * kappa / ((kappa / 2 - 2 * g_beta) ** 2 + w**2)
    b = g_beta * kappa / ((kappa / 2 + 2 * g_beta) ** 2 + w**2)
    s = np.sin(2 * np.asarray(phi_out, dtype=float) + pump.pump_phase)
    result = 1.0 + a * (2 + 2 * s) + b * (-2 + 2 * s)
    return float(result) if np.ndim(result) == 0 else result


def extremal_phases(pump: PumpState) -> tuple[float, float]:
    """Output phases (anti-squeezed, squeezed) in [0, π)."""
    anti = ((math.pi / 2 - pump.pump_phase) / 2) % math.pi
    squeezed = (anti + math.pi / 2) % math.pi
    return anti, squeezed


def _lorentz_terms(cavity: CavityParams, x: float, omega: Omega) -> tuple[Omega, Omega]:
    r = 4.0 * (np.asarray(omega, dtype=float) / cavity.total_rate) ** 2
    minus = 4 * x / ((1 + x) ** 2 + r)
    plus = 4 * x / ((1 - x) ** 2 + r)
    return minus, plus


def squeeze_antisqueeze(cavity: CavityParams, x: float, omega: Omega) -> tuple[Omega, Omega]:
    """Lossless (S_minus, S_plus) = 1 ∓ 4x/((1 ± x)² + 4(ω/κ)²).

    Raises:
        DomainError: If x is outside [0, 1)
    """
    _check_ratio(x)
    minus, plus = _lorentz_terms(cavity, x, omega)
    s_minus, s_plus = 1.0 - minus, 1.0 + plus
    if np.ndim(s_minus) == 0:
        return float(s_minus), float(s_plus)
    return s_minus, s_plus


def measured_spectrum(
    cavity: CavityParams, x: float, chain: LossChain, omega: Omega
) -> MeasuredSpectrum:
    """Spectra after the loss chain: S±,meas = 1 ± η_tot·4x/((1 ∓ x)² + 4(ω/κ)²)."""
    _check_ratio(x)
    eta = total_efficiency(chain)
    minus, plus = _lorentz_terms(cavity, x, omega)
    s_minus, s_plus = 1.0 - eta * minus, 1.0 + eta * plus
    if np.ndim(s_minus) == 0:
        return MeasuredSpectrum(float(s_minus), float(s_plus))
    return MeasuredSpectrum(s_minus, s_plus)


def lossy_product(efficiency: float, s_minus: Omega, s_plus: Omega) -> Omega:
    """S+,meas·S−,meas expressed through the lossless pair."""
    return 1.0 + efficiency * (1.0 - efficiency) * (s_plus - 1.0) * (1.0 - s_minus)


def spectrum_curve(
    cavity: CavityParams, x: float, chain: LossChain, freqs_hz: NDArray[np.float64]
) -> tuple[SpectrumTrace, SpectrumTrace]:
    """Measured (squeezed, anti-squeezed) dB traces over a frequency grid in Hz."""
    freqs = np.asarray(freqs_hz, dtype=float)
    if freqs.size == 0:
        raise InsufficientDataError("Frequency grid is empty")
    spectrum = measured_spectrum(cavity, x, chain, hz_to_angular(freqs))
    metadata = {
        "source": "closed_form",
        "pump_ratio": x,
        "total_efficiency": chain.total_efficiency,
        "linewidth_hz": cavity.linewidth_hz,
    }
    squeezed = SpectrumTrace(
        freqs,
        np.atleast_1d(spectrum.s_minus_db),
        TraceUnit.SHOT_NORMALIZED_DB,
        {**metadata, "quadrature": "squeezed"},
    )
    anti = SpectrumTrace(
        freqs,
        np.atleast_1d(spectrum.s_plus_db),
        TraceUnit.SHOT_NORMALIZED_DB,
        {**metadata, "quadrature": "anti_squeezed"},
    )
    return squeezed, anti


def pump_ratio_for_squeezing(
    target_db: float, efficiency: float, omega_over_kappa: float = 0.0
) -> float:
    """Pump ratio whose measured squeezing equals ``target_db`` (negative dB).

    Raises:
        DomainError: If the target lies beyond what ``efficiency`` allows
    """
    if target_db >= 0:
        raise DomainError(f"Squeezing target must be negative dB, got {target_db}")
    r = 4.0 * omega_over_kappa**2
    target = 10.0 ** (target_db / 10.0)

    def excess(x: float) -> float:
        return 1.0 - efficiency * 4 * x / ((1 + x) ** 2 + r) - target

    upper = 1.0 - 1e-12
    if excess(upper) > 0:
        raise DomainError(
            f"{target_db} dB is not reachable below threshold with efficiency {efficiency}"
        )
    return float(brentq(excess, 0.0, upper, xtol=1e-15, rtol=1e-14))
