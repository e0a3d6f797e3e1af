"""Synthetic measurement fixtures generated from the models themselves.

Each generator evaluates the forward model of one measurement at the reference device and
optionally adds seeded Gaussian noise, relative to the signal scale. With ``noise=0`` the
fitters must recover the generating parameters exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from sqzlab.errors import DomainError
from sqzlab.models import CavityParams, LossChain, SpectrumTrace, TransmissionCurve
from sqzlab.physics.cavity import transmission_curve
from sqzlab.physics.squeezing import spectrum_curve
from sqzlab.physics.rates import derive_rates
from sqzlab.units import nm

REFERENCE_Q_TOTAL = 550e3
REFERENCE_Q_INTRINSIC = 950e3
REFERENCE_WAVELENGTH = nm(1544.4)
REFERENCE_SHG_EFFICIENCY = 10.0
REFERENCE_PUMP_RATIO = 0.31


@dataclass(frozen=True)
class ShgSweep:
    p_fh: NDArray[np.float64]
    p_sh: NDArray[np.float64]


@dataclass(frozen=True)
class ShotNoiseSweep:
    lo_power: NDArray[np.float64]
    psd: NDArray[np.float64]
    electronic: float

    @property
    def psd_minus_electronic(self) -> NDArray[np.float64]:
        return self.psd - self.electronic


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def _check_noise(noise: float) -> None:
    if noise < 0:
        raise DomainError(f"Noise level must be non-negative, got {noise}")


def reference_cavity() -> CavityParams:
    return derive_rates(REFERENCE_Q_TOTAL, REFERENCE_Q_INTRINSIC, REFERENCE_WAVELENGTH)


def resonance_trace(
    cavity: Optional[CavityParams] = None,
    span_linewidths: float = 4.0,
    points: int = 401,
    noise: float = 0.0,
    seed: int = 0,
) -> TransmissionCurve:
    """Cold-cavity transmission over ±``span_linewidths``·κ, noise added to the power only."""
    _check_noise(noise)
    device = cavity or reference_cavity()
    half_span = span_linewidths * device.total_rate
    detunings = np.linspace(-half_span, half_span, points)
    curve = transmission_curve(device, 0.0, detunings)
    if noise == 0:
        return curve
    jitter = noise * _rng(seed).standard_normal(points)
    return TransmissionCurve(
        detunings=curve.detunings,
        transmittance=np.clip(curve.transmittance + jitter, 0.0, None),
        amplitude_phase=curve.amplitude_phase,
    )


def shg_sweep(
    efficiency: float = REFERENCE_SHG_EFFICIENCY,
    max_power: float = 50e-3,
    points: int = 11,
    noise: float = 0.0,
    seed: int = 0,
) -> ShgSweep:
    """P_SH = η·P_FH² sampled from zero to ``max_power`` (W); noise is relative per point."""
    _check_noise(noise)
    p_fh = np.linspace(0.0, max_power, points)
    p_sh = efficiency * p_fh**2
    if noise > 0:
        p_sh = p_sh * (1.0 + noise * _rng(seed).standard_normal(points))
    return ShgSweep(p_fh=p_fh, p_sh=p_sh)


def shot_noise_sweep(
    lo_powers: Optional[NDArray[np.float64]] = None,
    reference_lo_power: float = 1.3e-3,
    electronic_rel: float = 1.0 / 3.3,
    detector_gain: float = 1.0,
    noise: float = 0.0,
    seed: int = 0,
) -> ShotNoiseSweep:
    """One-sided photocurrent PSD of vacuum versus LO power, in the Welch units of a simulation.

    Shot noise reads 2·gain·P/P_ref and the electronic floor 2·gain·rel, so their ratio at the
    reference power is 1/rel.
    """
    _check_noise(noise)
    powers = (
        np.array([0.2e-3, 0.4e-3, 0.8e-3, 1.3e-3, 2.0e-3])
        if lo_powers is None
        else np.asarray(lo_powers, dtype=float)
    )
    electronic = 2.0 * detector_gain * electronic_rel
    psd = 2.0 * detector_gain * powers / reference_lo_power + electronic
    if noise > 0:
        psd = psd * (1.0 + noise * _rng(seed).standard_normal(powers.size))
    return ShotNoiseSweep(lo_power=powers, psd=psd, electronic=electronic)


def squeezing_spectra(
    cavity: Optional[CavityParams] = None,
    pump_ratio: float = REFERENCE_PUMP_RATIO,
    chain: Optional[LossChain] = None,
    fmin: float = 60e6,
    fmax: float = 140e6,
    points: int = 81,
    noise: float = 0.0,
    seed: int = 0,
) -> tuple[SpectrumTrace, SpectrumTrace]:
    """Measured (squeezed, anti-squeezed) dB traces; noise is relative on the linear values."""
    _check_noise(noise)
    device = cavity or reference_cavity()
    losses = chain or LossChain.from_cavity(device, path_transmission=0.70, detector_qe=0.75)
    freqs = np.linspace(fmin, fmax, points)
    traces = spectrum_curve(device, pump_ratio, losses, freqs)
    if noise == 0:
        return traces
    rng = _rng(seed)
    noisy = []
    for trace in traces:
        linear = trace.to_linear()
        values = linear.values * (1.0 + noise * rng.standard_normal(points))
        noisy.append(
            SpectrumTrace(freqs, values, linear.unit, {**trace.metadata, "noise": noise}).to_db()
        )
    return noisy[0], noisy[1]


def phase_response(
    cavity: Optional[CavityParams] = None,
    span_linewidths: float = 4.0,
    points: int = 401,
    noise: float = 0.0,
    seed: int = 0,
) -> TransmissionCurve:
    """Cold-cavity transmission with noise (rad) added to the phase only."""
    _check_noise(noise)
    curve = resonance_trace(cavity, span_linewidths, points)
    if noise == 0:
        return curve
    return TransmissionCurve(
        detunings=curve.detunings,
        transmittance=curve.transmittance,
        amplitude_phase=curve.amplitude_phase + noise * _rng(seed).standard_normal(points),
    )
