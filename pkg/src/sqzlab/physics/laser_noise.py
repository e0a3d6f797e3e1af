"""Laser intensity and phase noise, and the unbalanced-MZI phase-noise measurement.

A laser with white frequency noise of level C (rad²/s) has a phase that diffuses as
⟨(φ(t) − φ(0))²⟩ = C|t|, a Lorentzian lineshape of angular FWHM C and a phase-noise PSD
S_φφ(Ω) = C/Ω². All PSDs here are two-sided functions of the angular offset Ω; traces
written to disk carry their convention in the metadata.

Design Philosophy:
- Forward models and their inversions live side by side so every inversion can be checked
  against the model that produced its input
- Operating-point arguments are kept exactly as the MZI transfer function prints them
- Bins the interferometer is blind to are masked and reported, never divided through
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy import integrate

from sqzlab.errors import DomainError, InsufficientDataError
from sqzlab.models import MziSetup, SpectrumTrace, TraceUnit
from sqzlab.units import angular_to_hz, hz_to_angular

logger = structlog.get_logger(__name__)

Grid = Union[float, NDArray[np.float64]]
PhasePsd = Union[float, NDArray[np.float64], Callable[[NDArray[np.float64]], NDArray[np.float64]]]

# Bins closer than this fraction of the FSR to a transfer-function null are masked.
DEFAULT_GUARD_FRACTION = 0.02


def _as_output(value: NDArray[np.float64]) -> Grid:
    return float(value) if np.ndim(value) == 0 else value


def _evaluate(psd: PhasePsd, omega: NDArray[np.float64]) -> NDArray[np.float64]:
    if callable(psd):
        return np.asarray(psd(omega), dtype=float)
    return np.broadcast_to(np.asarray(psd, dtype=float), omega.shape).astype(float)


def phase_variance(white_freq_noise: float, t: Grid) -> Grid:
    """Phase diffusion C·|t| (rad²)."""
    if white_freq_noise < 0:
        raise DomainError(f"Frequency-noise level must be non-negative, got {white_freq_noise}")
    return _as_output(white_freq_noise * np.abs(np.asarray(t, dtype=float)))


def lineshape_white_noise(white_freq_noise: float, omega: Grid, power: float = 1.0) -> Grid:
    """Lorentzian field spectrum |α|²·4C/(C² + 4ω²) around the carrier.

    Raises:
        DomainError: If C is not positive; the noiseless line is a delta function
    """
    if white_freq_noise <= 0:
        raise DomainError("Lineshape needs a positive frequency-noise level; C = 0 is a delta line")
    w = np.asarray(omega, dtype=float)
    c = white_freq_noise
    return _as_output(power * 4.0 * c / (c**2 + 4.0 * w**2))


def lineshape_from_autocorrelation(
    white_freq_noise: float, omega: Grid, power: float = 1.0
) -> Grid:
    """Fourier transform of the field autocorrelation |α|²·exp(−C|τ|/2), by quadrature.

    Independent of the closed form in ``lineshape_white_noise``; the two agree for white
    frequency noise.
    """
    if white_freq_noise <= 0:
        raise DomainError("Lineshape needs a positive frequency-noise level; C = 0 is a delta line")
    half_rate = white_freq_noise / 2.0

    def envelope(tau: float) -> float:
        return math.exp(-half_rate * tau)

    def one(w: float) -> float:
        if w == 0.0:
            value, _ = integrate.quad(envelope, 0.0, np.inf)
        else:
            value, _ = integrate.quad(envelope, 0.0, np.inf, weight="cos", wvar=abs(w))
        return 2.0 * power * value

    w = np.asarray(omega, dtype=float)
    if w.ndim == 0:
        return one(float(w))
    return np.array([one(float(v)) for v in w.ravel()]).reshape(w.shape)


def white_phase_psd(white_freq_noise: float, omega: Grid) -> Grid:
    """S_φφ(Ω) = C/Ω² for white frequency noise.

    Raises:
        DomainError: If the grid contains Ω = 0
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w == 0):
        raise DomainError("Phase-noise PSD of white frequency noise diverges at Ω = 0")
    return _as_output(white_freq_noise / w**2)


def intensity_psd(
    efficiency: float,
    photon_flux: Grid,
    excess_psd: PhasePsd,
    omega: Grid,
    detector_gain: float = 1.0,
) -> Grid:
    """Direct-detection photocurrent PSD G²(η²|α|² + η²|α|⁴·S_NN(Ω)).

    The first term is the shot-noise floor and is linear in optical power; excess intensity
    noise grows quadratically.

    Args:
        efficiency: Detector efficiency η
        photon_flux: |α|² (photons/s); scalar or array, broadcast against ``omega``
        excess_psd: S_NN as a constant or a function of Ω (1/Hz)
        omega: Angular offset Ω (rad/s)
        detector_gain: Current gain G

    Raises:
        DomainError: If η lies outside [0, 1] or the flux is negative
    """
    if not 0.0 <= efficiency <= 1.0:
        raise DomainError(f"Detector efficiency must lie in [0, 1], got {efficiency}")
    flux = np.asarray(photon_flux, dtype=float)
    if np.any(flux < 0):
        raise DomainError("Photon flux must be non-negative")
    w = np.asarray(omega, dtype=float)
    s_nn = _evaluate(excess_psd, w)
    psd = detector_gain**2 * efficiency**2 * (flux + flux**2 * s_nn)
    return _as_output(psd)


def mzi_shot_level(setup: MziSetup, photon_flux: float, efficiency: float = 1.0) -> float:
    """Shot-noise reference η²|α|²·sin²(ω_L L/2c) at the MZI output."""
    return efficiency**2 * photon_flux * math.sin(setup.operating_point / 2.0) ** 2


def _sensitivity(
    setup: MziSetup, photon_flux: float, omega: NDArray[np.float64]
) -> NDArray[np.float64]:
    """|α|⁴·16 sin²(ω_L L/c) sin²(Ω nL/2c) without the η² factor."""
    return (
        photon_flux**2
        * 16.0
        * math.sin(setup.operating_point) ** 2
        * np.sin(omega * setup.delay / 2.0) ** 2
    )


def mzi_phase_psd(
    setup: MziSetup,
    phase_psd: PhasePsd,
    photon_flux: float,
    efficiency: float,
    omega: Grid,
) -> Grid:
    """Photocurrent PSD behind the unbalanced MZI in the small-phase-noise regime.

    S_II(Ω) = η²|α|²sin²(ω_L L/2c) + η²|α|⁴·16 sin²(ω_L L/c) sin²(Ω nL/2c)·S_φφ(Ω)

    The noise term vanishes at every multiple of the MZI FSR.
    """
    if not 0.0 <= efficiency <= 1.0:
        raise DomainError(f"Detector efficiency must lie in [0, 1], got {efficiency}")
    if photon_flux < 0:
        raise DomainError(f"Photon flux must be non-negative, got {photon_flux}")
    if math.isclose(math.sin(setup.operating_point), 0.0, abs_tol=1e-12):
        logger.warning(
            "mzi_zero_sensitivity", operating_point=setup.operating_point, fsr_hz=setup.fsr
        )
    w = np.asarray(omega, dtype=float)
    s_phi = _evaluate(phase_psd, w)
    shot = mzi_shot_level(setup, photon_flux, efficiency)
    psd = shot + efficiency**2 * _sensitivity(setup, photon_flux, w) * s_phi
    return _as_output(psd)


@dataclass(frozen=True)
class PhaseNoiseExtraction:
    """Recovered S_φφ on the usable bins and the frequencies (Hz) that were masked."""

    trace: SpectrumTrace
    masked_freqs: list[float] = field(default_factory=list)


def extract_phase_psd(
    measured: SpectrumTrace,
    setup: MziSetup,
    photon_flux: float,
    shot_ref: Optional[float] = None,
    guard_fraction: float = DEFAULT_GUARD_FRACTION,
) -> PhaseNoiseExtraction:
    """Invert ``mzi_phase_psd`` for S_φφ.

    S_φφ = (S/shot − 1)·sin²(ω_L L/2c) / (|α|²·16 sin²(ω_L L/c) sin²(Ω nL/2c))

    The detector efficiency cancels once the trace is normalized by its shot level.

    Args:
        measured: Raw photocurrent PSD (needs ``shot_ref``) or a shot-normalized trace
        setup: MZI geometry and operating point
        photon_flux: |α|² incident on the MZI (photons/s)
        shot_ref: Shot-noise PSD level for raw traces
        guard_fraction: Half-width of the masked band around FSR multiples, in FSR units

    Returns:
        PhaseNoiseExtraction with the S_φφ trace and the masked bins

    Raises:
        DomainError: If the operating point has no phase sensitivity or inputs are invalid
        InsufficientDataError: If every bin is masked
    """
    if photon_flux <= 0:
        raise DomainError(f"Photon flux must be positive, got {photon_flux}")
    if not 0.0 <= guard_fraction < 0.5:
        raise DomainError(f"Guard fraction must lie in [0, 0.5), got {guard_fraction}")
    sin_op = math.sin(setup.operating_point)
    if math.isclose(sin_op, 0.0, abs_tol=1e-12):
        raise DomainError("MZI operating point has zero phase sensitivity")

    if measured.unit is TraceUnit.RAW_PSD:
        if shot_ref is None or shot_ref <= 0:
            raise DomainError("A positive shot reference is required for raw PSD traces")
        ratio = measured.values / shot_ref
    else:
        ratio = measured.to_linear().values

    freqs = measured.freqs
    fsr = setup.fsr
    cycles = freqs / fsr
    distance = np.abs(cycles - np.round(cycles))
    masked = (freqs <= 0) | (distance < guard_fraction)
    if np.all(masked):
        raise InsufficientDataError("Every bin lies within the guard band of an MZI null")

    keep = ~masked
    omega = hz_to_angular(freqs[keep])
    # The shot-normalized ratio carries one power of |α|² less than the sensitivity.
    s_phi = (
        (ratio[keep] - 1.0)
        * photon_flux
        * math.sin(setup.operating_point / 2.0) ** 2
        / _sensitivity(setup, photon_flux, omega)
    )
    masked_freqs = [float(f) for f in freqs[masked]]
    if masked_freqs:
        logger.info("mzi_bins_masked", count=len(masked_freqs), fsr_hz=fsr)
    trace = SpectrumTrace(
        freqs[keep],
        s_phi,
        TraceUnit.RAW_PSD,
        {
            **measured.metadata,
            "quantity": "phase_psd",
            "convention": "two-sided, per unit angular frequency",
            "mzi_fsr_hz": fsr,
        },
    )
    return PhaseNoiseExtraction(trace=trace, masked_freqs=masked_freqs)


def linewidth_from_phase_psd(trace: SpectrumTrace) -> tuple[float, float]:
    """Estimate C as the least-squares constant through S_φφ(Ω)·Ω².

    Returns:
        (C in rad²/s, linewidth C/2π in Hz)
    """
    omega = hz_to_angular(trace.freqs)
    if np.any(omega <= 0):
        raise DomainError("Phase-noise trace must lie at positive frequencies")
    c = float(np.mean(trace.values * omega**2))
    return c, angular_to_hz(c)
