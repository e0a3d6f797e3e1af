"""Balanced homodyne detection and spectrum-analyzer emulation.

Photocurrent series are expressed in units of the shot noise at the reference LO power: a
vacuum input at ``reference_lo_power`` and unit detector gain gives a white series with
two-sided PSD of one. The detector response is a single-pole low-pass at
``detector_bandwidth``; electronic noise is added before it, as in a transimpedance stage.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy import signal

from sqzlab.errors import InsufficientDataError
from sqzlab.models import LossChain, QuadratureTrace, SimConfig, SpectrumTrace, TraceUnit
from sqzlab.physics.rates import total_efficiency

logger = structlog.get_logger(__name__)

WELCH_CONVENTION = "one-sided density; unit-variance white noise reads 1/B with B = fs/2"


def _detector_response(series: NDArray[np.float64], cfg: SimConfig) -> NDArray[np.float64]:
    bandwidth = cfg.detector_bandwidth
    if bandwidth is None or bandwidth >= cfg.sample_rate / 2:
        return series
    b, a = signal.butter(1, bandwidth, btype="low", fs=cfg.sample_rate)
    return signal.lfilter(b, a, series)


def _excess_series(
    samples: int, cfg: SimConfig, rng: np.random.Generator
) -> Optional[NDArray[np.float64]]:
    """White noise shaped to the optional excess-noise table (PSD relative to shot noise)."""
    if not cfg.excess_noise_psd:
        return None
    table = sorted(cfg.excess_noise_psd)
    grid = np.array([f for f, _ in table])
    levels = np.array([p for _, p in table])
    white = rng.standard_normal(samples) / math.sqrt(cfg.dt)
    freqs = np.fft.rfftfreq(samples, d=cfg.dt)
    shape = np.sqrt(np.interp(freqs, grid, levels, left=levels[0], right=0.0))
    return np.fft.irfft(np.fft.rfft(white) * shape, n=samples)


def electronic_noise_series(
    samples: int, cfg: SimConfig, rng: Optional[np.random.Generator] = None
) -> NDArray[np.float64]:
    """Electronic-noise-only photocurrent, as recorded with the LO blocked.

    Its PSD is ``electronic_noise_psd``·gain in shot units, independent of LO power.
    """
    generator = rng if rng is not None else np.random.default_rng(cfg.seed)
    sigma = math.sqrt(cfg.electronic_noise_psd * cfg.detector_gain / cfg.dt)
    return _detector_response(sigma * generator.standard_normal(samples), cfg)


def balanced_detect(
    out_trace: QuadratureTrace,
    vacuum_mix: LossChain,
    cfg: SimConfig,
    rng: Optional[np.random.Generator] = None,
    electronic_rng: Optional[np.random.Generator] = None,
) -> NDArray[np.float64]:
    """Photocurrent difference of a balanced homodyne detector.

    The cavity already realizes the escape efficiency through its intrinsic port, so only
    the post-cavity efficiency T·ε·∏extra of ``vacuum_mix`` is applied here:
    X_det = √η·X_out + √(1 − η)·X_vac. The LO phase selects X_θ = cos θ·X_det + sin θ·Y_det and
    the result is scaled by √(gain·P_LO/P_ref) before electronic and excess noise are added.

    Args:
        out_trace: Output-field quadratures from ``simulate_cavity``
        vacuum_mix: Loss chain; its detection efficiency mixes in vacuum
        cfg: LO power and phase, detector gain, bandwidth and noise levels
        rng: Generator for vacuum and excess noise
        electronic_rng: Generator for electronic noise

    Returns:
        Photocurrent series sampled every ``cfg.dt``
    """
    total_efficiency(vacuum_mix)
    eta = vacuum_mix.detection_efficiency
    generator = rng if rng is not None else np.random.default_rng(cfg.seed)
    samples = len(out_trace)
    vacuum_sigma = 1.0 / math.sqrt(cfg.dt)

    x_det = math.sqrt(eta) * out_trace.x + math.sqrt(1 - eta) * vacuum_sigma * (
        generator.standard_normal(samples)
    )
    y_det = math.sqrt(eta) * out_trace.y + math.sqrt(1 - eta) * vacuum_sigma * (
        generator.standard_normal(samples)
    )
    theta = cfg.theta
    quadrature = math.cos(theta) * x_det + math.sin(theta) * y_det
    current = math.sqrt(cfg.detector_gain * cfg.lo_power / cfg.reference_lo_power) * quadrature

    excess = _excess_series(samples, cfg, generator)
    if excess is not None:
        current = current + math.sqrt(cfg.detector_gain) * excess

    electronic_generator = (
        electronic_rng if electronic_rng is not None else np.random.default_rng(cfg.seed + 1)
    )
    sigma = math.sqrt(cfg.electronic_noise_psd * cfg.detector_gain / cfg.dt)
    current = current + sigma * electronic_generator.standard_normal(samples)
    return _detector_response(current, cfg)


def welch_psd(series: NDArray[np.float64], cfg: SimConfig) -> SpectrumTrace:
    """Averaged Hann-window periodogram emulating the spectrum analyzer.

    Bin width fs/nperseg is no wider than ``rbw_emulation`` unless an explicit segment length
    is configured. The DC bin is dropped so traces can be shown in dB.

    Raises:
        InsufficientDataError: If the series holds fewer than two segments
    """
    values = np.asarray(series, dtype=float)
    nperseg = cfg.segment_length()
    if values.size < 2 * nperseg:
        raise InsufficientDataError(
            f"Series of {values.size} samples is shorter than two segments of {nperseg}"
        )
    noverlap = int(nperseg * cfg.welch.overlap)
    freqs, psd = signal.welch(
        values,
        fs=cfg.sample_rate,
        window=cfg.welch.window,
        nperseg=nperseg,
        noverlap=noverlap,
        detrend=False,
        return_onesided=True,
        scaling="density",
    )
    segments = 1 + (values.size - nperseg) // (nperseg - noverlap)
    return SpectrumTrace(
        freqs[1:],
        psd[1:],
        TraceUnit.RAW_PSD,
        {
            "convention": WELCH_CONVENTION,
            "sample_rate": cfg.sample_rate,
            "segment_length": nperseg,
            "segments": segments,
            "bin_width": cfg.sample_rate / nperseg,
        },
    )


def band_average(trace: SpectrumTrace, band: tuple[float, float]) -> float:
    """Mean PSD over bins with band[0] ≤ f ≤ band[1] (Hz).

    Raises:
        InsufficientDataError: If no bin falls inside the band
    """
    low, high = band
    mask = (trace.freqs >= low) & (trace.freqs <= high)
    if not np.any(mask):
        raise InsufficientDataError(f"No bins between {low:.6g} and {high:.6g} Hz")
    return float(np.mean(trace.values[mask]))
