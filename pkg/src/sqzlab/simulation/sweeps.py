"""Simulated measurement sweeps: LO phase, LO power and sideband frequency.

Every sweep follows the measurement recipe: the signal, a shot-noise reference (x = 0) and an
electronic-noise reference (LO blocked) are recorded separately, band-averaged and combined as
(signal − electronic)/(shot − electronic).

Each run owns the random streams of its run index, so the thread pool size never changes a
result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np
import structlog
from numpy.typing import NDArray

from sqzlab.config import get_settings
from sqzlab.errors import InconsistentDataError
from sqzlab.models import (
    CavityParams,
    LossChain,
    PumpState,
    QuadratureTrace,
    SimConfig,
    SpectrumTrace,
    TraceUnit,
)
from sqzlab.observability.metrics import SIMULATION_RUNS_TOTAL
from sqzlab.simulation.detection import (
    balanced_detect,
    band_average,
    electronic_noise_series,
    welch_psd,
)
from sqzlab.simulation.langevin import drift_matrix, simulate_cavity, stationary_covariance
from sqzlab.simulation.rng import RunStreams
from sqzlab.units import to_db

logger = structlog.get_logger(__name__)

R = TypeVar("R")

DEFAULT_BAND = (58e6, 60e6)


@dataclass(frozen=True)
class PhaseSweepRow:
    voltage: float
    theta: float
    psd_linear: float
    psd_db: float


@dataclass(frozen=True)
class ShotNoiseRow:
    lo_power: float
    psd_total: float
    psd_electronic_subtracted: float


def _run_all(task: Callable[[int], R], count: int, threads: Optional[int]) -> list[R]:
    workers = threads if threads is not None else get_settings().threads
    if workers <= 1 or count <= 1:
        return [task(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(workers, count)) as pool:
        return list(pool.map(task, range(count)))


def _record_average(record: Callable[[int], SpectrumTrace], records: int) -> SpectrumTrace:
    """Mean of the Welch PSDs of ``records`` independent records, as trace averaging does."""
    traces = [record(k) for k in range(records)]
    first = traces[0]
    if records == 1:
        return first
    values = np.mean([trace.values for trace in traces], axis=0)
    metadata = {
        **first.metadata,
        "records": records,
        "segments": sum(int(t.metadata.get("segments", 0)) for t in traces),
    }
    return SpectrumTrace(first.freqs, values, first.unit, metadata)


def _detected_psd(
    cavity: CavityParams,
    pump: PumpState,
    chain: LossChain,
    cfg: SimConfig,
    run_index: int,
) -> SpectrumTrace:
    def record(k: int) -> SpectrumTrace:
        streams = RunStreams.for_run(cfg.seed, run_index, k)
        trace = simulate_cavity(cavity, pump, cfg, streams.cavity)
        current = balanced_detect(trace, chain, cfg, streams.detection, streams.electronic)
        return welch_psd(current, cfg)

    return _record_average(record, cfg.records)


def _electronic_psd(cfg: SimConfig, run_index: int) -> SpectrumTrace:
    samples = int(round(cfg.duration / cfg.dt))

    def record(k: int) -> SpectrumTrace:
        streams = RunStreams.for_run(cfg.seed, run_index, k)
        return welch_psd(electronic_noise_series(samples, cfg, streams.electronic), cfg)

    return _record_average(record, cfg.records)


def vacuum_trace(samples: int, cfg: SimConfig, rng: np.random.Generator) -> QuadratureTrace:
    """Output field of an unpumped cavity: vacuum with two-sided PSD one in both quadratures."""
    sigma = 1.0 / math.sqrt(cfg.dt)
    return QuadratureTrace(
        times=cfg.dt * np.arange(samples),
        x=sigma * rng.standard_normal(samples),
        y=sigma * rng.standard_normal(samples),
        metadata={"pump_ratio": 0.0},
    )


def squeezed_lo_phase(cavity: CavityParams, pump: PumpState) -> float:
    """LO phase θ in [0, π) that detects the least noisy quadrature of the stationary state."""
    covariance = stationary_covariance(drift_matrix(cavity, pump), cavity)
    values, vectors = np.linalg.eigh(covariance)
    direction = vectors[:, int(np.argmin(values))]
    return float(math.atan2(direction[1], direction[0]) % math.pi)


def _normalized(signal_level: float, shot_level: float, electronic_level: float) -> float:
    numerator = signal_level - electronic_level
    denominator = shot_level - electronic_level
    if numerator <= 0 or denominator <= 0:
        raise InconsistentDataError(
            "Electronic noise reference exceeds the signal; cannot subtract it"
        )
    return numerator / denominator


def phase_sweep(
    cavity: CavityParams,
    pump: PumpState,
    chain: LossChain,
    cfg: SimConfig,
    voltages: Sequence[float],
    band: tuple[float, float] = DEFAULT_BAND,
    threads: Optional[int] = None,
) -> list[PhaseSweepRow]:
    """Band-averaged noise versus phase-shifter voltage, shot-normalized, electronics subtracted.

    Args:
        cavity: OPO cavity
        pump: Pump state
        chain: Loss chain; its post-cavity efficiency is applied at the detector
        cfg: Simulation settings; ``lo_voltage`` is overridden per row
        voltages: Phase-shifter voltages (V)
        band: Analysis band (Hz)
        threads: Worker count; SQZLAB_THREADS when omitted

    Returns:
        One row per voltage, in input order
    """
    SIMULATION_RUNS_TOTAL.labels(mode="phase-sweep").inc()
    count = len(voltages)
    shot_pump = PumpState.from_ratio(cavity, 0.0, nonlinear_rate=pump.nonlinear_rate)

    def task(index: int) -> SpectrumTrace:
        if index < count:
            run_cfg = cfg.model_copy(update={"lo_voltage": float(voltages[index])})
            return _detected_psd(cavity, pump, chain, run_cfg, index)
        if index == count:
            return _detected_psd(cavity, shot_pump, chain, cfg, index)
        return _electronic_psd(cfg, index)

    traces = _run_all(task, count + 2, threads)
    shot_level = band_average(traces[count], band)
    electronic_level = band_average(traces[count + 1], band)

    rows = []
    for voltage, trace in zip(voltages, traces[:count]):
        ratio = _normalized(band_average(trace, band), shot_level, electronic_level)
        theta = math.pi * float(voltage) / cfg.v_pi
        rows.append(PhaseSweepRow(float(voltage), theta, ratio, float(to_db(ratio))))
    logger.info("phase_sweep_finished", rows=len(rows), band=band)
    return rows


def shotnoise_sweep(
    lo_powers: Sequence[float],
    cfg: SimConfig,
    band: tuple[float, float] = DEFAULT_BAND,
    threads: Optional[int] = None,
) -> list[ShotNoiseRow]:
    """Band-averaged photocurrent PSD versus LO power with the signal port in vacuum.

    Returns:
        Rows with the total PSD and the PSD after subtracting the electronic reference
    """
    SIMULATION_RUNS_TOTAL.labels(mode="shot-sweep").inc()
    count = len(lo_powers)
    samples = int(round(cfg.duration / cfg.dt))
    lossless = LossChain.lossless()

    def task(index: int) -> SpectrumTrace:
        if index == count:
            return _electronic_psd(cfg, index)
        run_cfg = cfg.model_copy(update={"lo_power": float(lo_powers[index])})

        def record(k: int) -> SpectrumTrace:
            streams = RunStreams.for_run(cfg.seed, index, k)
            trace = vacuum_trace(samples, run_cfg, streams.cavity)
            current = balanced_detect(
                trace, lossless, run_cfg, streams.detection, streams.electronic
            )
            return welch_psd(current, run_cfg)

        return _record_average(record, cfg.records)

    traces = _run_all(task, count + 1, threads)
    electronic_level = band_average(traces[count], band)
    rows = []
    for power, trace in zip(lo_powers, traces[:count]):
        total = band_average(trace, band)
        rows.append(ShotNoiseRow(float(power), total, total - electronic_level))
    return rows


def spectrum_sweep(
    cavity: CavityParams,
    pump: PumpState,
    chain: LossChain,
    cfg: SimConfig,
    fmin: float,
    fmax: float,
    threads: Optional[int] = None,
) -> tuple[SpectrumTrace, SpectrumTrace]:
    """Simulated squeezed and anti-squeezed spectra between ``fmin`` and ``fmax`` (Hz).

    Returns:
        (squeezed, anti-squeezed) shot-normalized dB traces on the Welch bins of the window
    """
    SIMULATION_RUNS_TOTAL.labels(mode="spectrum").inc()
    squeezed_theta = squeezed_lo_phase(cavity, pump)
    thetas = [squeezed_theta, (squeezed_theta + math.pi / 2) % math.pi]
    shot_pump = PumpState.from_ratio(cavity, 0.0, nonlinear_rate=pump.nonlinear_rate)

    def task(index: int) -> SpectrumTrace:
        if index < 2:
            run_cfg = cfg.model_copy(update={"lo_phase": thetas[index], "lo_voltage": None})
            return _detected_psd(cavity, pump, chain, run_cfg, index)
        if index == 2:
            return _detected_psd(cavity, shot_pump, chain, cfg, index)
        return _electronic_psd(cfg, index)

    squeezed, anti, shot, electronic = _run_all(task, 4, threads)
    mask = (shot.freqs >= fmin) & (shot.freqs <= fmax)
    if not np.any(mask):
        raise InconsistentDataError(f"No Welch bins between {fmin:.6g} and {fmax:.6g} Hz")
    freqs = shot.freqs[mask]
    reference = shot.values[mask] - electronic.values[mask]

    def normalize(trace: SpectrumTrace, label: str, theta: float) -> SpectrumTrace:
        signal_part = trace.values[mask] - electronic.values[mask]
        ratio: NDArray[np.float64] = signal_part / reference
        if np.any(ratio <= 0):
            raise InconsistentDataError("Electronic noise reference exceeds the signal in a bin")
        return SpectrumTrace(
            freqs,
            to_db(ratio),
            TraceUnit.SHOT_NORMALIZED_DB,
            {
                **trace.metadata,
                "source": "simulation",
                "quadrature": label,
                "lo_phase": theta,
                "pump_ratio": pump.ratio_for(cavity),
                "seed": cfg.seed,
            },
        )

    return (
        normalize(squeezed, "squeezed", thetas[0]),
        normalize(anti, "anti_squeezed", thetas[1]),
    )
