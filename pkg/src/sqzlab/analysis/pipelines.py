"""Reproducible runs behind the CLI commands.

Each ``run_*`` function composes the library for one command, writes its CSV and JSON
artifacts into ``output_dir`` and finishes with a manifest recording the resolved
configuration, the options, the seed and the digests of every input and output. The options
stored in the manifest are exactly the keyword arguments of the run function, which is what
lets ``replay`` call it again.

Design Philosophy:
- No physics here: every number comes from physics/, simulation/ or estimation/
- Outputs depend only on (configuration, options, seed), never on thread count or clock
- One dict of written paths per run, manifest included
"""

from __future__ import annotations

import math
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
import structlog
from numpy.typing import NDArray

from sqzlab import fixtures
from sqzlab.artifacts.config_file import SqzlabConfig
from sqzlab.artifacts.manifest import RunManifest, read_manifest, write_manifest
from sqzlab.artifacts.traces import (
    read_spectrum_trace,
    read_table,
    read_transmission,
    write_json,
    write_spectrum_trace,
    write_table,
    write_transmission,
)
from sqzlab.errors import (
    AmbiguousLineshapeError,
    ConfigError,
    ConfigSchemaError,
    InsufficientDataError,
)
from sqzlab.estimation import (
    coupling_diagnostic,
    fit_linear_origin,
    fit_lorentzian,
    fit_shg_quadratic,
    fit_squeezing_model,
)
from sqzlab.models import MziSetup, PumpState, ShgModel, SpectrumTrace, TraceUnit
from sqzlab.physics.cavity import (
    extinction_gain,
    fwhm_numeric,
    g_beta_for_ratio,
    pole_linewidth,
    transmission_curve,
    transmission_with_gain,
)
from sqzlab.physics.laser_noise import (
    extract_phase_psd,
    lineshape_from_autocorrelation,
    lineshape_white_noise,
    linewidth_from_phase_psd,
    mzi_phase_psd,
    mzi_shot_level,
    white_phase_psd,
)
from sqzlab.physics.projection import consistency_pair, improved_threshold, project_improved
from sqzlab.physics.pump import efficiency_at, power_sweep_curve
from sqzlab.physics.rates import derive_rates
from sqzlab.physics.squeezing import measured_spectrum, spectrum_curve
from sqzlab.simulation.sweeps import phase_sweep, shotnoise_sweep, spectrum_sweep
from sqzlab.units import angular_to_hz, hz_to_angular, nm, photon_energy, to_db

logger = structlog.get_logger(__name__)

Outputs = dict[str, Path]

SPECTRUM_CURVE_COLUMNS = ["freq_hz", "s_minus_db", "s_plus_db"]
POWER_SWEEP_COLUMNS = ["p_fh_mw", "s_minus_db", "s_plus_db"]
PHASE_SWEEP_COLUMNS = ["voltage_v", "theta_rad", "psd_rel_shot", "psd_db_rel_shot"]
SHOT_SWEEP_COLUMNS = ["lo_power_mw", "psd", "psd_minus_electronic"]
SHG_SWEEP_COLUMNS = ["p_fh_mw", "p_sh_mw"]
PROJECTION_COLUMNS = [
    "p_fh_mw",
    "p_sh_mw",
    "pump_ratio",
    "above_threshold",
    "on_chip_minus_db",
    "on_chip_plus_db",
    "measured_minus_db",
    "measured_plus_db",
]
LINEWIDTH_COLUMNS = [
    "gain_ratio",
    "pole_linewidth_hz",
    "measured_fwhm_hz",
    "on_resonance_transmittance",
]
LINESHAPE_COLUMNS = ["offset_hz", "lineshape", "lineshape_numeric"]


class SimulationMode(str, Enum):
    """What ``simulate`` records."""

    PHASE_SWEEP = "phase-sweep"
    SHOT_SWEEP = "shot-sweep"
    SPECTRUM = "spectrum"


class FitModel(str, Enum):
    """Estimators reachable from ``fit``."""

    LORENTZIAN = "lorentzian"
    SHG = "shg"
    LINEAR = "linear"
    SQUEEZING = "squeezing"
    COUPLING = "coupling"


def _finish(manifest: RunManifest, outputs: Outputs, output_dir: Path) -> Outputs:
    recorded = manifest.with_outputs(outputs, output_dir)
    path = write_manifest(recorded, output_dir)
    logger.info("run_finished", command=manifest.command, outputs=len(outputs))
    return {**outputs, "manifest": path}


def _snapshot(config: Optional[SqzlabConfig]) -> Optional[dict[str, Any]]:
    return None if config is None else config.model_dump(mode="json")


def _frequency_grid(fmin: float, fmax: float, points: int) -> NDArray[np.float64]:
    if fmin < 0 or fmax < fmin:
        raise ConfigError(f"Need 0 ≤ fmin ≤ fmax, got {fmin} and {fmax}")
    if points < 1:
        raise ConfigError(f"Need at least one point, got {points}")
    if fmin == fmax or points == 1:
        return np.array([fmin])
    return np.linspace(fmin, fmax, points)


def _band_levels(
    config: SqzlabConfig, band_mhz: tuple[float, float], samples: int = 21
) -> tuple[float, float]:
    """Closed-form (squeezing, anti-squeezing) dB averaged linearly over the band."""
    cavity = config.cavity_params()
    chain = config.loss_chain(cavity)
    x = config.pump_ratio(cavity)
    omega = hz_to_angular(np.linspace(band_mhz[0], band_mhz[1], samples) * 1e6)
    spectrum = measured_spectrum(cavity, x, chain, omega)
    return (
        float(to_db(np.mean(spectrum.s_minus))),
        float(to_db(np.mean(spectrum.s_plus))),
    )


def run_spectrum(
    config: SqzlabConfig,
    output_dir: Path,
    fmin_mhz: Optional[float] = None,
    fmax_mhz: Optional[float] = None,
    points: Optional[int] = None,
) -> Outputs:
    """Closed-form measured squeezing and anti-squeezing over a sideband window."""
    section = config.analysis
    fmin = section.fmin_mhz if fmin_mhz is None else fmin_mhz
    fmax = section.fmax_mhz if fmax_mhz is None else fmax_mhz
    freqs = _frequency_grid(fmin * 1e6, fmax * 1e6, section.points if points is None else points)

    cavity = config.cavity_params()
    chain = config.loss_chain(cavity)
    x = config.pump_ratio(cavity)
    squeezed, anti = spectrum_curve(cavity, x, chain, freqs)

    output_dir.mkdir(parents=True, exist_ok=True)
    spectrum_csv = write_table(
        output_dir / "spectrum.csv",
        SPECTRUM_CURVE_COLUMNS,
        zip(freqs, squeezed.values, anti.values),
        {"pump_ratio": x, "total_efficiency": chain.total_efficiency, "unit": "dB rel. shot"},
    )
    band_minus, band_plus = _band_levels(config, section.band_mhz)
    manifest = RunManifest(
        command="spectrum",
        options={"fmin_mhz": fmin, "fmax_mhz": fmax, "points": int(freqs.size)},
        config=_snapshot(config),
        results={
            "pump_ratio": x,
            "total_efficiency": chain.total_efficiency,
            "band_mhz": list(section.band_mhz),
            "band_squeezing_db": band_minus,
            "band_anti_squeezing_db": band_plus,
        },
    )
    return _finish(manifest, {"spectrum_csv": spectrum_csv}, output_dir)


def run_power_sweep(
    config: SqzlabConfig,
    output_dir: Path,
    fh_powers_mw: Optional[Sequence[float]] = None,
    freq_mhz: Optional[float] = None,
) -> Outputs:
    """Measured squeezing and anti-squeezing versus on-chip FH power at one sideband.

    Powers at or above threshold leave both dB cells empty.
    """
    section = config.analysis
    powers_mw = list(section.fh_powers_mw if fh_powers_mw is None else fh_powers_mw)
    if not powers_mw:
        raise ConfigError("power sweep needs at least one FH power")
    if freq_mhz is None:
        freq_mhz = (
            section.sweep_freq_mhz
            if section.sweep_freq_mhz is not None
            else sum(section.band_mhz) / 2
        )
    cavity = config.cavity_params()
    chain = config.loss_chain(cavity)
    threshold = config.threshold(cavity)
    rows = power_sweep_curve(
        np.asarray(powers_mw, dtype=float) * 1e-3,
        config.shg_model(),
        threshold,
        cavity,
        chain,
        hz_to_angular(freq_mhz * 1e6),
    )

    output_dir.mkdir(parents=True, exist_ok=True)
    power_sweep_csv = write_table(
        output_dir / "power_sweep.csv",
        POWER_SWEEP_COLUMNS,
        [(r.p_fh * 1e3, r.s_minus_db, r.s_plus_db) for r in rows],
        {"freq_hz": freq_mhz * 1e6, "total_efficiency": chain.total_efficiency},
    )
    below = [r for r in rows if not r.above_threshold]
    manifest = RunManifest(
        command="power-sweep",
        options={"fh_powers_mw": powers_mw, "freq_mhz": freq_mhz},
        config=_snapshot(config),
        results={
            "freq_mhz": freq_mhz,
            "total_efficiency": chain.total_efficiency,
            "max_pump_ratio": max(r.pump_ratio for r in rows),
            "above_threshold_points": len(rows) - len(below),
            "max_squeezing_db": min((r.s_minus_db or 0.0) for r in below) if below else None,
            "max_anti_squeezing_db": max((r.s_plus_db or 0.0) for r in below) if below else None,
        },
    )
    return _finish(manifest, {"power_sweep_csv": power_sweep_csv}, output_dir)


def run_simulate(
    config: SqzlabConfig,
    output_dir: Path,
    mode: Union[SimulationMode, str],
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> Outputs:
    """Monte-Carlo homodyne measurement; identical seeds give identical files.

    Args:
        config: Run configuration
        output_dir: Output directory
        mode: ``phase-sweep``, ``shot-sweep`` or ``spectrum``
        seed: Overrides the configured seed
        threads: Worker count; never changes the output
    """
    run_mode = SimulationMode(mode)
    cavity = config.cavity_params()
    chain = config.loss_chain(cavity)
    threshold = config.threshold(cavity)
    x = config.pump_ratio(cavity)
    pump = PumpState.from_ratio(
        cavity, x, nonlinear_rate=threshold.nonlinear_rate, pump_phase=config.pump.pump_phase
    )
    cfg = config.sim_config(cavity, seed)
    band = (config.analysis.band_mhz[0] * 1e6, config.analysis.band_mhz[1] * 1e6)
    output_dir.mkdir(parents=True, exist_ok=True)
    outputs: Outputs = {}
    results: dict[str, Any] = {
        "pump_ratio": x,
        "dt": cfg.dt,
        "duration": cfg.duration,
        "records": cfg.records,
    }

    if run_mode is SimulationMode.PHASE_SWEEP:
        rows = phase_sweep(cavity, pump, chain, cfg, config.simulation.voltages, band, threads)
        outputs["phase_sweep_csv"] = write_table(
            output_dir / "phase_sweep.csv",
            PHASE_SWEEP_COLUMNS,
            [(r.voltage, r.theta, r.psd_linear, r.psd_db) for r in rows],
            {"band_hz": list(band), "seed": cfg.seed},
        )
        expected_minus, expected_plus = _band_levels(config, config.analysis.band_mhz)
        results.update(
            min_db=min(r.psd_db for r in rows),
            max_db=max(r.psd_db for r in rows),
            expected_squeezing_db=expected_minus,
            expected_anti_squeezing_db=expected_plus,
        )
    elif run_mode is SimulationMode.SHOT_SWEEP:
        powers_mw = config.simulation.lo_powers_mw
        rows = shotnoise_sweep([p * 1e-3 for p in powers_mw], cfg, band, threads)
        outputs["shot_sweep_csv"] = write_table(
            output_dir / "shot_sweep.csv",
            SHOT_SWEEP_COLUMNS,
            [(p, r.psd_total, r.psd_electronic_subtracted) for p, r in zip(powers_mw, rows)],
            {"band_hz": list(band), "seed": cfg.seed},
        )
        fit = fit_linear_origin(powers_mw, [r.psd_electronic_subtracted for r in rows])
        outputs["shot_fit_json"] = write_json(
            output_dir / "shot_fit.json", fit.model_dump(mode="json")
        )
        nearest = min(rows, key=lambda r: abs(r.lo_power - cfg.reference_lo_power))
        electronic = nearest.psd_total - nearest.psd_electronic_subtracted
        results.update(
            fit_r_squared=fit.r_squared,
            slope_per_mw=fit.params["slope"],
            shot_electronic_ratio=nearest.psd_electronic_subtracted / electronic,
            ratio_lo_power_mw=nearest.lo_power * 1e3,
        )
    else:
        squeezed, anti = spectrum_sweep(
            cavity,
            pump,
            chain,
            cfg,
            config.analysis.fmin_mhz * 1e6,
            config.analysis.fmax_mhz * 1e6,
            threads,
        )
        outputs["squeezed_csv"] = write_spectrum_trace(output_dir / "squeezed.csv", squeezed)
        outputs["anti_squeezed_csv"] = write_spectrum_trace(
            output_dir / "anti_squeezed.csv", anti
        )
        results.update(
            mean_squeezing_db=float(to_db(np.mean(squeezed.to_linear().values))),
            mean_anti_squeezing_db=float(to_db(np.mean(anti.to_linear().values))),
        )

    manifest = RunManifest(
        command="simulate",
        options={"mode": run_mode.value, "seed": cfg.seed},
        config=_snapshot(config),
        seed=cfg.seed,
        results=results,
    )
    return _finish(manifest, outputs, output_dir)


def _kappa_for(traces: Sequence[SpectrumTrace], config: Optional[SqzlabConfig]) -> float:
    for trace in traces:
        linewidth = trace.metadata.get("linewidth_hz")
        if linewidth is not None:
            return hz_to_angular(float(linewidth))
    if config is None:
        raise ConfigError(
            "squeezing fit needs κ: give a configuration or traces carrying linewidth_hz"
        )
    return config.cavity_params().total_rate


def run_fit(
    config: Optional[SqzlabConfig],
    output_dir: Path,
    model: Union[FitModel, str],
    inputs: Sequence[Union[str, Path]],
) -> Outputs:
    """Fit one estimator to CSV input(s) and write the result as JSON.

    The squeezing fit takes two or more trace files; every other model takes exactly one.

    Raises:
        ColumnMismatchError: If an input header does not match the model's columns
    """
    estimator = FitModel(model)
    paths = [Path(p) for p in inputs]
    if not paths:
        raise InsufficientDataError("fit needs at least one input file")
    if estimator is not FitModel.SQUEEZING and len(paths) != 1:
        raise ConfigError(f"{estimator.value} fit takes exactly one input, got {len(paths)}")

    result: dict[str, Any]
    if estimator is FitModel.LORENTZIAN:
        curve, metadata = read_transmission(paths[0])
        wavelength_nm = metadata.get("resonance_wavelength_nm")
        if wavelength_nm is None and config is not None:
            wavelength_nm = config.cavity.resonance_wavelength_nm
        undercoupled = config.cavity.assume_undercoupled if config is not None else True
        fit = fit_lorentzian(
            curve,
            resonance_wavelength=None if wavelength_nm is None else nm(float(wavelength_nm)),
            assume_undercoupled=undercoupled,
        )
        result = fit.model_dump(mode="json")
    elif estimator is FitModel.SHG:
        table = read_table(paths[0], SHG_SWEEP_COLUMNS)
        fit = fit_shg_quadratic(table["p_fh_mw"] * 1e-3, table["p_sh_mw"] * 1e-3)
        result = fit.model_dump(mode="json")
    elif estimator is FitModel.LINEAR:
        table = read_table(paths[0], SHOT_SWEEP_COLUMNS)
        fit = fit_linear_origin(table["lo_power_mw"], table["psd_minus_electronic"])
        result = fit.model_dump(mode="json")
    elif estimator is FitModel.SQUEEZING:
        traces = [read_spectrum_trace(path) for path in paths]
        fit = fit_squeezing_model(traces, _kappa_for(traces, config))
        result = fit.model_dump(mode="json")
    else:
        curve, _ = read_transmission(paths[0])
        total_rate = config.cavity_params().total_rate if config is not None else None
        result = coupling_diagnostic(curve, total_rate).model_dump(mode="json")

    output_dir.mkdir(parents=True, exist_ok=True)
    fit_json = write_json(output_dir / "fit.json", result)
    manifest = RunManifest.for_inputs(
        "fit",
        paths,
        options={"model": estimator.value, "inputs": [p.as_posix() for p in paths]},
        config=_snapshot(config),
        results={k: v for k, v in result.items() if k in ("params", "derived", "regime")},
    )
    return _finish(manifest, {"fit_json": fit_json}, output_dir)


def run_project(
    config: SqzlabConfig,
    output_dir: Path,
    fh_powers_mw: Optional[Sequence[float]] = None,
) -> Outputs:
    """Projected squeezing of the improved device versus on-chip FH power.

    The improved threshold follows from the calibrated one with g ∝ √η_norm and the improved
    κ. Grid points at or above threshold are flagged and left empty.
    """
    section = config.projection
    wavelength = nm(config.cavity.resonance_wavelength_nm)
    calibrated_cavity = config.cavity_params()
    improved_cavity = derive_rates(
        section.q_total, section.q_intrinsic, wavelength, fsr=calibrated_cavity.fsr
    )
    threshold = improved_threshold(
        config.threshold(calibrated_cavity),
        section.reference_efficiency,
        section.normalized_efficiency,
        improved_cavity,
    )
    shg = ShgModel(
        normalized_efficiency=section.normalized_efficiency, response_nm=config.shg.response_nm
    )
    powers_mw = list(section.fh_powers_mw if fh_powers_mw is None else fh_powers_mw)
    rows = project_improved(
        np.asarray(powers_mw, dtype=float) * 1e-3,
        shg,
        threshold,
        improved_cavity,
        path_transmission=section.path_transmission,
        detector_qe=section.detector_qe,
    )
    pair = consistency_pair(section.target_db, improved_cavity.escape_efficiency)
    threshold_fh = math.sqrt(threshold.p_th_sh / efficiency_at(shg, wavelength))

    output_dir.mkdir(parents=True, exist_ok=True)
    projection_csv = write_table(
        output_dir / "projection.csv",
        PROJECTION_COLUMNS,
        [
            (
                r.p_fh * 1e3,
                r.p_sh * 1e3,
                r.pump_ratio,
                r.above_threshold,
                r.on_chip_minus_db,
                r.on_chip_plus_db,
                r.measured_minus_db,
                r.measured_plus_db,
            )
            for r in rows
        ],
        {"threshold_fh_mw": threshold_fh * 1e3, "threshold_sh_mw": threshold.p_th_sh * 1e3},
    )
    manifest = RunManifest(
        command="project",
        options={"fh_powers_mw": powers_mw},
        config=_snapshot(config),
        results={
            "escape_efficiency": improved_cavity.escape_efficiency,
            "threshold_sh_mw": threshold.p_th_sh * 1e3,
            "threshold_fh_mw": threshold_fh * 1e3,
            "above_threshold_points": sum(r.above_threshold for r in rows),
            "consistency": {
                "target_db": section.target_db,
                "pump_ratio": pair.pump_ratio,
                "squeezing_db": pair.squeezing_db,
                "anti_squeezing_db": pair.anti_squeezing_db,
            },
        },
    )
    return _finish(manifest, {"projection_csv": projection_csv}, output_dir)


def run_transmission(
    config: SqzlabConfig,
    output_dir: Path,
    gain_ratios: Optional[Sequence[float]] = None,
) -> Outputs:
    """Transmission curves under parametric gain and the linewidth table.

    The measured FWHM is left empty where the line has no single measurable extremum.
    """
    section = config.transmission
    cavity = config.cavity_params()
    ratios = list(section.gain_ratios if gain_ratios is None else gain_ratios)
    half_span = section.span_linewidths * cavity.total_rate
    detunings = np.linspace(-half_span, half_span, section.points)

    output_dir.mkdir(parents=True, exist_ok=True)
    outputs: Outputs = {}
    table_rows = []
    for ratio in ratios:
        g_beta = g_beta_for_ratio(cavity, ratio)
        curve = transmission_curve(cavity, g_beta, detunings)
        name = f"transmission_G{ratio:.3f}"
        outputs[name] = write_transmission(
            output_dir / f"{name}.csv", curve, {"gain_ratio": ratio}
        )
        try:
            measured: Optional[float] = angular_to_hz(fwhm_numeric(curve))
        except AmbiguousLineshapeError as exc:
            logger.warning("fwhm_unmeasurable", gain_ratio=ratio, reason=str(exc))
            measured = None
        on_resonance, _ = transmission_with_gain(cavity, g_beta, 0.0)
        table_rows.append(
            (ratio, angular_to_hz(pole_linewidth(cavity, g_beta)), measured, on_resonance)
        )
    outputs["linewidths_csv"] = write_table(
        output_dir / "linewidths.csv", LINEWIDTH_COLUMNS, table_rows
    )
    zero_gain = extinction_gain(cavity)
    manifest = RunManifest(
        command="transmission",
        options={"gain_ratios": ratios},
        config=_snapshot(config),
        results={
            "escape_efficiency": cavity.escape_efficiency,
            "cold_linewidth_hz": cavity.linewidth_hz,
            "extinction_gain": zero_gain,
        },
    )
    return _finish(manifest, outputs, output_dir)


def run_laser_noise(config: SqzlabConfig, output_dir: Path) -> Outputs:
    """Lineshape, MZI photocurrent PSD and the phase-noise PSD recovered from it.

    Bins masked around MZI nulls are listed in ``masked_bins.json``.
    """
    section = config.laser
    c = hz_to_angular(section.linewidth_hz)
    offsets = np.linspace(-10.0, 10.0, 201) * section.linewidth_hz
    omega_line = hz_to_angular(offsets)

    setup = MziSetup.from_fsr(
        section.mzi_fsr_mhz * 1e6, section.mzi_path_diff_m, section.operating_point
    )
    flux = section.power_mw * 1e-3 / photon_energy(nm(config.cavity.resonance_wavelength_nm))
    freqs = _frequency_grid(section.fmin_mhz * 1e6, section.fmax_mhz * 1e6, section.points)
    omega = hz_to_angular(freqs)

    def phase_psd(w: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.asarray(white_phase_psd(c, w))

    psd = np.asarray(mzi_phase_psd(setup, phase_psd, flux, section.detector_efficiency, omega))
    shot = mzi_shot_level(setup, flux, section.detector_efficiency)
    measured = SpectrumTrace(
        freqs,
        psd,
        TraceUnit.RAW_PSD,
        {"quantity": "mzi_photocurrent_psd", "shot_level": shot, "mzi_fsr_hz": setup.fsr},
    )
    extraction = extract_phase_psd(measured, setup, flux, shot_ref=shot)
    c_fit, linewidth = linewidth_from_phase_psd(extraction.trace)

    output_dir.mkdir(parents=True, exist_ok=True)
    outputs: Outputs = {
        "lineshape_csv": write_table(
            output_dir / "lineshape.csv",
            LINESHAPE_COLUMNS,
            zip(
                offsets,
                np.asarray(lineshape_white_noise(c, omega_line)),
                np.asarray(lineshape_from_autocorrelation(c, omega_line)),
            ),
            {"linewidth_hz": section.linewidth_hz},
        ),
        "mzi_psd_csv": write_spectrum_trace(output_dir / "mzi_psd.csv", measured),
        "phase_psd_csv": write_spectrum_trace(output_dir / "phase_psd.csv", extraction.trace),
        "masked_bins_json": write_json(
            output_dir / "masked_bins.json",
            {"mzi_fsr_hz": setup.fsr, "masked_freqs_hz": extraction.masked_freqs},
        ),
    }
    manifest = RunManifest(
        command="laser-noise",
        config=_snapshot(config),
        results={
            "injected_linewidth_hz": section.linewidth_hz,
            "recovered_linewidth_hz": linewidth,
            "white_freq_noise": c_fit,
            "masked_bins": len(extraction.masked_freqs),
        },
    )
    return _finish(manifest, outputs, output_dir)


def run_fixtures(
    config: Optional[SqzlabConfig],
    output_dir: Path,
    noise: float = 0.0,
    seed: int = 0,
) -> Outputs:
    """Write the synthetic measurement fixtures of the reference device."""
    cavity = fixtures.reference_cavity()
    wavelength_nm = cavity.resonance_wavelength * 1e9
    output_dir.mkdir(parents=True, exist_ok=True)
    resonance_metadata = {
        "resonance_wavelength_nm": wavelength_nm,
        "q_total": fixtures.REFERENCE_Q_TOTAL,
        "q_intrinsic": fixtures.REFERENCE_Q_INTRINSIC,
        "noise": noise,
    }
    shg = fixtures.shg_sweep(noise=noise, seed=seed)
    shot = fixtures.shot_noise_sweep(noise=noise, seed=seed)
    squeezed, anti = fixtures.squeezing_spectra(cavity, noise=noise, seed=seed)
    outputs: Outputs = {
        "resonance_csv": write_transmission(
            output_dir / "resonance.csv",
            fixtures.resonance_trace(cavity, noise=noise, seed=seed),
            resonance_metadata,
        ),
        "shg_sweep_csv": write_table(
            output_dir / "shg_sweep.csv",
            SHG_SWEEP_COLUMNS,
            zip(shg.p_fh * 1e3, shg.p_sh * 1e3),
            {"normalized_efficiency": fixtures.REFERENCE_SHG_EFFICIENCY, "noise": noise},
        ),
        "shot_sweep_csv": write_table(
            output_dir / "shot_sweep.csv",
            SHOT_SWEEP_COLUMNS,
            zip(shot.lo_power * 1e3, shot.psd, shot.psd_minus_electronic),
            {"noise": noise},
        ),
        "squeezed_csv": write_spectrum_trace(output_dir / "squeezed.csv", squeezed),
        "anti_squeezed_csv": write_spectrum_trace(output_dir / "anti_squeezed.csv", anti),
        "phase_response_csv": write_transmission(
            output_dir / "phase_response.csv",
            fixtures.phase_response(cavity, noise=noise, seed=seed),
            resonance_metadata,
        ),
    }
    manifest = RunManifest(
        command="fixtures",
        options={"noise": noise, "seed": seed},
        config=_snapshot(config),
        seed=seed,
    )
    return _finish(manifest, outputs, output_dir)


RUNNERS: dict[str, Callable[..., Outputs]] = {
    "spectrum": run_spectrum,
    "power-sweep": run_power_sweep,
    "simulate": run_simulate,
    "fit": run_fit,
    "project": run_project,
    "transmission": run_transmission,
    "laser-noise": run_laser_noise,
    "fixtures": run_fixtures,
}
_CONFIG_OPTIONAL = {"fit", "fixtures"}


def replay(manifest_path: Path, output_dir: Path) -> tuple[Outputs, list[str]]:
    """Re-run a recorded command into ``output_dir``.

    Returns:
        (written paths, names of outputs whose digests differ from the recording)

    Raises:
        ConfigSchemaError: If the manifest names an unknown command
        InconsistentDataError: If a recorded input changed since the run
    """
    recorded = read_manifest(manifest_path)
    runner = RUNNERS.get(recorded.command)
    if runner is None:
        raise ConfigSchemaError(f"unknown command '{recorded.command}'", "command")
    recorded.check_inputs()
    if recorded.config is None and recorded.command not in _CONFIG_OPTIONAL:
        raise ConfigSchemaError("manifest holds no configuration snapshot", "config")
    config = None if recorded.config is None else SqzlabConfig.model_validate(recorded.config)
    outputs = runner(config, output_dir, **recorded.options)
    replayed = read_manifest(outputs["manifest"])
    differing = recorded.differing_outputs(replayed)
    if differing:
        logger.warning("replay_differs", outputs=differing)
    return outputs, differing
