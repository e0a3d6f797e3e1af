"""Tests for the Langevin simulation, homodyne detection and simulated sweeps."""

import math

import numpy as np
import pytest
from scipy import linalg

from sqzlab.errors import DivergenceError, StabilityError
from sqzlab.estimation import fit_linear_origin
from sqzlab.models import CavityParams, Integrator, LossChain, PumpState, SimConfig, WelchConfig
from sqzlab.physics.squeezing import measured_spectrum
from sqzlab.simulation import (
    RunStreams,
    balanced_detect,
    band_average,
    drift_matrix,
    electronic_noise_series,
    phase_sweep,
    propagate_mean,
    shotnoise_sweep,
    simulate_cavity,
    spectrum_sweep,
    squeezed_lo_phase,
    welch_psd,
)
from sqzlab.simulation.langevin import MAX_STEP_FRACTION, stationary_covariance
from sqzlab.units import hz_to_angular, nm

LINEWIDTH = 1e6
KAPPA = hz_to_angular(LINEWIDTH)


def _cavity(escape_efficiency: float = 0.8) -> CavityParams:
    return CavityParams.from_rates(
        resonance_wavelength=nm(1544.4),
        external_rate=escape_efficiency * KAPPA,
        intrinsic_rate=(1 - escape_efficiency) * KAPPA,
        fsr=hz_to_angular(5.7e9),
    )


def _config(cavity: CavityParams, segment: int, segments: int, **fields: object) -> SimConfig:
    dt = MAX_STEP_FRACTION * 2 * math.pi / cavity.total_rate
    settings: dict[str, object] = {
        "electronic_noise_psd": 0.0,
        "detector_bandwidth": None,
        **fields,
    }
    return SimConfig(
        dt=dt,
        duration=segment * segments * dt,
        welch=WelchConfig(segment_length=segment),
        **settings,
    )


def test_drift_matrix_squeezes_x_quadrature() -> None:
    """Test the drift and stationary covariance for φ_β = −π/2 on resonance."""
    cavity = _cavity()
    pump = PumpState.from_ratio(cavity, 0.5)
    drift = drift_matrix(cavity, pump)
    np.testing.assert_allclose(drift, np.diag([-0.75 * KAPPA, -0.25 * KAPPA]), atol=1e-6)
    covariance = stationary_covariance(drift, cavity)
    np.testing.assert_allclose(np.diag(covariance), [1 / 1.5, 1 / 0.5], rtol=1e-10)
    assert math.sin(squeezed_lo_phase(cavity, pump)) == pytest.approx(0.0, abs=1e-9)


def test_mean_field_follows_drift_exponential() -> None:
    """Test the ODE integration of the mean field against e^{A·t}."""
    cavity = _cavity().with_detuning(0.3 * KAPPA)
    pump = PumpState.from_ratio(cavity, 0.4, pump_phase=0.2)
    amplitude = complex(0.3, 0.1)
    times = np.linspace(0.0, 5.0 / KAPPA, 11)
    means = propagate_mean(cavity, pump, amplitude, times)
    drift = drift_matrix(cavity, pump)
    start = np.array([2 * amplitude.real, 2 * amplitude.imag])
    expected = np.column_stack([linalg.expm(drift * t) @ start for t in times])
    np.testing.assert_allclose(means, expected, rtol=1e-7, atol=1e-10)


def test_vacuum_output_is_shot_noise() -> None:
    """Test that an unpumped cavity emits vacuum: one-sided Welch level of two."""
    cavity = _cavity()
    cfg = _config(cavity, 256, 400)
    vacuum = PumpState.from_ratio(cavity, 0.0)
    trace = simulate_cavity(cavity, vacuum, cfg, np.random.default_rng(1))
    for quadrature in (trace.x, trace.y):
        level = band_average(welch_psd(quadrature, cfg), (0.0, 10 * LINEWIDTH))
        assert level == pytest.approx(2.0, rel=0.03)


@pytest.mark.parametrize(
    ("pump_ratio", "escape_efficiency", "path_transmission"),
    [(0.5, 1.0, 1.0), (0.4, 0.8, 0.9)],
)
@pytest.mark.parametrize("anti_squeezed", [False, True])
def test_simulated_spectrum_matches_closed_form(
    pump_ratio: float, escape_efficiency: float, path_transmission: float, anti_squeezed: bool
) -> None:
    """Test band-averaged homodyne PSD against the measured-spectrum closed form."""
    cavity = _cavity(escape_efficiency)
    pump = PumpState.from_ratio(cavity, pump_ratio)
    chain = LossChain.from_cavity(cavity, path_transmission=path_transmission)
    theta = math.pi / 2 if anti_squeezed else 0.0
    cfg = _config(cavity, 2048, 600, lo_phase=theta)
    streams = RunStreams.for_run(3)

    trace = simulate_cavity(cavity, pump, cfg, streams.cavity)
    current = balanced_detect(trace, chain, cfg, streams.detection, streams.electronic)
    psd = welch_psd(current, cfg)

    band = (0.1 * LINEWIDTH, 0.6 * LINEWIDTH)
    bins = psd.freqs[(psd.freqs >= band[0]) & (psd.freqs <= band[1])]
    closed = measured_spectrum(cavity, pump_ratio, chain, hz_to_angular(bins))
    expected = np.mean(closed.s_plus if anti_squeezed else closed.s_minus)
    assert band_average(psd, band) / 2.0 == pytest.approx(expected, rel=0.05)


def test_electronic_noise_subtraction_recovers_signal() -> None:
    """Test that subtracting the LO-blocked trace leaves the signal PSD."""
    cavity = _cavity()
    pump = PumpState.from_ratio(cavity, 0.3)
    chain = LossChain.from_cavity(cavity)
    quiet = _config(cavity, 256, 400)
    noisy = quiet.model_copy(update={"electronic_noise_psd": 1 / 3.3})
    trace = simulate_cavity(cavity, pump, quiet, np.random.default_rng(4))
    band = (0.2 * LINEWIDTH, 10 * LINEWIDTH)

    signal_only = welch_psd(
        balanced_detect(trace, chain, quiet, np.random.default_rng(10), np.random.default_rng(11)),
        quiet,
    )
    with_electronics = welch_psd(
        balanced_detect(trace, chain, noisy, np.random.default_rng(10), np.random.default_rng(11)),
        noisy,
    )
    electronic = welch_psd(
        electronic_noise_series(len(trace), noisy, np.random.default_rng(11)), noisy
    )
    recovered = band_average(with_electronics, band) - band_average(electronic, band)
    assert recovered == pytest.approx(band_average(signal_only, band), rel=0.02)


def test_simulation_is_reproducible() -> None:
    """Test that identical streams give identical traces."""
    cavity = _cavity()
    pump = PumpState.from_ratio(cavity, 0.5)
    cfg = _config(cavity, 64, 100)
    first = simulate_cavity(cavity, pump, cfg, RunStreams.for_run(9, 2).cavity)
    second = simulate_cavity(cavity, pump, cfg, RunStreams.for_run(9, 2).cavity)
    other = simulate_cavity(cavity, pump, cfg, RunStreams.for_run(9, 3).cavity)
    np.testing.assert_array_equal(first.x, second.x)
    assert not np.array_equal(first.x, other.x)


def test_euler_integrator_is_available() -> None:
    """Test the Euler-Maruyama cross-check path."""
    cavity = _cavity()
    cfg = _config(cavity, 64, 100, integrator=Integrator.EULER)
    trace = simulate_cavity(cavity, PumpState.from_ratio(cavity, 0.5), cfg)
    assert len(trace) == 6400
    assert trace.metadata["integrator"] == "EULER"
    assert np.all(np.isfinite(trace.x))


def test_run_limits() -> None:
    """Test the step-size, run-length and threshold checks."""
    cavity = _cavity()
    pump = PumpState.from_ratio(cavity, 0.5)
    good = _config(cavity, 64, 100)
    with pytest.raises(StabilityError, match="exceeds"):
        simulate_cavity(cavity, pump, good.model_copy(update={"dt": good.dt * 2}))
    with pytest.raises(StabilityError, match="segments"):
        simulate_cavity(cavity, pump, good.model_copy(update={"duration": good.duration / 2}))
    with pytest.raises(DivergenceError):
        simulate_cavity(cavity, PumpState.from_ratio(cavity, 1.0), good)


def test_phase_sweep_independent_of_threads() -> None:
    """Test that the worker count never changes a sweep and θ selects the quadrature."""
    cavity = _cavity(1.0)
    pump = PumpState.from_ratio(cavity, 0.5)
    chain = LossChain.from_cavity(cavity)
    cfg = _config(cavity, 256, 100, electronic_noise_psd=1 / 3.3)
    band = (0.3 * LINEWIDTH, 1.5 * LINEWIDTH)
    voltages = [0.0, 17.5, 35.0]

    serial = phase_sweep(cavity, pump, chain, cfg, voltages, band, threads=1)
    pooled = phase_sweep(cavity, pump, chain, cfg, voltages, band, threads=3)
    assert serial == pooled
    assert serial[0].psd_db < 0 < serial[1].psd_db
    assert serial[1].theta == pytest.approx(math.pi / 2)


def test_shot_noise_sweep_is_linear() -> None:
    """Test the LO power sweep: linear shot noise and the 3.3 shot/electronic ratio."""
    cavity = _cavity()
    cfg = _config(cavity, 256, 400, electronic_noise_psd=1 / 3.3)
    powers = [0.2e-3, 0.4e-3, 0.8e-3, 1.3e-3, 2.0e-3]
    rows = shotnoise_sweep(powers, cfg, (1e6, 40e6), threads=2)

    fit = fit_linear_origin([p * 1e3 for p in powers], [r.psd_electronic_subtracted for r in rows])
    assert fit.r_squared >= 0.999
    reference = rows[3]
    electronic = reference.psd_total - reference.psd_electronic_subtracted
    assert reference.psd_electronic_subtracted / electronic == pytest.approx(3.3, rel=0.05)


def test_spectrum_sweep_separates_quadratures() -> None:
    """Test simulated squeezed and anti-squeezed spectra."""
    cavity = _cavity(1.0)
    pump = PumpState.from_ratio(cavity, 0.5)
    cfg = _config(cavity, 256, 100, electronic_noise_psd=1 / 3.3)
    squeezed, anti = spectrum_sweep(
        cavity, pump, LossChain.from_cavity(cavity), cfg, 0.3e6, 3e6, threads=2
    )
    assert squeezed.metadata["quadrature"] == "squeezed"
    assert anti.metadata["quadrature"] == "anti_squeezed"
    assert np.mean(squeezed.values) < 0 < np.mean(anti.values)
    np.testing.assert_array_equal(squeezed.freqs, anti.freqs)


@pytest.mark.slow
def test_simulated_spectra_match_closed_form_on_random_operating_points() -> None:
    """Test both quadratures of ten seeded random (x, η, f) draws within 5% of the closed form."""
    rng = np.random.default_rng(2024)
    for index in range(10):
        pump_ratio = float(rng.uniform(0.1, 0.8))
        escape_efficiency = float(rng.uniform(0.5, 1.0))
        path_transmission = float(rng.uniform(0.5, 1.0))
        center = float(rng.uniform(0.3, 1.5)) * LINEWIDTH
        band = (center - 0.2 * LINEWIDTH, center + 0.2 * LINEWIDTH)

        cavity = _cavity(escape_efficiency)
        pump = PumpState.from_ratio(cavity, pump_ratio)
        chain = LossChain.from_cavity(cavity, path_transmission=path_transmission)
        cfg = _config(cavity, 2048, 300)
        streams = RunStreams.for_run(77, index)
        trace = simulate_cavity(cavity, pump, cfg, streams.cavity)

        for theta, anti_squeezed in ((0.0, False), (math.pi / 2, True)):
            run_cfg = cfg.model_copy(update={"lo_phase": theta})
            current = balanced_detect(trace, chain, run_cfg, streams.detection, streams.electronic)
            psd = welch_psd(current, run_cfg)
            bins = psd.freqs[(psd.freqs >= band[0]) & (psd.freqs <= band[1])]
            closed = measured_spectrum(cavity, pump_ratio, chain, hz_to_angular(bins))
            expected = float(np.mean(closed.s_plus if anti_squeezed else closed.s_minus))
            assert band_average(psd, band) / 2.0 == pytest.approx(expected, rel=0.05), (
                index,
                pump_ratio,
                chain.total_efficiency,
                center,
                anti_squeezed,
            )


def test_lo_phase_rotation_is_periodic_in_pi() -> None:
    """Test PSD(θ + π) = PSD(θ) and that a quarter turn swaps squeezed and anti-squeezed levels."""
    cavity = _cavity(0.9)
    pump = PumpState.from_ratio(cavity, 0.5)
    chain = LossChain.from_cavity(cavity)
    cfg = _config(cavity, 256, 400)
    trace = simulate_cavity(cavity, pump, cfg, np.random.default_rng(6))
    band = (0.2 * LINEWIDTH, 2.0 * LINEWIDTH)
    squeezed_theta = squeezed_lo_phase(cavity, pump)

    def reading(theta: float) -> float:
        run_cfg = cfg.model_copy(update={"lo_phase": theta})
        current = balanced_detect(
            trace, chain, run_cfg, np.random.default_rng(8), np.random.default_rng(9)
        )
        return band_average(welch_psd(current, run_cfg), band) / 2.0

    levels = [reading(squeezed_theta + k * math.pi / 2) for k in range(4)]
    assert levels[2] == pytest.approx(levels[0], rel=1e-9)
    assert levels[3] == pytest.approx(levels[1], rel=1e-9)
    assert levels[0] < 1.0 < levels[1]

    bins = np.linspace(band[0], band[1], 201)
    closed = measured_spectrum(cavity, 0.5, chain, hz_to_angular(bins))
    assert levels[0] == pytest.approx(float(np.mean(closed.s_minus)), rel=0.05)
    assert levels[1] == pytest.approx(float(np.mean(closed.s_plus)), rel=0.05)


def test_phase_sweep_repeats_every_two_v_pi() -> None:
    """Test that voltages one full phase turn apart read the same noise level."""
    cavity = _cavity(1.0)
    pump = PumpState.from_ratio(cavity, 0.5)
    chain = LossChain.from_cavity(cavity)
    cfg = _config(cavity, 256, 1000, electronic_noise_psd=1 / 3.3, records=2)
    band = (0.2 * LINEWIDTH, 5.0 * LINEWIDTH)
    voltages = [0.0, 17.5, 70.0, 87.5]

    rows = phase_sweep(cavity, pump, chain, cfg, voltages, band, threads=2)
    assert rows[2].theta == pytest.approx(rows[0].theta + 2 * math.pi)
    assert rows[2].psd_linear == pytest.approx(rows[0].psd_linear, rel=0.05)
    assert rows[3].psd_linear == pytest.approx(rows[1].psd_linear, rel=0.05)
    assert rows[0].psd_db < 0 < rows[1].psd_db


def test_record_streams_are_independent() -> None:
    """Test that record zero keeps the run stream and later records draw fresh numbers."""
    first = RunStreams.for_run(9, 2).cavity.standard_normal(4)
    record_zero = RunStreams.for_run(9, 2, 0).cavity.standard_normal(4)
    record_one = RunStreams.for_run(9, 2, 1).cavity.standard_normal(4)
    np.testing.assert_array_equal(first, record_zero)
    assert not np.array_equal(first, record_one)
