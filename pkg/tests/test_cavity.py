"""Tests for cavity transmission under parametric gain."""

import math

import numpy as np
import pytest

from sqzlab.errors import (
    AboveThresholdError,
    AmbiguousLineshapeError,
    DomainError,
    InconsistentDataError,
)
from sqzlab.models import CavityParams, TransmissionCurve
from sqzlab.physics.cavity import (
    cold_transmission,
    detuning_from_temperature,
    extinction_gain,
    fwhm_numeric,
    g_beta_for_ratio,
    gain_loss_from_linewidth,
    phase_from_voltage,
    pole_linewidth,
    q_from_linewidth,
    transmission_curve,
    transmission_with_gain,
)
from sqzlab.physics.rates import derive_rates
from sqzlab.units import hz_to_angular, nm, pm

KAPPA = hz_to_angular(100e6)


def _cavity(escape_efficiency: float) -> CavityParams:
    return CavityParams.from_rates(
        resonance_wavelength=nm(1544.4),
        external_rate=escape_efficiency * KAPPA,
        intrinsic_rate=(1 - escape_efficiency) * KAPPA,
        fsr=hz_to_angular(5.7e9),
    )


def test_cold_transmission_on_resonance() -> None:
    """Test T(0) = (1 − 2ρ)² and the critical-coupling zero."""
    cavity = derive_rates(550e3, 950e3, nm(1544.4))
    rho = cavity.escape_efficiency
    transmittance, _ = transmission_with_gain(cavity, 0.0, 0.0)
    assert transmittance == pytest.approx((1 - 2 * rho) ** 2, rel=1e-12)
    assert cold_transmission(cavity, 0.0) == pytest.approx(transmittance, rel=1e-12)
    critical, _ = transmission_with_gain(_cavity(0.5), 0.0, 0.0)
    assert critical == pytest.approx(0.0, abs=1e-15)


def test_cold_curve_matches_lorentzian_dip() -> None:
    """Test that the zero-gain amplitude reproduces the Lorentzian dip."""
    cavity = _cavity(0.3)
    detunings = np.linspace(-3, 3, 61) * KAPPA
    curve = transmission_curve(cavity, 0.0, detunings)
    np.testing.assert_allclose(
        curve.transmittance, cold_transmission(cavity, detunings), rtol=1e-12
    )
    assert fwhm_numeric(transmission_curve(cavity, 0.0, np.linspace(-4, 4, 2001) * KAPPA)) == (
        pytest.approx(KAPPA, rel=1e-3)
    )


def test_regenerative_amplification_turns_dip_into_peak() -> None:
    """Test dip, vanishing dip and peak above one as the gain grows."""
    cavity = _cavity(0.05)
    levels = []
    for ratio in (0.0, math.sqrt(0.95), 0.99):
        transmittance, _ = transmission_with_gain(cavity, g_beta_for_ratio(cavity, ratio), 0.0)
        levels.append(transmittance)
    assert levels[0] == pytest.approx(0.81, rel=1e-9)
    assert levels[1] == pytest.approx(1.0, rel=1e-6)
    assert levels[2] > 1.0


def test_extinction_gain_zeroes_transmission() -> None:
    """Test that the undercoupled line passes through zero at G = √(1 − 2ρ)."""
    cavity = _cavity(0.2)
    gain = extinction_gain(cavity)
    assert gain == pytest.approx(math.sqrt(0.6))
    transmittance, _ = transmission_with_gain(cavity, g_beta_for_ratio(cavity, gain), 0.0)
    assert transmittance == pytest.approx(0.0, abs=1e-12)
    assert extinction_gain(_cavity(0.7)) is None


@pytest.mark.parametrize("ratio", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
def test_numeric_fwhm_follows_pole_law(ratio: float) -> None:
    """Test that the measured width tracks κ√(1 − G²) for a weakly coupled cavity."""
    cavity = _cavity(1e-4)
    g_beta = g_beta_for_ratio(cavity, ratio)
    curve = transmission_curve(cavity, g_beta, np.linspace(-4, 4, 8001) * KAPPA)
    expected = pole_linewidth(cavity, g_beta)
    assert expected == pytest.approx(KAPPA * math.sqrt(1 - ratio**2), rel=1e-12)
    assert fwhm_numeric(curve) == pytest.approx(expected, rel=1e-2)


def test_fwhm_rejects_unbracketed_and_flat_curves() -> None:
    """Test the ambiguous-lineshape errors."""
    cavity = _cavity(0.3)
    edge = transmission_curve(cavity, 0.0, np.linspace(0.0, 4.0, 101) * KAPPA)
    with pytest.raises(AmbiguousLineshapeError, match="not bracketed"):
        fwhm_numeric(edge)
    flat = TransmissionCurve(
        detunings=np.linspace(-1, 1, 11), transmittance=np.ones(11), amplitude_phase=np.zeros(11)
    )
    with pytest.raises(AmbiguousLineshapeError, match="flat"):
        fwhm_numeric(flat)


def test_gain_at_threshold_is_rejected() -> None:
    """Test that g|β| ≥ κ/2 raises."""
    cavity = _cavity(0.3)
    with pytest.raises(AboveThresholdError):
        transmission_with_gain(cavity, KAPPA / 2, 0.0)
    with pytest.raises(DomainError):
        g_beta_for_ratio(cavity, 1.0)


def test_gain_loss_from_linewidth() -> None:
    """Test G from the cold and gain-narrowed linewidths."""
    assert gain_loss_from_linewidth(2.84, 0.90).value == pytest.approx(0.948, abs=1e-3)
    with pytest.raises(InconsistentDataError, match="broaden"):
        gain_loss_from_linewidth(0.9, 2.84)


def test_q_from_linewidth() -> None:
    """Test Q and Δν of a 2.84 pm line at 1544.4 nm."""
    q, delta_nu = q_from_linewidth(nm(1544.4), pm(2.84))
    assert q == pytest.approx(5.44e5, rel=2e-3)
    assert delta_nu == pytest.approx(357e6, rel=2e-3)


def test_phase_from_voltage() -> None:
    """Test θ = πV/V_π."""
    assert phase_from_voltage(35.0, 35.0) == pytest.approx(math.pi)
    with pytest.raises(DomainError):
        phase_from_voltage(1.0, 0.0)


def test_detuning_from_temperature_wraps_into_one_fsr() -> None:
    """Test the TEC detuning map and its wrapping."""
    fsr = hz_to_angular(5.7e9)
    assert detuning_from_temperature(25.3, 25.0, fsr) == pytest.approx(fsr / 4)
    assert detuning_from_temperature(26.2, 25.0, fsr) == pytest.approx(0.0, abs=1e-3)


@pytest.mark.parametrize("escape_efficiency", [0.05, 0.3, 0.5, 0.7, 0.95])
def test_transmission_is_even_in_detuning(escape_efficiency: float) -> None:
    """Test T(Δ) = T(−Δ) on random detunings and gains."""
    cavity = _cavity(escape_efficiency)
    rng = np.random.default_rng(4)
    detunings = rng.uniform(-5, 5, size=200) * KAPPA
    for ratio in rng.uniform(0.0, 0.99, size=5):
        g_beta = g_beta_for_ratio(cavity, float(ratio))
        positive, _ = transmission_with_gain(cavity, g_beta, detunings)
        negative, _ = transmission_with_gain(cavity, g_beta, -detunings)
        np.testing.assert_allclose(positive, negative, rtol=1e-13, atol=1e-15)


def test_numeric_fwhm_narrows_monotonically_with_gain() -> None:
    """Test that the measured width strictly decreases as G rises toward one."""
    cavity = _cavity(1e-4)
    detunings = np.linspace(-4, 4, 8001) * KAPPA
    widths = [
        fwhm_numeric(transmission_curve(cavity, g_beta_for_ratio(cavity, ratio), detunings))
        for ratio in np.linspace(0.0, 0.95, 20)
    ]
    assert np.all(np.diff(widths) < 0)


def test_phase_excursion_separates_coupling_regimes() -> None:
    """Test that the cold phase response spans less than π undercoupled and more overcoupled."""
    detunings = np.linspace(-20, 20, 4001) * KAPPA
    under = transmission_curve(_cavity(0.3), 0.0, detunings)
    over = transmission_curve(_cavity(0.7), 0.0, detunings)
    under_excursion = float(np.ptp(np.unwrap(under.amplitude_phase)))
    over_excursion = float(np.ptp(np.unwrap(over.amplitude_phase)))
    assert under_excursion < math.pi < over_excursion
    assert over_excursion > 1.9 * math.pi
