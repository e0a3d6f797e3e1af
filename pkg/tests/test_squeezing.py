"""Tests for the closed-form squeezing spectra."""

import math

import numpy as np
import pytest

from sqzlab.errors import AboveThresholdError, DomainError
from sqzlab.models import CavityParams, LossChain, PumpState
from sqzlab.physics.rates import derive_rates
from sqzlab.physics.squeezing import (
    extremal_phases,
    lossy_product,
    measured_spectrum,
    output_transfer,
    pump_ratio_for_squeezing,
    quadrature_spectrum,
    spectrum_curve,
    squeeze_antisqueeze,
)
from sqzlab.units import hz_to_angular, nm, to_db


@pytest.fixture
def cavity() -> CavityParams:
    return derive_rates(550e3, 950e3, nm(1544.4))


def test_lossless_extrema_on_resonance(cavity: CavityParams) -> None:
    """Test S− = 1/9 and S+ = 9 at x = 0.5 and ω = 0."""
    s_minus, s_plus = squeeze_antisqueeze(cavity, 0.5, 0.0)
    assert s_minus == pytest.approx(1 / 9, rel=1e-12)
    assert s_plus == pytest.approx(9.0, rel=1e-12)


def test_minimum_uncertainty_product(cavity: CavityParams) -> None:
    """Test S+·S− = 1 for a lossless squeezer at every pump ratio and frequency."""
    omega = np.linspace(0.0, 5.0, 101) * cavity.total_rate
    for x in np.linspace(0.0, 0.99, 100):
        s_minus, s_plus = squeeze_antisqueeze(cavity, float(x), omega)
        np.testing.assert_allclose(s_minus * s_plus, 1.0, rtol=1e-10)


def test_lossy_product_exceeds_one(cavity: CavityParams) -> None:
    """Test that loss lifts the product above the minimum-uncertainty bound."""
    chain = LossChain.from_cavity(cavity, path_transmission=0.70, detector_qe=0.75)
    omega = np.linspace(0.0, 2.0, 21) * cavity.total_rate
    measured = measured_spectrum(cavity, 0.6, chain, omega)
    product = measured.s_minus * measured.s_plus
    assert np.all(product > 1.0)
    s_minus, s_plus = squeeze_antisqueeze(cavity, 0.6, omega)
    np.testing.assert_allclose(
        product, lossy_product(chain.total_efficiency, s_minus, s_plus), rtol=1e-12
    )


def test_symplectic_identity(cavity: CavityParams) -> None:
    """Test |u|² − |v|² = 1 for the output transfer coefficients."""
    omega = np.linspace(-3.0, 3.0, 61) * cavity.total_rate
    for x in (0.0, 0.31, 0.8, 0.99):
        pump = PumpState.from_ratio(cavity, x)
        pair = output_transfer(cavity, pump, omega)
        np.testing.assert_allclose(np.abs(pair.u) ** 2 - np.abs(pair.v) ** 2, 1.0, rtol=1e-10)


def test_quadrature_extrema_match_closed_form(cavity: CavityParams) -> None:
    """Test that the quadrature spectrum at its extremal phases equals S±."""
    rng = np.random.default_rng(7)
    for x, scaled in zip(rng.uniform(0.0, 0.95, 20), rng.uniform(0.0, 3.0, 20)):
        omega = float(scaled) * cavity.total_rate
        pump = PumpState.from_ratio(cavity, float(x))
        anti_phase, squeezed_phase = extremal_phases(pump)
        s_minus, s_plus = squeeze_antisqueeze(cavity, float(x), omega)
        assert quadrature_spectrum(cavity, pump, anti_phase, omega) == pytest.approx(
            s_plus, rel=1e-10
        )
        assert quadrature_spectrum(cavity, pump, squeezed_phase, omega) == pytest.approx(
            s_minus, rel=1e-10
        )
        sweep = quadrature_spectrum(cavity, pump, np.linspace(0, math.pi, 721), omega)
        assert np.max(sweep) <= s_plus * (1 + 1e-12)
        assert np.min(sweep) >= s_minus * (1 - 1e-12)


def test_reference_measurement_band(cavity: CavityParams) -> None:
    """Test measured squeezing of the reference device at 59 MHz."""
    chain = LossChain.from_cavity(cavity, path_transmission=0.70, detector_qe=0.75)
    x = math.sqrt(6.0 * 0.020**2 / 25e-3)
    measured = measured_spectrum(cavity, x, chain, hz_to_angular(59e6))
    assert measured.s_minus_db == pytest.approx(-0.55, abs=0.35)
    assert measured.s_plus_db == pytest.approx(1.55, abs=0.35)


def test_spectrum_curve_metadata(cavity: CavityParams) -> None:
    """Test that spectrum traces carry their quadrature and the linewidth."""
    chain = LossChain.lossless()
    squeezed, anti = spectrum_curve(cavity, 0.5, chain, np.array([0.0, 1e6]))
    assert squeezed.metadata["quadrature"] == "squeezed"
    assert anti.metadata["quadrature"] == "anti_squeezed"
    assert squeezed.metadata["linewidth_hz"] == pytest.approx(cavity.linewidth_hz)
    assert squeezed.values[0] == pytest.approx(to_db(1 / 9), rel=1e-12)


def test_pump_ratio_for_squeezing_inverts_spectrum(cavity: CavityParams) -> None:
    """Test that the solved pump ratio reproduces the target squeezing."""
    x = pump_ratio_for_squeezing(-3.0, 0.9)
    chain = LossChain(escape_efficiency=0.9)
    assert measured_spectrum(cavity, x, chain, 0.0).s_minus_db == pytest.approx(-3.0, abs=1e-9)
    with pytest.raises(DomainError, match="not reachable"):
        pump_ratio_for_squeezing(-20.0, 0.5)


def test_above_threshold_is_rejected(cavity: CavityParams) -> None:
    """Test that x ≥ 1 is never extrapolated."""
    with pytest.raises(DomainError):
        squeeze_antisqueeze(cavity, 1.0, 0.0)
    with pytest.raises(AboveThresholdError):
        output_transfer(cavity, PumpState.from_ratio(cavity, 1.2), 0.0)
