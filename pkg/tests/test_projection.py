"""Tests for the improved-device projection."""

import numpy as np
import pytest

from sqzlab.models import ShgModel
from sqzlab.physics.projection import consistency_pair, improved_threshold, project_improved
from sqzlab.physics.pump import calibrate_threshold
from sqzlab.physics.rates import derive_rates
from sqzlab.units import nm, photon_energy


def test_improved_threshold_scaling() -> None:
    """Test p_th ∝ κ²/η_norm from the calibrated 25 mW threshold."""
    reference = derive_rates(550e3, 950e3, nm(1544.4))
    improved = derive_rates(200e3, 10e6, nm(1544.4))
    calibrated = calibrate_threshold(25e-3, reference, photon_energy(nm(772.2)))
    threshold = improved_threshold(calibrated, 10.0, 40.0, improved)
    assert threshold.p_th_sh == pytest.approx(25e-3 * (550 / 200) ** 2 / 4, rel=1e-9)
    assert threshold.p_th_sh * 1e3 == pytest.approx(47.27, abs=0.01)


def test_consistency_pair_for_sixteen_db() -> None:
    """Test the anti-squeezing implied by −16 dB on chip at ρ = 0.98."""
    pair = consistency_pair(-16.0, 0.98)
    assert pair.squeezing_db == pytest.approx(-16.0, abs=1e-9)
    assert pair.anti_squeezing_db == pytest.approx(23.0, abs=0.5)
    assert 0.0 < pair.pump_ratio < 1.0


def test_project_improved_rows() -> None:
    """Test the on-chip and measured projections over an FH grid."""
    reference = derive_rates(550e3, 950e3, nm(1544.4))
    improved = derive_rates(200e3, 10e6, nm(1544.4))
    calibrated = calibrate_threshold(25e-3, reference, photon_energy(nm(772.2)))
    threshold = improved_threshold(calibrated, 10.0, 40.0, improved)
    shg = ShgModel(normalized_efficiency=40.0)
    rows = project_improved(np.array([0.0, 20e-3, 40e-3]), shg, threshold, improved)

    assert rows[0].on_chip_minus_db == pytest.approx(0.0, abs=1e-12)
    assert rows[1].measured_minus_db is not None
    assert rows[1].on_chip_minus_db is not None
    assert rows[1].on_chip_minus_db < rows[1].measured_minus_db < 0
    assert rows[2].above_threshold
    assert rows[2].on_chip_minus_db is None
