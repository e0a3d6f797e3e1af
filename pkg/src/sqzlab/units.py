"""Unit conventions and conversions.

Internally every rate and frequency is an angular frequency in rad/s and every length is in
meters. Public entry points accept Hz, nm and pm and convert through the helpers below.
"""

from __future__ import annotations

import math
from typing import TypeVar, Union

import numpy as np
from numpy.typing import NDArray
from scipy import constants

SPEED_OF_LIGHT = constants.c  # 299 792 458 m/s, exact
PLANCK = constants.h
HBAR = constants.hbar

ArrayLike = Union[float, NDArray[np.float64]]
T = TypeVar("T", float, NDArray[np.float64])


def hz_to_angular(freq_hz: T) -> T:
    """Convert a frequency in Hz to rad/s."""
    return freq_hz * (2.0 * math.pi)


def angular_to_hz(omega: T) -> T:
    """Convert an angular frequency in rad/s to Hz."""
    return omega / (2.0 * math.pi)


def wavelength_to_angular(wavelength_m: T) -> T:
    """Vacuum wavelength (m) to optical angular frequency (rad/s)."""
    return 2.0 * math.pi * SPEED_OF_LIGHT / wavelength_m


def angular_to_wavelength(omega: T) -> T:
    """Optical angular frequency (rad/s) to vacuum wavelength (m)."""
    return 2.0 * math.pi * SPEED_OF_LIGHT / omega


def nm(value: float) -> float:
    """Nanometers to meters."""
    return value * 1e-9


def pm(value: float) -> float:
    """Picometers to meters."""
    return value * 1e-12


def photon_energy(wavelength_m: float) -> float:
    """Photon energy ħω (J) at a vacuum wavelength."""
    if wavelength_m <= 0:
        raise ValueError(f"Wavelength must be positive, got {wavelength_m}")
    return PLANCK * SPEED_OF_LIGHT / wavelength_m


def wavelength_span_to_hz(center_m: float, span_m: float) -> float:
    """Convert a small wavelength interval around ``center_m`` to a frequency interval (Hz)."""
    return SPEED_OF_LIGHT * span_m / center_m**2


def to_db(ratio: T) -> T:
    """Power ratio to decibels."""
    return 10.0 * np.log10(ratio)  # type: ignore[return-value]


def from_db(db: T) -> T:
    """Decibels to power ratio."""
    return np.power(10.0, db / 10.0)  # type: ignore[return-value]
