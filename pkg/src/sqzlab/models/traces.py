"""Array-bearing value types: spectra, transmission curves and time traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]


class TraceUnit(str, Enum):
    """Normalization of a SpectrumTrace."""

    RAW_PSD = "RAW_PSD"
    SHOT_NORMALIZED_LINEAR = "SHOT_NORMALIZED_LINEAR"
    SHOT_NORMALIZED_DB = "SHOT_NORMALIZED_DB"


def _frozen_array(values: ArrayLike, name: str) -> FloatArray:
    array = np.array(values, dtype=float, copy=True)
    if array.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SpectrumTrace:
    """Frequency grid (Hz) with PSD values and normalization metadata."""

    freqs: FloatArray
    values: FloatArray
    unit: TraceUnit
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        freqs = _frozen_array(self.freqs, "freqs")
        values = _frozen_array(self.values, "values")
        if freqs.size == 0:
            raise ValueError("SpectrumTrace must contain at least one point")
        if freqs.size != values.size:
            raise ValueError(f"Length mismatch: {freqs.size} freqs vs {values.size} values")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("freqs must be strictly increasing")
        unit = TraceUnit(self.unit)
        if unit is TraceUnit.SHOT_NORMALIZED_LINEAR and np.any(values <= 0):
            raise ValueError("Shot-normalized linear values must be positive")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self) -> int:
        return int(self.freqs.size)

    def to_linear(self) -> SpectrumTrace:
        """Shot-normalized linear copy; raw PSD traces have no shot reference to apply."""
        if self.unit is TraceUnit.SHOT_NORMALIZED_DB:
            return SpectrumTrace(
                self.freqs,
                np.power(10.0, self.values / 10.0),
                TraceUnit.SHOT_NORMALIZED_LINEAR,
                self.metadata,
            )
        if self.unit is TraceUnit.RAW_PSD:
            raise ValueError("Raw PSD trace has no shot-noise normalization")
        return self

    def to_db(self) -> SpectrumTrace:
        """Shot-normalized dB copy of a linear or dB trace."""
        if self.unit is TraceUnit.SHOT_NORMALIZED_LINEAR:
            return SpectrumTrace(
                self.freqs,
                10.0 * np.log10(self.values),
                TraceUnit.SHOT_NORMALIZED_DB,
                self.metadata,
            )
        if self.unit is TraceUnit.RAW_PSD:
            raise ValueError("Raw PSD trace has no shot-noise normalization")
        return self

    def normalized_by(self, shot_reference: Union[float, FloatArray]) -> SpectrumTrace:
        """Divide a raw PSD by a shot-noise reference (scalar or per-bin)."""
        if self.unit is not TraceUnit.RAW_PSD:
            raise ValueError(f"Only raw PSD traces can be normalized, got {self.unit.value}")
        return SpectrumTrace(
            self.freqs,
            self.values / shot_reference,
            TraceUnit.SHOT_NORMALIZED_LINEAR,
            self.metadata,
        )


@dataclass(frozen=True)
class TransmissionCurve:
    """Cavity transmission over a detuning grid (rad/s)."""

    detunings: FloatArray
    transmittance: FloatArray
    amplitude_phase: FloatArray

    def __post_init__(self) -> None:
        detunings = _frozen_array(self.detunings, "detunings")
        transmittance = _frozen_array(self.transmittance, "transmittance")
        phase = _frozen_array(self.amplitude_phase, "amplitude_phase")
        if not detunings.size == transmittance.size == phase.size:
            raise ValueError("detunings, transmittance and amplitude_phase must match in length")
        if np.any(np.diff(detunings) <= 0):
            raise ValueError("detunings must be strictly increasing")
        if np.any(transmittance < 0):
            raise ValueError("transmittance must be non-negative")
        object.__setattr__(self, "detunings", detunings)
        object.__setattr__(self, "transmittance", transmittance)
        object.__setattr__(self, "amplitude_phase", phase)

    def __len__(self) -> int:
        return int(self.detunings.size)


@dataclass(frozen=True)
class QuadratureTrace:
    """Output-field quadratures sampled every ``dt`` seconds.

    Each sample is the field averaged over its step, in units where vacuum noise has a
    two-sided PSD of one.
    """

    times: FloatArray
    x: FloatArray
    y: FloatArray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        times = _frozen_array(self.times, "times")
        x = _frozen_array(self.x, "x")
        y = _frozen_array(self.y, "y")
        if not times.size == x.size == y.size:
            raise ValueError("times, x and y must match in length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True)
class TransferPair:
    """Output-field coefficients: a_out(ω) = u·a_in(ω) + v·a_in†(−ω)."""

    u: Union[complex, NDArray[np.complex128]]
    v: Union[complex, NDArray[np.complex128]]

    def symplectic_defect(self) -> Union[float, FloatArray]:
        """|u|² − |v|² − 1; zero for a lossless squeezer."""
        return np.abs(self.u) ** 2 - np.abs(self.v) ** 2 - 1.0
