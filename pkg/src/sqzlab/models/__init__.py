"""Physical parameter types for sqzlab.

All rates and frequencies are angular (rad/s), lengths in meters, powers in watts.
Parameter models are frozen pydantic models: they validate on construction and never
mutate afterwards, so they can be shared freely between threads.
"""

import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sqzlab.models.traces import (
    QuadratureTrace,
    SpectrumTrace,
    TraceUnit,
    TransferPair,
    TransmissionCurve,
)
from sqzlab.units import SPEED_OF_LIGHT, angular_to_hz, wavelength_to_angular

__all__ = [
    "CavityParams",
    "CouplingDiagnosis",
    "CouplingRegime",
    "FitResult",
    "GainLossRatio",
    "Integrator",
    "LaserNoiseModel",
    "LossChain",
    "MziSetup",
    "PumpState",
    "QuadratureTrace",
    "ShgModel",
    "SimConfig",
    "SpectrumTrace",
    "ThresholdModel",
    "TraceUnit",
    "TransferPair",
    "TransmissionCurve",
    "WelchConfig",
]

_FROZEN = ConfigDict(frozen=True, extra="forbid")


class CouplingRegime(str, Enum):
    """Cavity coupling condition."""

    UNDERCOUPLED = "UNDERCOUPLED"  # κ_e < κ_i
    OVERCOUPLED = "OVERCOUPLED"  # κ_e > κ_i
    CRITICAL = "CRITICAL"  # indistinguishable


class Integrator(str, Enum):
    """Time-stepping scheme for the Langevin simulator."""

    EXACT = "EXACT"
    EULER = "EULER"


class CavityParams(BaseModel):
    """Resonator rates for a single cavity mode."""

    model_config = _FROZEN

    resonance_wavelength: float = Field(..., gt=0.0, description="Vacuum wavelength (m)")
    total_rate: float = Field(..., gt=0.0, description="κ, total energy decay rate (rad/s)")
    external_rate: float = Field(..., ge=0.0, description="κ_e, coupling rate (rad/s)")
    intrinsic_rate: float = Field(..., ge=0.0, description="κ_i, intrinsic loss rate (rad/s)")
    detuning: float = Field(default=0.0, description="Δ, drive detuning (rad/s)")
    fsr: float = Field(..., gt=0.0, description="Ω, free spectral range (rad/s)")

    @model_validator(mode="after")
    def _rates_add_up(self) -> "CavityParams":
        if not math.isclose(
            self.external_rate + self.intrinsic_rate, self.total_rate, rel_tol=1e-12
        ):
            raise ValueError(
                f"κ_e + κ_i must equal κ, got {self.external_rate} + {self.intrinsic_rate} "
                f"!= {self.total_rate}"
            )
        return self

    @classmethod
    def from_rates(
        cls,
        resonance_wavelength: float,
        external_rate: float,
        intrinsic_rate: float,
        fsr: float,
        detuning: float = 0.0,
    ) -> "CavityParams":
        """Build from the two partial rates; κ is their exact sum."""
        return cls(
            resonance_wavelength=resonance_wavelength,
            total_rate=external_rate + intrinsic_rate,
            external_rate=external_rate,
            intrinsic_rate=intrinsic_rate,
            detuning=detuning,
            fsr=fsr,
        )

    @property
    def resonance_frequency(self) -> float:
        """ω₀ (rad/s)."""
        return wavelength_to_angular(self.resonance_wavelength)

    @property
    def escape_efficiency(self) -> float:
        """ρ = κ_e/κ."""
        return self.external_rate / self.total_rate

    @property
    def q_total(self) -> float:
        return self.resonance_frequency / self.total_rate

    @property
    def q_intrinsic(self) -> float:
        if self.intrinsic_rate == 0:
            return math.inf
        return self.resonance_frequency / self.intrinsic_rate

    @property
    def linewidth_hz(self) -> float:
        """κ/2π (Hz)."""
        return angular_to_hz(self.total_rate)

    def with_detuning(self, detuning: float) -> "CavityParams":
        return self.model_copy(update={"detuning": detuning})


class PumpState(BaseModel):
    """Second-harmonic pump seen by the OPO mode.

    |β|² is the pump photon flux (photons/s), so g carries units of √Hz and the
    oscillation threshold is |β|_thr = κ/(4g).
    """

    model_config = _FROZEN

    nonlinear_rate: float = Field(..., gt=0.0, description="g (√Hz)")
    pump_magnitude: float = Field(..., ge=0.0, description="|β| (√(1/s))")
    pump_phase: float = Field(default=-math.pi / 2, description="φ_β (rad)")
    pump_ratio: float = Field(..., ge=0.0, description="x = |β|/|β|_thr")
    sh_power: float = Field(default=0.0, ge=0.0, description="On-chip SH power (W)")

    @classmethod
    def from_ratio(
        cls,
        cavity: CavityParams,
        pump_ratio: float,
        nonlinear_rate: float = 1.0,
        pump_phase: float = -math.pi / 2,
        sh_power: float = 0.0,
    ) -> "PumpState":
        """Pump state with |β| chosen so that 4g|β|/κ equals ``pump_ratio``."""
        magnitude = pump_ratio * cavity.total_rate / (4.0 * nonlinear_rate)
        return cls(
            nonlinear_rate=nonlinear_rate,
            pump_magnitude=magnitude,
            pump_phase=pump_phase,
            pump_ratio=pump_ratio,
            sh_power=sh_power,
        )

    @property
    def g_beta(self) -> float:
        """g|β| (rad/s)."""
        return self.nonlinear_rate * self.pump_magnitude

    @property
    def parametric_rate(self) -> float:
        """2g|β|, the coupling rate between a and a† in the Langevin equation."""
        return 2.0 * self.g_beta

    @property
    def beta(self) -> complex:
        return self.pump_magnitude * complex(math.cos(self.pump_phase), math.sin(self.pump_phase))

    def ratio_for(self, cavity: CavityParams) -> float:
        """4g|β|/κ for ``cavity``."""
        return 4.0 * self.g_beta / cavity.total_rate


class LossChain(BaseModel):
    """Beamsplitter-equivalent losses between the cavity and the detector."""

    model_config = _FROZEN

    escape_efficiency: float = Field(..., ge=0.0, le=1.0, description="ρ = κ_e/κ")
    path_transmission: float = Field(default=1.0, ge=0.0, le=1.0, description="T")
    detector_qe: float = Field(default=1.0, ge=0.0, le=1.0, description="ε")
    extra_factors: dict[str, float] = Field(
        default_factory=dict, description="Named extra transmissions, e.g. {'dbs': 0.94}"
    )

    @field_validator("extra_factors")
    @classmethod
    def _factors_in_unit_interval(cls, value: dict[str, float]) -> dict[str, float]:
        for name, factor in value.items():
            if not 0.0 <= factor <= 1.0:
                raise ValueError(f"Factor '{name}' must lie in [0, 1], got {factor}")
        return value

    @classmethod
    def from_cavity(
        cls,
        cavity: CavityParams,
        path_transmission: float = 1.0,
        detector_qe: float = 1.0,
        extra_factors: Optional[dict[str, float]] = None,
    ) -> "LossChain":
        return cls(
            escape_efficiency=cavity.escape_efficiency,
            path_transmission=path_transmission,
            detector_qe=detector_qe,
            extra_factors=extra_factors or {},
        )

    @classmethod
    def lossless(cls) -> "LossChain":
        return cls(escape_efficiency=1.0)

    def factors(self) -> dict[str, float]:
        """All factors by name, escape efficiency first."""
        return {
            "escape_efficiency": self.escape_efficiency,
            "path_transmission": self.path_transmission,
            "detector_qe": self.detector_qe,
            **self.extra_factors,
        }

    @property
    def detection_efficiency(self) -> float:
        """T·ε·∏extra, the part of the chain after the cavity output port."""
        value = self.path_transmission * self.detector_qe
        for factor in self.extra_factors.values():
            value *= factor
        return value

    @property
    def total_efficiency(self) -> float:
        """η_tot = ρ·T·ε·∏extra."""
        return self.escape_efficiency * self.detection_efficiency


class LaserNoiseModel(BaseModel):
    """White-frequency-noise laser and the unbalanced MZI used to measure it."""

    model_config = _FROZEN

    white_freq_noise: float = Field(..., ge=0.0, description="C (rad²/s)")
    mzi_path_diff: float = Field(default=0.0, ge=0.0, description="L (m)")
    group_index: float = Field(default=2.2, gt=0.0)
    optical_freq: float = Field(default=0.0, ge=0.0, description="ω_L (rad/s)")
    excess_intensity_psd: float = Field(default=0.0, ge=0.0, description="S_NN (1/Hz)")
    detector_gain: float = Field(default=1.0, gt=0.0)

    @classmethod
    def from_linewidth(cls, linewidth_hz: float, **kwargs: float) -> "LaserNoiseModel":
        return cls(white_freq_noise=2.0 * math.pi * linewidth_hz, **kwargs)

    @property
    def linewidth(self) -> float:
        """Lorentzian linewidth C/2π (Hz)."""
        return self.white_freq_noise / (2.0 * math.pi)


class MziSetup(BaseModel):
    """Unbalanced Mach-Zehnder interferometer used as a frequency discriminator."""

    model_config = _FROZEN

    path_diff: float = Field(..., gt=0.0, description="L (m)")
    group_index: float = Field(default=1.0, gt=0.0)
    operating_point: float = Field(
        default=math.pi / 2, description="ω_L·L/c (rad); quadrature by default"
    )

    @classmethod
    def from_fsr(
        cls, fsr_hz: float, path_diff: float, operating_point: float = math.pi / 2
    ) -> "MziSetup":
        """Infer the group index from a measured FSR and the path imbalance."""
        if fsr_hz <= 0:
            raise ValueError(f"FSR must be positive, got {fsr_hz}")
        return cls(
            path_diff=path_diff,
            group_index=SPEED_OF_LIGHT / (fsr_hz * path_diff),
            operating_point=operating_point,
        )

    @property
    def delay(self) -> float:
        """n·L/c (s)."""
        return self.group_index * self.path_diff / SPEED_OF_LIGHT

    @property
    def fsr(self) -> float:
        """c/(n·L) (Hz)."""
        return 1.0 / self.delay


class GainLossRatio(BaseModel):
    """Parametric gain relative to the total amplitude loss rate κ/2."""

    model_config = _FROZEN

    value: float = Field(..., ge=0.0, le=1.0, description="G")


class ShgModel(BaseModel):
    """Waveguide second-harmonic generator."""

    model_config = _FROZEN

    normalized_efficiency: float = Field(..., ge=0.0, description="Peak η_norm (1/W)")
    response_nm: dict[float, float] = Field(
        default_factory=dict,
        description="Relative spectral response keyed by wavelength (nm); empty means flat",
    )
    length: Optional[float] = Field(default=None, gt=0.0, description="Waveguide length (m)")

    @field_validator("response_nm")
    @classmethod
    def _response_in_unit_interval(cls, value: dict[float, float]) -> dict[float, float]:
        for wavelength, response in value.items():
            if not 0.0 <= response <= 1.0:
                raise ValueError(f"Response at {wavelength} nm must lie in [0, 1], got {response}")
        return value


class ThresholdModel(BaseModel):
    """OPO threshold calibration: SH power at threshold and the derived nonlinear rate."""

    model_config = _FROZEN

    p_th_sh: float = Field(..., gt=0.0, description="SH power at threshold (W)")
    kappa_ref: float = Field(..., gt=0.0, description="κ at calibration (rad/s)")
    nonlinear_rate: float = Field(..., gt=0.0, description="g (√Hz)")
    photon_energy: float = Field(..., gt=0.0, description="ħω of the pump (J)")

    def threshold_magnitude(self, kappa: Optional[float] = None) -> float:
        """|β|_thr = κ/(4g)."""
        return (self.kappa_ref if kappa is None else kappa) / (4.0 * self.nonlinear_rate)

    def threshold_power(self, kappa: Optional[float] = None) -> float:
        """SH power at threshold for total rate ``kappa`` (defaults to the calibration κ)."""
        return self.photon_energy * self.threshold_magnitude(kappa) ** 2

    def scaled(self, efficiency_ratio: float, kappa: float) -> "ThresholdModel":
        """Threshold of a device with η_norm scaled by ``efficiency_ratio`` and total rate κ.

        Assumes g ∝ √η_norm.
        """
        if efficiency_ratio <= 0:
            raise ValueError(f"Efficiency ratio must be positive, got {efficiency_ratio}")
        g = self.nonlinear_rate * math.sqrt(efficiency_ratio)
        p_th = self.photon_energy * (kappa / (4.0 * g)) ** 2
        return ThresholdModel(
            p_th_sh=p_th, kappa_ref=kappa, nonlinear_rate=g, photon_energy=self.photon_energy
        )


class WelchConfig(BaseModel):
    """Averaged-periodogram settings."""

    model_config = _FROZEN

    segment_length: Optional[int] = Field(
        default=None, ge=8, description="Samples per segment; derived from the RBW when unset"
    )
    overlap: float = Field(default=0.5, ge=0.0, lt=1.0)
    window: str = "hann"


class SimConfig(BaseModel):
    """Time-domain homodyne simulation settings."""

    model_config = _FROZEN

    dt: float = Field(..., gt=0.0, description="Integration step (s)")
    duration: float = Field(..., gt=0.0, description="Recorded length after the transient (s)")
    seed: int = Field(default=0, ge=0, lt=2**64)
    lo_power: float = Field(default=1.3e-3, ge=0.0, description="LO power (W)")
    lo_phase: float = Field(default=0.0, description="θ (rad)")
    lo_voltage: Optional[float] = Field(default=None, description="Phase-shifter voltage (V)")
    v_pi: float = Field(default=35.0, gt=0.0)
    electronic_noise_psd: float = Field(
        default=1.0 / 3.3,
        ge=0.0,
        description="Electronic noise PSD relative to shot noise at reference_lo_power",
    )
    reference_lo_power: float = Field(default=1.3e-3, gt=0.0)
    detector_gain: float = Field(default=1.0, gt=0.0, description="PSD gain factor")
    detector_bandwidth: Optional[float] = Field(default=450e6, gt=0.0, description="Hz")
    welch: WelchConfig = Field(default_factory=WelchConfig)
    records: int = Field(
        default=1, ge=1, description="Independent records averaged into each Welch PSD"
    )
    rbw_emulation: float = Field(default=100e3, gt=0.0, description="Hz")
    transient: Optional[float] = Field(
        default=None, ge=0.0, description="Discarded start-up time (s); 10/κ when unset"
    )
    integrator: Integrator = Integrator.EXACT
    excess_noise_psd: list[tuple[float, float]] = Field(
        default_factory=list,
        description="Optional additive noise table (Hz, PSD relative to reference shot noise)",
    )

    @property
    def theta(self) -> float:
        """LO phase; the voltage map θ = πV/V_π wins when a voltage is set."""
        if self.lo_voltage is not None:
            return math.pi * self.lo_voltage / self.v_pi
        return self.lo_phase

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    def segment_length(self) -> int:
        """Welch segment length with bin width no wider than the emulated RBW."""
        if self.welch.segment_length is not None:
            return self.welch.segment_length
        return int(math.ceil(self.sample_rate / self.rbw_emulation))


class FitResult(BaseModel):
    """Outcome of a least-squares fit."""

    model: str = Field(..., description="Fitted model name")
    params: dict[str, float] = Field(..., description="Best-fit parameter values")
    stderr: dict[str, float] = Field(default_factory=dict, description="1σ uncertainties")
    covariance: list[list[float]] = Field(default_factory=list)
    residual_norm: float = Field(..., ge=0.0)
    r_squared: float = Field(..., le=1.0)
    converged: bool
    iterations: int = Field(..., ge=0)
    message: str = ""
    derived: dict[str, float] = Field(default_factory=dict, description="Derived quantities")
    feasible: bool = True


class CouplingDiagnosis(BaseModel):
    """Coupling condition inferred from a phase response."""

    regime: CouplingRegime
    confidence: float = Field(..., ge=0.0, le=1.0)
    phase_excursion: float = Field(..., ge=0.0, description="Unwrapped phase span (rad)")
    escape_efficiency: float = Field(..., ge=0.0, le=1.0)
    residual_undercoupled: float = Field(..., ge=0.0)
    residual_overcoupled: float = Field(..., ge=0.0)
