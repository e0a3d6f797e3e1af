"""Run configuration: one JSON document with a section per module.

``cavity``, ``loss`` and ``pump`` are required; every other section falls back to the
calibration values of the reference device. Unknown keys are rejected, and every schema error
names the dotted key path and the line it sits on.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from sqzlab.config import get_settings
from sqzlab.errors import ConfigSchemaError
from sqzlab.models import (
    CavityParams,
    Integrator,
    LossChain,
    ShgModel,
    SimConfig,
    ThresholdModel,
    WelchConfig,
)
from sqzlab.physics.pump import calibrate_threshold, pump_ratio, shg_power
from sqzlab.physics.rates import derive_rates
from sqzlab.simulation.langevin import MAX_STEP_FRACTION, MIN_SEGMENTS
from sqzlab.units import hz_to_angular, nm, photon_energy

_STRICT = ConfigDict(extra="forbid")

# Records per reading; each default record spans MIN_SEGMENTS segment lengths.
DEFAULT_RECORDS = 10


class CavitySection(BaseModel):
    model_config = _STRICT

    q_total: float = Field(..., gt=0.0)
    q_intrinsic: float = Field(..., gt=0.0)
    resonance_wavelength_nm: float = Field(..., gt=0.0)
    assume_undercoupled: bool = True
    fsr_ghz: Optional[float] = Field(default=None, gt=0.0)
    detuning_mhz: float = 0.0


class LossSection(BaseModel):
    model_config = _STRICT

    path_transmission: float = Field(..., ge=0.0, le=1.0)
    detector_qe: float = Field(..., ge=0.0, le=1.0)
    extra_factors: dict[str, float] = Field(default_factory=dict)


class PumpSection(BaseModel):
    model_config = _STRICT

    threshold_sh_mw: float = Field(..., gt=0.0)
    fh_power_mw: float = Field(..., ge=0.0)
    pump_phase: float = -math.pi / 2
    pump_wavelength_nm: Optional[float] = Field(
        default=None, gt=0.0, description="SH wavelength; half the resonance wavelength when unset"
    )


class ShgSection(BaseModel):
    model_config = _STRICT

    normalized_efficiency: float = Field(default=10.0, ge=0.0, description="Peak η_norm (1/W)")
    response_nm: dict[float, float] = Field(default_factory=lambda: {1544.4: 0.6})


class AnalysisSection(BaseModel):
    model_config = _STRICT

    fmin_mhz: float = Field(default=60.0, ge=0.0)
    fmax_mhz: float = Field(default=140.0, ge=0.0)
    points: int = Field(default=81, ge=1)
    band_mhz: tuple[float, float] = (58.0, 60.0)
    fh_powers_mw: list[float] = Field(
        default_factory=lambda: [5.0 * i for i in range(13)],
        description="On-chip FH powers of the power sweep",
    )
    sweep_freq_mhz: Optional[float] = Field(
        default=None, ge=0.0, description="Sideband of the power sweep; band centre when unset"
    )


class SimulationSection(BaseModel):
    model_config = _STRICT

    dt_ps: Optional[float] = Field(default=None, gt=0.0, description="1% of 2π/κ when unset")
    duration_us: Optional[float] = Field(
        default=None, gt=0.0, description="One record; the minimum segment count when unset"
    )
    records: int = Field(
        default=DEFAULT_RECORDS, ge=1, description="Independent records averaged per reading"
    )
    seed: Optional[int] = Field(default=None, ge=0)
    lo_power_mw: float = Field(default=1.3, ge=0.0)
    v_pi: float = Field(default=35.0, gt=0.0)
    voltages: list[float] = Field(default_factory=lambda: [-35.0 + 5.0 * i for i in range(15)])
    lo_powers_mw: list[float] = Field(default_factory=lambda: [0.2, 0.4, 0.8, 1.3, 2.0])
    electronic_noise_rel: float = Field(default=1.0 / 3.3, ge=0.0)
    detector_gain: float = Field(default=1.0, gt=0.0)
    detector_bandwidth_mhz: Optional[float] = Field(default=450.0, gt=0.0)
    rbw_khz: float = Field(
        default=1000.0, gt=0.0, description="Emulated RBW; 1 MHz still resolves the 2 MHz band"
    )
    segment_length: Optional[int] = Field(default=None, ge=8)
    integrator: Integrator = Integrator.EXACT
    excess_noise: list[tuple[float, float]] = Field(default_factory=list)


class LaserSection(BaseModel):
    model_config = _STRICT

    linewidth_hz: float = Field(default=100.0, gt=0.0)
    mzi_fsr_mhz: float = Field(default=67.0, gt=0.0)
    mzi_path_diff_m: float = Field(default=3.0, gt=0.0)
    operating_point: float = math.pi / 2
    power_mw: float = Field(default=1.0, gt=0.0)
    detector_efficiency: float = Field(default=1.0, ge=0.0, le=1.0)
    fmin_mhz: float = Field(default=1.0, gt=0.0)
    fmax_mhz: float = Field(default=200.0, gt=0.0)
    points: int = Field(default=400, ge=2)


class TransmissionSection(BaseModel):
    model_config = _STRICT

    gain_ratios: list[float] = Field(default_factory=lambda: [0.0, 0.2, 0.4, 0.6, 0.8, 0.9])
    span_linewidths: float = Field(default=4.0, gt=0.0)
    points: int = Field(default=801, ge=5)


class ProjectionSection(BaseModel):
    model_config = _STRICT

    normalized_efficiency: float = Field(default=40.0, gt=0.0)
    reference_efficiency: float = Field(default=10.0, gt=0.0)
    q_total: float = Field(default=200e3, gt=0.0)
    q_intrinsic: float = Field(default=10e6, gt=0.0)
    path_transmission: float = Field(default=0.90, ge=0.0, le=1.0)
    detector_qe: float = Field(default=0.99, ge=0.0, le=1.0)
    fh_powers_mw: list[float] = Field(default_factory=lambda: [2.0 * i for i in range(16)])
    target_db: float = Field(default=-16.0, lt=0.0)


class SqzlabConfig(BaseModel):
    """Validated run configuration."""

    model_config = _STRICT

    cavity: CavitySection
    loss: LossSection
    pump: PumpSection
    shg: ShgSection = Field(default_factory=ShgSection)
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)
    simulation: SimulationSection = Field(default_factory=SimulationSection)
    laser: LaserSection = Field(default_factory=LaserSection)
    transmission: TransmissionSection = Field(default_factory=TransmissionSection)
    projection: ProjectionSection = Field(default_factory=ProjectionSection)

    def cavity_params(self) -> CavityParams:
        fsr_ghz = self.cavity.fsr_ghz or get_settings().fsr_ghz
        return derive_rates(
            self.cavity.q_total,
            self.cavity.q_intrinsic,
            nm(self.cavity.resonance_wavelength_nm),
            assume_undercoupled=self.cavity.assume_undercoupled,
            fsr=hz_to_angular(fsr_ghz * 1e9),
            detuning=hz_to_angular(self.cavity.detuning_mhz * 1e6),
        )

    def loss_chain(self, cavity: CavityParams) -> LossChain:
        return LossChain.from_cavity(
            cavity,
            path_transmission=self.loss.path_transmission,
            detector_qe=self.loss.detector_qe,
            extra_factors=self.loss.extra_factors,
        )

    def shg_model(self) -> ShgModel:
        return ShgModel(
            normalized_efficiency=self.shg.normalized_efficiency,
            response_nm=self.shg.response_nm,
        )

    def pump_photon_energy(self) -> float:
        wavelength_nm = self.pump.pump_wavelength_nm or self.cavity.resonance_wavelength_nm / 2
        return photon_energy(nm(wavelength_nm))

    def threshold(self, cavity: CavityParams) -> ThresholdModel:
        return calibrate_threshold(
            self.pump.threshold_sh_mw * 1e-3, cavity, self.pump_photon_energy()
        )

    def pump_ratio(self, cavity: CavityParams) -> float:
        p_sh = shg_power(
            self.shg_model(), self.pump.fh_power_mw * 1e-3, nm(self.cavity.resonance_wavelength_nm)
        )
        return pump_ratio(p_sh, self.threshold(cavity))

    def sim_config(self, cavity: CavityParams, seed: Optional[int] = None) -> SimConfig:
        """SimConfig for ``cavity``; the seed argument beats the file, which beats settings."""
        section = self.simulation
        dt = (
            section.dt_ps * 1e-12
            if section.dt_ps is not None
            else MAX_STEP_FRACTION * 2 * math.pi / cavity.total_rate
        )
        run_seed = seed if seed is not None else section.seed
        partial = SimConfig(
            dt=dt,
            duration=dt,
            seed=run_seed if run_seed is not None else get_settings().default_seed,
            lo_power=section.lo_power_mw * 1e-3,
            v_pi=section.v_pi,
            electronic_noise_psd=section.electronic_noise_rel,
            detector_gain=section.detector_gain,
            detector_bandwidth=(
                section.detector_bandwidth_mhz * 1e6
                if section.detector_bandwidth_mhz is not None
                else None
            ),
            welch=WelchConfig(segment_length=section.segment_length),
            records=section.records,
            rbw_emulation=section.rbw_khz * 1e3,
            integrator=section.integrator,
            excess_noise_psd=section.excess_noise,
        )
        duration = (
            section.duration_us * 1e-6
            if section.duration_us is not None
            else MIN_SEGMENTS * partial.segment_length() * dt
        )
        return partial.model_copy(update={"duration": duration})


def _key_line(text: str, path: Sequence[Any]) -> Optional[int]:
    """Line of the deepest key of ``path`` found in ``text``; list indices are skipped."""
    position = 0
    found: Optional[int] = None
    for key in path:
        if not isinstance(key, str):
            continue
        match = re.compile(r'"' + re.escape(key) + r'"\s*:').search(text, position)
        if match is None:
            break
        position = match.end()
        found = match.start()
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(data: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Apply ``section.key=value`` overrides; values are parsed as JSON when possible.

    Raises:
        ConfigSchemaError: If an override is malformed or walks into a non-object
    """
    for override in overrides:
        if "=" not in override:
            raise ConfigSchemaError(f"override must look like key.path=value, got {override!r}")
        dotted, raw = override.split("=", 1)
        keys = [k for k in dotted.strip().split(".") if k]
        if not keys:
            raise ConfigSchemaError(f"override has an empty key path: {override!r}")
        node = data
        for depth, key in enumerate(keys[:-1]):
            child = node.setdefault(key, {})
            if not isinstance(child, dict):
                raise ConfigSchemaError(
                    "cannot override inside a non-object value", ".".join(keys[: depth + 1])
                )
            node = child
        node[keys[-1]] = _parse_value(raw)
    return data


def parse_config(text: str, overrides: Sequence[str] = ()) -> SqzlabConfig:
    """Validate a JSON document (plus overrides) against the schema.

    Raises:
        ConfigSchemaError: On JSON syntax errors or schema violations
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigSchemaError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise ConfigSchemaError("configuration must be a JSON object", line=1)
    data = apply_overrides(data, overrides)
    try:
        return SqzlabConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = list(first["loc"])
        key_path = ".".join(str(part) for part in loc)
        line = _key_line(text, loc)
        if line is None and first["type"] == "missing":
            line = _key_line(text, loc[:-1])
        message = first["msg"]
        if first["type"] == "missing":
            message = f"missing required key '{loc[-1]}'"
        elif first["type"] == "extra_forbidden":
            message = f"unknown key '{loc[-1]}'"
        raise ConfigSchemaError(message, key_path, line) from exc


def load_config(path: Path, overrides: Sequence[str] = ()) -> SqzlabConfig:
    """Read and validate a configuration file."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigSchemaError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text, overrides)


def reference_config() -> dict[str, Any]:
    """Configuration document of the reference device."""
    return {
        "cavity": {
            "q_total": 550e3,
            "q_intrinsic": 950e3,
            "resonance_wavelength_nm": 1544.4,
        },
        "loss": {"path_transmission": 0.70, "detector_qe": 0.75},
        "pump": {"threshold_sh_mw": 25.0, "fh_power_mw": 20.0},
    }
