"""Generator configuration, fault scenarios and simulated event records."""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from utils.errors import ConfigError
from utils.helpers import config_hash, read_json

FEATURE_NAMES: Tuple[str, ...] = (
    "v_mag_a", "v_mag_b", "v_mag_c",
    "i_mag_a", "i_mag_b", "i_mag_c",
    "v_ang_a", "v_ang_b", "v_ang_c",
)
NUM_FEATURES = len(FEATURE_NAMES)


class WaveformConfig(BaseModel):
    """Calibration knobs of the surrogate waveform model (non-physical)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    noise_sigma: float = Field(default=0.005, ge=0.0)
    base_depth: float = Field(default=0.6, gt=0.0, lt=1.0)
    decay_beta: float = Field(default=0.35, ge=0.0)
    resistance_rho0: float = Field(default=4.0, gt=0.0)
    current_surge: float = Field(default=3.0, ge=0.0)
    healthy_phase_swell: float = Field(default=0.08, ge=0.0)
    healthy_phase_current: float = Field(default=0.15, ge=0.0)
    angle_shift_deg: float = Field(default=12.0, ge=0.0)
    voltage_drop: float = Field(default=0.06, ge=0.0, lt=1.0)
    angle_drift_deg: float = Field(default=4.0, ge=0.0)
    base_current_a: float = Field(default=180.0, gt=0.0)
    # inverter-interfaced generation at `der_buses`
    der_support: float = Field(default=0.0, ge=0.0, lt=1.0)
    der_noise_scale: float = Field(default=1.0, ge=1.0)
    der_export: float = Field(default=0.0, ge=0.0, lt=1.0)
    # per-PMU calibration bias, fixed for a bus across events and seeds
    pmu_offset_sigma: float = Field(default=0.0, ge=0.0)


class GeneratorConfig(BaseModel):
    """Scenario grid and recording protocol for one dataset."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    preset: str = "full"
    seed: int = 0
    topology: str = "ieee123.topo"
    pmu_config: str = "25"
    fault_buses: List[int]
    der_buses: List[int] = []
    resistances_ohm: List[float] = [0.1, 1.0, 10.0]
    load_scales_pu: List[float] = [0.7, 1.0, 1.3]
    record_ms: int = Field(default=60, gt=0)
    onset_ms: int = Field(default=40, ge=0)
    duration_ms: int = Field(default=20, ge=0)
    sampling_ms: int = Field(default=1, gt=0)
    window: int = Field(default=20, gt=0)
    split_fractions: Tuple[float, float, float] = (0.68, 0.17, 0.15)
    waveform: WaveformConfig = WaveformConfig()

    @field_validator("fault_buses")
    @classmethod
    def _unique_buses(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one fault bus is required")
        if len(set(value)) != len(value):
            raise ValueError("fault buses must be unique")
        return value

    @field_validator("der_buses")
    @classmethod
    def _unique_der(cls, value: List[int]) -> List[int]:
        if len(set(value)) != len(value):
            raise ValueError("DER buses must be unique")
        return sorted(value)

    @field_validator("resistances_ohm", "load_scales_pu")
    @classmethod
    def _positive(cls, value: List[float]) -> List[float]:
        if not value or any(v <= 0 for v in value):
            raise ValueError("values must be a non-empty list of positive numbers")
        return value

    @model_validator(mode="after")
    def _protocol(self) -> "GeneratorConfig":
        if self.onset_ms + self.duration_ms > self.record_ms:
            raise ValueError("onset_ms + duration_ms exceeds the record length")
        if self.window > self.samples:
            raise ValueError("window is longer than the record")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9 or min(self.split_fractions) < 0:
            raise ValueError("split fractions must be non-negative and sum to 1")
        return self

    @property
    def samples(self) -> int:
        return self.record_ms // self.sampling_ms

    @property
    def onset_sample(self) -> int:
        return self.onset_ms // self.sampling_ms

    @property
    def duration_samples(self) -> int:
        return self.duration_ms // self.sampling_ms

    @property
    def windows_per_record(self) -> int:
        return self.samples - self.window + 1

    def digest(self) -> str:
        return config_hash(self.model_dump(mode="json"))


def load_generator_config(path: Path) -> GeneratorConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"generator config not found: {path}")
    try:
        return GeneratorConfig.model_validate(read_json(path))
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"invalid generator config {path.name}: {e}") from e


class FaultScenario(BaseModel):
    """One LG fault event: location, fault path resistance and loading."""

    model_config = ConfigDict(frozen=True)

    scenario_id: int = Field(ge=0)
    fault_bus: int
    resistance: float = Field(gt=0.0)
    load_scale: float = Field(gt=0.0)
    onset_ms: int = Field(default=40, ge=0)
    duration_ms: int = Field(default=20, ge=0)


def enumerate_scenarios(cfg: GeneratorConfig) -> List[FaultScenario]:
    """Loads × fault locations in that nesting order.

    Resistance is cycled across fault locations so each load scenario sees
    every resistance while the event count stays loads × locations.
    """
    scenarios = []
    for load in cfg.load_scales_pu:
        for loc, bus in enumerate(cfg.fault_buses):
            scenarios.append(
                FaultScenario(
                    scenario_id=len(scenarios),
                    fault_bus=bus,
                    resistance=cfg.resistances_ohm[loc % len(cfg.resistances_ohm)],
                    load_scale=load,
                    onset_ms=cfg.onset_ms,
                    duration_ms=cfg.duration_ms,
                )
            )
    return scenarios


@dataclass(frozen=True)
class EventRecord:
    """Per-PMU measurements of one event: `values` is P × T × F."""

    scenario: FaultScenario
    pmu_buses: Tuple[int, ...]
    values: np.ndarray
    sampling_ms: int = 1

    @property
    def num_samples(self) -> int:
        return self.values.shape[1]
