"""Model family enumeration and the validated architecture spec."""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from engine.ops import ACTIVATIONS
from utils.errors import ConfigError


class Family(str, Enum):
    GRU_LOCAL = "gru_local"
    GRU_AGG = "gru_agg"
    RGCN = "rgcn"
    RGSAGE = "rgsage"
    RGAT = "rgat"
    RGATV2 = "rgatv2"

    @property
    def uses_graph(self) -> bool:
        return self not in (Family.GRU_LOCAL, Family.GRU_AGG)

    @property
    def uses_attention(self) -> bool:
        return self in (Family.RGAT, Family.RGATV2)

    @classmethod
    def parse(cls, name: str) -> "Family":
        try:
            return cls(name.strip().lower())
        except ValueError as e:
            known = ", ".join(f.value for f in cls)
            raise ConfigError(f"unknown model family '{name}' (expected one of: {known})") from e


ALL_FAMILIES = tuple(Family)


class Detection(str, Enum):
    FAULT = "fault"
    NO_FAULT = "no_fault"


class ModelSpec(BaseModel):
    """Architecture of one model; serialized into every checkpoint."""

    model_config = ConfigDict(frozen=True, use_enum_values=False)

    family: Family
    input_dim: int = Field(default=9, ge=1)
    hidden: int = Field(default=128, ge=1)
    gnn_out: int = Field(default=128, ge=1)
    gnn_layers: int = Field(default=1, ge=1)
    sage_aggregator: Optional[str] = None
    heads: int = Field(default=1, ge=1)
    self_loops: bool = True
    dropout: float = Field(default=0.2, ge=0.0, lt=1.0)
    attn_dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    leaky_slope: float = Field(default=0.2, gt=0.0, lt=1.0)
    activation: str = "relu"
    seed: int = 0

    @field_validator("family", mode="before")
    @classmethod
    def _parse_family(cls, value):
        return Family.parse(value) if isinstance(value, str) else value

    @model_validator(mode="before")
    @classmethod
    def _default_aggregator(cls, data):
        if isinstance(data, dict) and data.get("sage_aggregator") is None:
            family = data.get("family")
            if family == Family.RGSAGE or (isinstance(family, str) and family.strip().lower() == "rgsage"):
                data = {**data, "sage_aggregator": "max"}
        return data

    @model_validator(mode="after")
    def _family_fields(self) -> "ModelSpec":
        if self.family == Family.RGSAGE:
            if self.sage_aggregator not in ("mean", "max"):
                raise ValueError(f"sage_aggregator must be 'mean' or 'max', got '{self.sage_aggregator}'")
        elif self.sage_aggregator is not None:
            raise ValueError("sage_aggregator applies only to the rgsage family")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation '{self.activation}'")
        return self

    @property
    def label(self) -> str:
        """Family name with the SAGE aggregator, e.g. `rgsage-max`."""
        if self.family == Family.RGSAGE:
            return f"{self.family.value}-{self.sage_aggregator}"
        return self.family.value


def build_spec(family, **overrides) -> ModelSpec:
    """ModelSpec with pydantic failures re-raised as ConfigError."""
    try:
        return ModelSpec(family=family, **overrides)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
