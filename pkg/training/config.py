"""Training hyperparameters."""
from pathlib import Path
from typing import List

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from utils.errors import ConfigError
from utils.helpers import config_hash, read_json


class TrainConfig(BaseModel):
    """Fixed-budget AdamW training; serialized into every result record."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(default=35, gt=0)
    batch_size: int = Field(default=32, gt=0)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    weight_decay: float = Field(default=1e-2, ge=0.0)
    dropout: float = Field(default=0.2, ge=0.0, lt=1.0)
    attn_dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    seeds: List[int] = [0, 1, 2, 3, 4]
    hidden: int = Field(default=128, gt=0)
    train_pmus: int = 11
    test_pmus: List[int] = [7, 11, 15, 19, 25]

    @field_validator("seeds", "test_pmus")
    @classmethod
    def _non_empty_unique(cls, value: List[int]) -> List[int]:
        if not value or len(set(value)) != len(value):
            raise ValueError("must be a non-empty list without duplicates")
        return value

    def digest(self) -> str:
        return config_hash(self.model_dump(mode="json"))


def load_train_config(path: Path) -> TrainConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"train config not found: {path}")
    try:
        return TrainConfig.model_validate(read_json(path))
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"invalid train config {path.name}: {e}") from e
