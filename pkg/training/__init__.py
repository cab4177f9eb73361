from training.config import TrainConfig, load_train_config
from training.metrics import confidence_interval_90, evaluate, metrics_from_predictions
from training.optim import AdamState, AdamW, adamw_step
from training.trainer import train

__all__ = [
    "AdamState",
    "AdamW",
    "TrainConfig",
    "adamw_step",
    "confidence_interval_90",
    "evaluate",
    "load_train_config",
    "metrics_from_predictions",
    "train",
]
