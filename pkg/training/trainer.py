"""Fixed-budget mini-batch training loop."""
from typing import Optional

import numpy as np

from datagen.dataset import WindowSet
from engine.tensor import backward
from models.model import ModelInstance
from schema.records import TrainHistory
from training.config import TrainConfig
from training.metrics import evaluate
from training.optim import AdamW
from utils.errors import BindingError, DivergenceError
from utils.logger import setup_logger

logger = setup_logger(__name__)

# Entropy words keeping the shuffle and dropout streams of one seed apart.
_SHUFFLE_STREAM = 1
_DROPOUT_STREAM = 2


def train(
    model: ModelInstance,
    train_set: WindowSet,
    config: TrainConfig,
    seed: int,
    validation: Optional[WindowSet] = None,
) -> TrainHistory:
    """Train `model` in place for `config.epochs` epochs; the last epoch's θ is kept."""
    for ws in (train_set, validation):
        if ws is not None and ws.pmu_buses != model.graph.pmu_buses:
            raise BindingError(f"windows over PMUs {ws.pmu_buses} but model bound to {model.graph.pmu_buses}")
    shuffle_rng = np.random.default_rng([seed, _SHUFFLE_STREAM])
    dropout_rng = np.random.default_rng([seed, _DROPOUT_STREAM])
    optimizer = AdamW(model.parameters(), config.learning_rate, config.weight_decay)
    history = TrainHistory(
        family=model.spec.label,
        seed=seed,
        n_pmus=model.num_nodes,
        config=config.model_dump(mode="json"),
    )

    for epoch in range(1, config.epochs + 1):
        total, seen = 0.0, 0
        for batch, (features, labels) in enumerate(train_set.batches(config.batch_size, shuffle_rng), start=1):
            optimizer.zero_grad()
            loss = model.loss(features, labels, training=True, rng=dropout_rng)
            value = loss.item()
            if not np.isfinite(value):
                raise DivergenceError(
                    f"loss became {value} at epoch {epoch}, batch {batch}", epoch=epoch, batch=batch
                )
            backward(loss)
            optimizer.step(epoch=epoch, batch=batch)
            total += value * len(labels)
            seen += len(labels)
            logger.debug(f"epoch {epoch} batch {batch}: loss {value:.6f}")
        history.train_loss.append(total / seen)
        if validation is not None and len(validation):
            history.val_f1.append(evaluate(model, validation).f1)
        val = f", val F1 {history.val_f1[-1]:.4f}" if history.val_f1 else ""
        logger.info(f"epoch {epoch}/{config.epochs}: loss {history.train_loss[-1]:.4f}{val}")

    history.checksum = model.checksum()
    return history
