"""Training stage."""
from pipeline.state import CellState
from training.config import TrainConfig
from training.trainer import train
from utils.errors import DivergenceError
from utils.logger import setup_logger

logger = setup_logger(__name__)


class TrainerStage:
    """Train the bound model once; divergence ends the cell without retry."""

    def train_model(self, state: CellState) -> CellState:
        config = TrainConfig.model_validate(state["train_config"])
        split = state["train_split"]
        try:
            state["history"] = train(state["model"], split.train, config, state["seed"], validation=split.validation)
            state["step"] = "trained"
        except DivergenceError as e:
            logger.warning(f"diverged (epoch {e.epoch}, batch {e.batch}): {e}")
            state["diverged"] = True
            state["error"] = f"diverged at epoch {e.epoch}, batch {e.batch}: {e}"
            state["step"] = "diverged"
        return state


trainer_stage = TrainerStage()
