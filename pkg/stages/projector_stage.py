"""Projection of the dataset to the training PMU set and model construction."""
from datagen.dataset import project_to_pmu_subset
from grid.pmu_graph import induce_pmu_graph
from models.model import ModelInstance
from models.spec import ModelSpec
from pipeline.state import CellState
from training.config import TrainConfig
from utils.logger import setup_logger

logger = setup_logger(__name__)


class ProjectorStage:
    """Bind a freshly seeded model to the training PMU graph."""

    def project(self, state: CellState) -> CellState:
        config = TrainConfig.model_validate(state["train_config"])
        logger.info(f"projecting to {config.train_pmus} PMUs")
        try:
            buses = state["pmu_configs"][config.train_pmus]
            state["train_split"] = project_to_pmu_subset(state["dataset"], buses)
            graph = induce_pmu_graph(state["topology"], buses)
            spec = ModelSpec.model_validate({**state["model_spec"], "seed": state["seed"]})
            state["model"] = ModelInstance(spec, graph)
            state["step"] = "projected"
        except Exception as e:
            logger.error(f"Projection failed: {str(e)}")
            state["error"] = f"projection failed: {str(e)}"
            state["step"] = "project_failed"
        return state


projector_stage = ProjectorStage()
