"""Evaluation of one trained model on every test PMU configuration."""
from datagen.dataset import project_to_pmu_subset
from grid.pmu_graph import induce_pmu_graph
from pipeline.state import CellState
from schema.records import CellResult
from training.config import TrainConfig
from training.metrics import evaluate
from utils.logger import setup_logger

logger = setup_logger(__name__)


class EvaluatorStage:
    """Rebind the trained parameters to each test graph and score the test split."""

    def evaluate_all(self, state: CellState) -> CellState:
        config = TrainConfig.model_validate(state["train_config"])
        model = state["model"]
        state["checkpoint_sha256"] = model.checksum()
        results = []
        try:
            for n in config.test_pmus:
                buses = state["pmu_configs"][n]
                test = project_to_pmu_subset(state["dataset"], buses).test
                bound = model.rebind_graph(induce_pmu_graph(state["topology"], buses))
                metrics = evaluate(bound, test)
                logger.info(f"N={n}: F1 {metrics.f1:.4f}")
                results.append(
                    CellResult(
                        family=state["family"],
                        n_pmus=n,
                        seed=state["seed"],
                        metrics=metrics,
                        checkpoint_sha256=state["checkpoint_sha256"],
                    )
                )
            state["results"] = results
            state["step"] = "evaluated"
        except Exception as e:
            logger.error(f"Evaluation failed: {str(e)}")
            state["results"] = results
            state["error"] = f"evaluation failed: {str(e)}"
            state["step"] = "evaluate_failed"
        return state


evaluator_stage = EvaluatorStage()
