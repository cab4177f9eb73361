"""LangGraph workflow of one benchmark cell."""
from typing import Literal

from langgraph.graph import END, StateGraph

from pipeline.state import CellState
from stages.evaluator_stage import evaluator_stage
from stages.projector_stage import projector_stage
from stages.recorder_stage import recorder_stage
from stages.trainer_stage import trainer_stage
from utils.logger import setup_logger

logger = setup_logger(__name__)


def create_workflow():
    """project -> train -> evaluate -> record, stopping early on failure."""

    workflow = StateGraph(CellState)

    workflow.add_node("project", projector_stage.project)
    workflow.add_node("train", trainer_stage.train_model)
    workflow.add_node("evaluate", evaluator_stage.evaluate_all)
    workflow.add_node("record", recorder_stage.record)

    def should_train(state: CellState) -> Literal["train", "end"]:
        return "end" if state.get("error") else "train"

    workflow.add_conditional_edges("project", should_train, {"train": "train", "end": END})

    # Diverged cells are reported, not retried
    def should_evaluate(state: CellState) -> Literal["evaluate", "end"]:
        if state.get("diverged") or state.get("error"):
            return "end"
        return "evaluate"

    workflow.add_conditional_edges("train", should_evaluate, {"evaluate": "evaluate", "end": END})

    def should_record(state: CellState) -> Literal["record", "end"]:
        return "end" if state.get("error") else "record"

    workflow.add_conditional_edges("evaluate", should_record, {"record": "record", "end": END})
    workflow.add_edge("record", END)

    workflow.set_entry_point("project")

    return workflow.compile()


cell_workflow = create_workflow()
