"""LangGraph state of one benchmark cell (one family, one seed)."""
from typing import Any, Dict, List, Optional, TypedDict

from datagen.dataset import DatasetSplit
from grid.topology import Topology
from models.model import ModelInstance
from schema.records import CellResult, TrainHistory


class CellState(TypedDict):
    """State for the train-once, evaluate-everywhere workflow."""

    # Inputs
    family: str
    seed: int
    model_spec: Dict[str, Any]
    train_config: Dict[str, Any]
    dataset: DatasetSplit
    topology: Topology
    pmu_configs: Dict[int, List[int]]
    out_dir: Optional[str]

    # Projection to the training PMU set
    train_split: Optional[DatasetSplit]
    model: Optional[ModelInstance]

    # Training
    history: Optional[TrainHistory]
    diverged: bool

    # Evaluation
    results: List[CellResult]
    checkpoint_sha256: Optional[str]

    # Recording
    artifacts: Dict[str, str]

    # Workflow control
    step: str
    error: Optional[str]


def initial_state(
    family: str,
    seed: int,
    model_spec: Dict[str, Any],
    train_config: Dict[str, Any],
    dataset: DatasetSplit,
    topology: Topology,
    pmu_configs: Dict[int, List[int]],
    out_dir: Optional[str] = None,
) -> CellState:
    return {
        "family": family,
        "seed": seed,
        "model_spec": model_spec,
        "train_config": train_config,
        "dataset": dataset,
        "topology": topology,
        "pmu_configs": pmu_configs,
        "out_dir": out_dir,
        "train_split": None,
        "model": None,
        "history": None,
        "diverged": False,
        "results": [],
        "checkpoint_sha256": None,
        "artifacts": {},
        "step": "start",
        "error": None,
    }
