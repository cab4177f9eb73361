"""Persist the trained model and its history."""
from pathlib import Path

from pipeline.state import CellState
from storage.checkpoint import save_checkpoint
from utils.helpers import file_sha256, write_json
from utils.logger import setup_logger

logger = setup_logger(__name__)


def cell_stem(family: str, seed: int) -> str:
    return f"{family}_seed{seed}"


class RecorderStage:
    """Write `<family>_seed<s>.bin/.json` and `<family>_seed<s>.history.json`."""

    def record(self, state: CellState) -> CellState:
        if not state.get("out_dir"):
            state["step"] = "done"
            return state
        try:
            stem = Path(state["out_dir"]) / "checkpoints" / cell_stem(state["family"], state["seed"])
            paths = save_checkpoint(state["model"], stem, stats=state["dataset"].stats, seed=state["seed"])
            history_path = write_json(
                stem.with_name(stem.name + ".history.json"), state["history"].model_dump(mode="json")
            )
            state["artifacts"] = {
                paths.data.name: file_sha256(paths.data),
                paths.manifest.name: file_sha256(paths.manifest),
                history_path.name: file_sha256(history_path),
            }
            state["step"] = "done"
        except Exception as e:
            logger.error(f"Recording failed: {str(e)}")
            state["error"] = f"recording failed: {str(e)}"
            state["step"] = "record_failed"
        return state


recorder_stage = RecorderStage()
