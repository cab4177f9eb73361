"""
Pydantic records persisted by the pipeline (histories, reports, manifests).
"""
from datetime import datetime, timezone
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class Metrics(BaseModel):
    """Confusion counts of a binary fault detector and the derived scores."""
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    accuracy: float = 0.0

    @property
    def support(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_counts(cls, tp: int, fp: int, tn: int, fn: int) -> "Metrics":
        # 0/0 is defined as 0 for every ratio
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        total = tp + fp + tn + fn
        accuracy = (tp + tn) / total if total else 0.0
        return cls(tp=tp, fp=fp, tn=tn, fn=fn, precision=precision, recall=recall, f1=f1, accuracy=accuracy)


class TrainHistory(BaseModel):
    """Per-epoch training record of one (family, seed) run."""
    family: str
    seed: int
    n_pmus: int
    config: Dict
    train_loss: List[float] = []
    val_f1: List[float] = []
    checksum: Optional[str] = None

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)


class CellResult(BaseModel):
    """Metrics of one trained model on one test PMU configuration."""
    family: str
    n_pmus: int
    seed: int
    metrics: Optional[Metrics] = None
    checkpoint_sha256: Optional[str] = None
    status: str = "ok"
    error: Optional[str] = None


class AggregateRow(BaseModel):
    """Mean F1 over seeds with a two-sided 90% Student-t interval."""
    family: str
    n_pmus: int
    mean_f1: float
    ci_low: float
    ci_high: float
    seeds: int

    @model_validator(mode="after")
    def _ordered(self) -> "AggregateRow":
        if not self.ci_low <= self.mean_f1 <= self.ci_high:
            raise ValueError("interval does not contain the mean")
        return self


class Provenance(BaseModel):
    dataset_seed: int
    dataset_sha256: Dict[str, str] = {}
    generator_config_hash: str
    train_config_hash: str
    seeds: List[int]
    families: List[str]
    train_pmus: int
    test_pmus: List[int]
    code_version: str
    created_at: str = Field(default_factory=utc_now)


class BenchmarkReport(BaseModel):
    """Complete (or partial) generalization grid."""
    cells: List[CellResult] = []
    aggregates: List[AggregateRow] = []
    provenance: Provenance
    complete: bool = False

    def ok_cells(self) -> List[CellResult]:
        return [c for c in self.cells if c.status == "ok" and c.metrics is not None]

    def expected_cells(self) -> int:
        p = self.provenance
        return len(p.families) * len(p.test_pmus) * len(p.seeds)


class RunManifest(BaseModel):
    """Written next to every command's outputs."""
    command: str
    config_path: Optional[str] = None
    config_hash: Optional[str] = None
    seeds: List[int] = []
    output_dir: str
    arguments: Dict = {}
    started_at: str = Field(default_factory=utc_now)
    finished_at: Optional[str] = None
    exit_code: int = 0
    artifacts: Dict[str, str] = {}
