"""Checkpoint container: raw float64 parameter bytes plus a JSON manifest."""
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from datagen.dataset import NormalizationStats
from grid.pmu_graph import PmuGraph
from models.model import ModelInstance
from models.spec import ModelSpec
from utils.errors import DataError
from utils.helpers import file_sha256, read_json, write_json
from utils.logger import setup_logger

logger = setup_logger(__name__)

FORMAT_VERSION = 1
_DTYPE = np.dtype("<f8")


@dataclass(frozen=True)
class CheckpointPaths:
    data: Path
    manifest: Path

    @classmethod
    def for_stem(cls, stem: Path) -> "CheckpointPaths":
        stem = Path(stem)
        if stem.suffix in (".bin", ".json"):
            stem = stem.with_suffix("")
        return cls(data=stem.with_suffix(".bin"), manifest=stem.with_suffix(".json"))


def _named_arrays(model: ModelInstance) -> Dict[str, np.ndarray]:
    arrays = {f"param:{name}": p.data for name, p in model.named_parameters()}
    arrays.update({f"buffer:{name}": value for name, value in model.named_buffers()})
    return arrays


def save_checkpoint(
    model: ModelInstance,
    stem: Path,
    stats: Optional[NormalizationStats] = None,
    seed: Optional[int] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> CheckpointPaths:
    """Write `<stem>.bin` and `<stem>.json`; returns both paths."""
    paths = CheckpointPaths.for_stem(stem)
    paths.data.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    with open(paths.data, "wb") as f:
        for name, arr in _named_arrays(model).items():
            raw = np.ascontiguousarray(arr, dtype=_DTYPE).tobytes()
            f.write(raw)
            entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
            offset += len(raw)
    manifest = {
        "format_version": FORMAT_VERSION,
        "spec": model.spec.model_dump(mode="json"),
        "seed": seed,
        "pmu_buses": list(model.graph.pmu_buses),
        "pmu_edges": [list(e) for e in model.graph.edges],
        "normalization": stats.to_dict() if stats is not None else None,
        "tensors": entries,
        "sha256": file_sha256(paths.data),
        "checksum": model.checksum(),
        "extra": extra or {},
    }
    write_json(paths.manifest, manifest)
    logger.info(f"Checkpoint written: {paths.data.name} ({offset} bytes, {len(entries)} tensors)")
    return paths


def read_manifest(stem: Path) -> Dict[str, Any]:
    paths = CheckpointPaths.for_stem(stem)
    if not paths.manifest.exists() or not paths.data.exists():
        raise FileNotFoundError(f"checkpoint not found: {paths.data.with_suffix('')}")
    return read_json(paths.manifest)


def load_checkpoint(stem: Path, graph: Optional[PmuGraph] = None) -> Tuple[ModelInstance, Dict[str, Any]]:
    """Rebuild the model from its manifest and restore θ and running statistics.

    The model is bound to `graph` when given, otherwise to the stored PMU graph.
    """
    paths = CheckpointPaths.for_stem(stem)
    manifest = read_manifest(stem)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint format {manifest.get('format_version')}")
    if file_sha256(paths.data) != manifest["sha256"]:
        raise DataError(f"checkpoint {paths.data.name} does not match its manifest hash")
    stored = PmuGraph(
        pmu_buses=tuple(manifest["pmu_buses"]),
        edges=tuple(tuple(e) for e in manifest["pmu_edges"]),
    )
    model = ModelInstance(ModelSpec.model_validate(manifest["spec"]), stored)
    blob = paths.data.read_bytes()
    params = model.parameters()
    states = dict(model.named_states())
    for entry in manifest["tensors"]:
        kind, name = entry["name"].split(":", 1)
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype=_DTYPE, count=count, offset=entry["offset"]).reshape(shape).astype(np.float64)
        if kind == "param":
            if name not in params or params[name].shape != shape:
                raise DataError(f"checkpoint tensor '{name}' {shape} does not fit the model")
            params[name].data = arr
        else:
            state_name, attr = name.rsplit(".", 1)
            if state_name not in states:
                raise DataError(f"checkpoint buffer '{name}' does not fit the model")
            setattr(states[state_name], attr, arr)
    if model.checksum() != manifest["checksum"]:
        raise DataError("restored parameters do not reproduce the stored checksum")
    if graph is not None:
        model = model.rebind_graph(graph)
    return model, manifest


def load_stats(manifest: Dict[str, Any]) -> Optional[NormalizationStats]:
    payload = manifest.get("normalization")
    return NormalizationStats.from_dict(payload) if payload else None
