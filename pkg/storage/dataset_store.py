"""Dataset files: one `.npy` tensor per split plus `manifest.json`."""
from pathlib import Path
from typing import Any, Dict

import numpy as np

from datagen.dataset import SPLIT_NAMES, DatasetSplit, NormalizationStats, WindowSet
from datagen.scenario import FaultScenario, GeneratorConfig
from utils.errors import DataError
from utils.helpers import file_sha256, read_json, write_json
from utils.logger import setup_logger

logger = setup_logger(__name__)

MANIFEST = "manifest.json"


def save_dataset(split: DatasetSplit, out_dir: Path) -> Dict[str, Path]:
    """Byte-deterministic for a given (config, seed): plain .npy, sorted JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: Dict[str, Path] = {}
    splits_meta: Dict[str, Any] = {}
    for name, ws in split.splits().items():
        path = out_dir / f"{name}.npy"
        np.save(path, np.ascontiguousarray(ws.features, dtype="<f8"), allow_pickle=False)
        paths[name] = path
        splits_meta[name] = {
            "shape": list(ws.features.shape),
            "labels": ws.labels.tolist(),
            "scenario_ids": ws.scenario_ids.tolist(),
            "offsets": ws.offsets.tolist(),
            "sha256": file_sha256(path),
        }
    manifest = {
        "feature_names": list(split.feature_names),
        "pmu_buses": list(split.pmu_buses),
        "normalization": split.stats.to_dict(),
        "seed": split.seed,
        "config": split.config.model_dump(mode="json") if split.config is not None else None,
        "scenarios": [s.model_dump(mode="json") for s in split.scenarios],
        "splits": splits_meta,
    }
    paths["manifest"] = write_json(out_dir / MANIFEST, manifest)
    logger.info(f"Dataset written to {out_dir}")
    return paths


def load_dataset(data_dir: Path) -> DatasetSplit:
    data_dir = Path(data_dir)
    manifest_path = data_dir / MANIFEST
    if not manifest_path.exists():
        raise FileNotFoundError(f"no dataset manifest in {data_dir}")
    manifest = read_json(manifest_path)
    buses = tuple(manifest["pmu_buses"])
    sets = {}
    for name in SPLIT_NAMES:
        meta = manifest["splits"][name]
        path = data_dir / f"{name}.npy"
        if not path.exists():
            raise DataError(f"missing split file {path.name}")
        if file_sha256(path) != meta["sha256"]:
            raise DataError(f"{path.name} does not match its manifest hash")
        features = np.load(path, allow_pickle=False)
        if list(features.shape) != meta["shape"]:
            raise DataError(f"{path.name} has shape {features.shape}, manifest says {meta['shape']}")
        sets[name] = WindowSet(
            features=features.astype(np.float64),
            labels=np.asarray(meta["labels"], dtype=np.int64),
            scenario_ids=np.asarray(meta["scenario_ids"], dtype=np.int64),
            offsets=np.asarray(meta["offsets"], dtype=np.int64),
            pmu_buses=buses,
        )
    config = manifest.get("config")
    return DatasetSplit(
        train=sets["train"],
        validation=sets["validation"],
        test=sets["test"],
        stats=NormalizationStats.from_dict(manifest["normalization"]),
        scenarios=tuple(FaultScenario.model_validate(s) for s in manifest["scenarios"]),
        seed=int(manifest["seed"]),
        feature_names=tuple(manifest["feature_names"]),
        config=GeneratorConfig.model_validate(config) if config else None,
    )


def dataset_hashes(data_dir: Path) -> Dict[str, str]:
    data_dir = Path(data_dir)
    return {p.name: file_sha256(p) for p in sorted(data_dir.glob("*.npy"))} | {
        MANIFEST: file_sha256(data_dir / MANIFEST)
    }
