"""Helper utility functions."""
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping

import numpy as np


def canonical_json(payload: Any) -> str:
    """Serialize to JSON with sorted keys and no whitespace variance."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(payload: Any) -> str:
    """SHA-256 of the canonical JSON form of a config mapping."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def file_sha256(path: Path) -> str:
    """Hash a file in 1 MiB chunks."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def arrays_sha256(named: Mapping[str, np.ndarray]) -> str:
    """Hash named arrays in key order (names, shapes and float64 bytes)."""
    digest = hashlib.sha256()
    for name in named:
        arr = np.ascontiguousarray(named[name], dtype=np.float64)
        digest.update(name.encode("utf-8"))
        digest.update(str(arr.shape).encode("utf-8"))
        digest.update(arr.tobytes())
    return digest.hexdigest()


def write_json(path: Path, payload: Any) -> Path:
    """Write JSON with stable formatting; parent directories are created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return path


def read_json(path: Path) -> Dict[str, Any]:
    """Read a JSON document."""
    with open(path, "r") as f:
        return json.load(f)


def hash_artifacts(paths: Iterable[Path]) -> Dict[str, str]:
    """Map file name -> SHA-256 for every existing path."""
    return {Path(p).name: file_sha256(Path(p)) for p in paths if Path(p).exists()}
