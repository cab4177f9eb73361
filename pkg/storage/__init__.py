from storage.checkpoint import CheckpointPaths, load_checkpoint, load_stats, read_manifest, save_checkpoint
from storage.dataset_store import dataset_hashes, load_dataset, save_dataset

__all__ = [
    "CheckpointPaths",
    "dataset_hashes",
    "load_checkpoint",
    "load_dataset",
    "load_stats",
    "read_manifest",
    "save_checkpoint",
    "save_dataset",
]
