"""Bundled presets: generator configs, training config and PMU placements."""
from pathlib import Path
from typing import Dict, List, Optional

from config.settings import settings
from datagen.scenario import GeneratorConfig, load_generator_config
from grid.topology import Topology, load_topology
from training.config import TrainConfig, load_train_config
from utils.errors import ConfigError
from utils.helpers import read_json

PRESET_FILES = {
    "full": "generator.json",
    "desk": "generator.desk.json",
}


class PresetManager:
    """Resolve preset names and bundled files under `config/`."""

    def __init__(self, config_dir: Optional[Path] = None):
        self.config_dir = Path(config_dir) if config_dir else settings.config_dir

    def generator_path(self, preset: str) -> Path:
        try:
            return self.config_dir / PRESET_FILES[preset]
        except KeyError:
            raise ConfigError(f"unknown preset '{preset}' (expected one of: {', '.join(PRESET_FILES)})")

    def generator_config(self, preset: str = "full", path: Optional[Path] = None) -> GeneratorConfig:
        return load_generator_config(Path(path) if path else self.generator_path(preset))

    def train_config(self, path: Optional[Path] = None) -> TrainConfig:
        return load_train_config(Path(path) if path else self.config_dir / "train.json")

    def topology(self, cfg: Optional[GeneratorConfig] = None) -> Topology:
        name = cfg.topology if cfg is not None else settings.topology_path.name
        return load_topology(self.config_dir / name)

    def pmu_configs(self) -> Dict[int, List[int]]:
        """PMU count -> ascending bus list, each smaller set nested in the larger ones."""
        path = self.config_dir / settings.pmu_configs_path.name
        if not path.exists():
            raise ConfigError(f"PMU configuration table not found: {path}")
        table = {int(k): sorted(int(b) for b in v) for k, v in read_json(path).items()}
        for n, buses in table.items():
            if len(buses) != n:
                raise ConfigError(f"PMU configuration '{n}' lists {len(buses)} buses")
        sizes = sorted(table)
        for small, large in zip(sizes, sizes[1:]):
            if not set(table[small]) <= set(table[large]):
                raise ConfigError(f"PMU configuration {small} is not a subset of {large}")
        return table

    def pmu_config(self, n: int) -> List[int]:
        table = self.pmu_configs()
        if n not in table:
            raise ConfigError(f"no PMU configuration with {n} PMUs (available: {sorted(table)})")
        return table[n]


presets = PresetManager()
