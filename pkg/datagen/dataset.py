"""Dataset assembly: simulate every scenario, window, split and normalize."""
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from datagen.scenario import FEATURE_NAMES, FaultScenario, GeneratorConfig, enumerate_scenarios
from datagen.simulator import event_rng, simulate_event
from datagen.windows import slice_windows, stack_windows
from grid.topology import Topology
from utils.errors import ConfigError, DataError
from utils.logger import setup_logger

logger = setup_logger(__name__)

SPLIT_NAMES = ("train", "validation", "test")
# Extra entropy word separating the split shuffle from event streams.
_SPLIT_STREAM = 0x5EED


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature Z-score statistics fitted on training windows."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "NormalizationStats":
        flat = features.reshape(-1, features.shape[-1])
        mean = flat.mean(axis=0)
        std = flat.std(axis=0)
        return cls(mean=mean, std=np.where(std > 0, std, 1.0))

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.std

    def to_dict(self) -> Dict[str, List[float]]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, payload: Dict[str, Sequence[float]]) -> "NormalizationStats":
        return cls(mean=np.asarray(payload["mean"], dtype=np.float64), std=np.asarray(payload["std"], dtype=np.float64))


@dataclass(frozen=True)
class WindowSet:
    """Graph-level windows of one split over a fixed PMU ordering."""

    features: np.ndarray
    labels: np.ndarray
    scenario_ids: np.ndarray
    offsets: np.ndarray
    pmu_buses: Tuple[int, ...]

    def __post_init__(self):
        n = len(self.labels)
        if self.features.ndim != 4 or self.features.shape[0] != n:
            raise DataError(f"features {self.features.shape} do not match {n} labels")
        if self.features.shape[1] != len(self.pmu_buses):
            raise DataError(f"features have {self.features.shape[1]} nodes for {len(self.pmu_buses)} PMUs")
        if len(self.scenario_ids) != n or len(self.offsets) != n:
            raise DataError("metadata arrays do not match the window count")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def num_nodes(self) -> int:
        return len(self.pmu_buses)

    @property
    def keys(self) -> List[Tuple[int, int]]:
        """(scenario id, window offset) per window."""
        return list(zip(self.scenario_ids.tolist(), self.offsets.tolist()))

    def subset(self, rows: np.ndarray) -> "WindowSet":
        return WindowSet(
            features=self.features[rows],
            labels=self.labels[rows],
            scenario_ids=self.scenario_ids[rows],
            offsets=self.offsets[rows],
            pmu_buses=self.pmu_buses,
        )

    def select_nodes(self, buses: Sequence[int]) -> "WindowSet":
        position = {b: i for i, b in enumerate(self.pmu_buses)}
        missing = [b for b in buses if b not in position]
        if missing:
            raise ConfigError(f"PMU buses {missing} are not in the dataset's PMU set")
        cols = [position[b] for b in buses]
        return replace(self, features=self.features[:, cols], pmu_buses=tuple(buses))

    def batches(self, batch_size: int, rng: Optional[np.random.Generator] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Mini-batches in a seeded shuffled order (stored order without rng)."""
        order = rng.permutation(len(self)) if rng is not None else np.arange(len(self))
        for start in range(0, len(order), batch_size):
            rows = order[start:start + batch_size]
            yield self.features[rows], self.labels[rows]


@dataclass(frozen=True)
class DatasetSplit:
    train: WindowSet
    validation: WindowSet
    test: WindowSet
    stats: NormalizationStats
    scenarios: Tuple[FaultScenario, ...] = ()
    seed: int = 0
    feature_names: Tuple[str, ...] = FEATURE_NAMES
    config: Optional[GeneratorConfig] = field(default=None, compare=False)

    @property
    def pmu_buses(self) -> Tuple[int, ...]:
        return self.train.pmu_buses

    def splits(self) -> Dict[str, WindowSet]:
        return {"train": self.train, "validation": self.validation, "test": self.test}


def _simulate(args) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    topo, scenario, pmus, seed, cfg = args
    rec = simulate_event(topo, scenario, pmus, event_rng(seed, scenario.scenario_id), cfg)
    return stack_windows(slice_windows(rec, window=cfg.window, expected_samples=cfg.samples))


def split_sizes(total: int, fractions: Sequence[float]) -> Tuple[int, int, int]:
    n_train = int(round(fractions[0] * total))
    n_val = int(round(fractions[1] * total))
    return n_train, n_val, total - n_train - n_val


def build_dataset(
    topo: Topology,
    pmus25: Sequence[int],
    seed: int,
    cfg: GeneratorConfig,
    jobs: int = 1,
) -> DatasetSplit:
    """Simulate all scenarios on the full PMU set and split at window level."""
    pmus = tuple(sorted(int(b) for b in pmus25))
    missing = [b for b in pmus + tuple(cfg.fault_buses) if b not in topo.graph]
    if missing:
        raise ConfigError(f"buses not on the feeder: {sorted(set(missing))}")
    scenarios = enumerate_scenarios(cfg)
    tasks = [(topo, s, pmus, seed, cfg) for s in scenarios]
    logger.info(f"Simulating {len(scenarios)} events on {len(pmus)} PMUs (jobs={jobs})")
    if jobs > 1:
        with Pool(processes=jobs) as pool:
            parts = pool.map(_simulate, tasks)
    else:
        parts = [_simulate(t) for t in tasks]

    features = np.concatenate([p[0] for p in parts])
    everything = WindowSet(
        features=features,
        labels=np.concatenate([p[1] for p in parts]),
        scenario_ids=np.concatenate([p[2] for p in parts]),
        offsets=np.concatenate([p[3] for p in parts]),
        pmu_buses=pmus,
    )

    order = np.random.default_rng([seed, _SPLIT_STREAM]).permutation(len(everything))
    n_train, n_val, _ = split_sizes(len(everything), cfg.split_fractions)
    rows = {
        "train": np.sort(order[:n_train]),
        "validation": np.sort(order[n_train:n_train + n_val]),
        "test": np.sort(order[n_train + n_val:]),
    }
    stats = NormalizationStats.fit(everything.features[rows["train"]])
    normalized = replace(everything, features=stats.apply(everything.features))
    split = DatasetSplit(
        train=normalized.subset(rows["train"]),
        validation=normalized.subset(rows["validation"]),
        test=normalized.subset(rows["test"]),
        stats=stats,
        scenarios=tuple(scenarios),
        seed=seed,
        config=cfg,
    )
    logger.info(
        f"Dataset ready: {len(everything)} graph windows "
        f"(train {len(split.train)}, validation {len(split.validation)}, test {len(split.test)})"
    )
    return split


def project_to_pmu_subset(split: DatasetSplit, cfg: Sequence[int]) -> DatasetSplit:
    """Keep only the rows of the given PMU buses; labels and stats are unchanged."""
    buses = tuple(sorted(int(b) for b in cfg))
    if not buses:
        raise ConfigError("PMU subset is empty")
    not_subset = sorted(set(buses) - set(split.pmu_buses))
    if not_subset:
        raise ConfigError(f"PMU buses {not_subset} are not a subset of the dataset's PMU set")
    return replace(
        split,
        train=split.train.select_nodes(buses),
        validation=split.validation.select_nodes(buses),
        test=split.test.select_nodes(buses),
    )


def count_summary(split: DatasetSplit) -> pd.DataFrame:
    """Per-split window counts, per PMU stream and per graph window."""
    rows = []
    for name, ws in split.splits().items():
        faulty = int(ws.labels.sum())
        rows.append(
            {
                "split": name,
                "graph_windows": len(ws),
                "graph_faulty": faulty,
                "graph_non_faulty": len(ws) - faulty,
                "pmu_windows": len(ws) * ws.num_nodes,
                "pmu_faulty": faulty * ws.num_nodes,
                "pmu_non_faulty": (len(ws) - faulty) * ws.num_nodes,
            }
        )
    table = pd.DataFrame(rows)
    total = table.drop(columns="split").sum().to_dict()
    total["split"] = "total"
    return pd.concat([table, pd.DataFrame([total])], ignore_index=True)[list(rows[0].keys())]


def split_balance(split: DatasetSplit) -> pd.DataFrame:
    """Faulty fraction per split."""
    return pd.DataFrame(
        [
            {"split": name, "windows": len(ws), "fault_fraction": float(ws.labels.mean()) if len(ws) else 0.0}
            for name, ws in split.splits().items()
        ]
    )
