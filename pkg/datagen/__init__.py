from datagen.dataset import (
    DatasetSplit,
    NormalizationStats,
    WindowSet,
    build_dataset,
    count_summary,
    project_to_pmu_subset,
    split_balance,
)
from datagen.scenario import (
    FEATURE_NAMES,
    EventRecord,
    FaultScenario,
    GeneratorConfig,
    enumerate_scenarios,
    load_generator_config,
)
from datagen.simulator import simulate_event
from datagen.windows import WindowSample, slice_windows, window_label

__all__ = [
    "DatasetSplit",
    "EventRecord",
    "FEATURE_NAMES",
    "FaultScenario",
    "GeneratorConfig",
    "NormalizationStats",
    "WindowSample",
    "WindowSet",
    "build_dataset",
    "count_summary",
    "enumerate_scenarios",
    "load_generator_config",
    "project_to_pmu_subset",
    "simulate_event",
    "slice_windows",
    "split_balance",
    "window_label",
]
