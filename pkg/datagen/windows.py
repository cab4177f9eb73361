"""Sliding windows over event records and their fault labels."""
from dataclasses import dataclass
from typing import List

import numpy as np

from datagen.scenario import EventRecord
from utils.errors import DataError


@dataclass(frozen=True)
class WindowSample:
    """One graph-level window: `features` is N × S × F."""

    features: np.ndarray
    label: int
    scenario_id: int
    offset: int


def window_label(offset: int, window: int, onset: int, duration: int) -> int:
    """1 iff [offset, offset + window) overlaps [onset, onset + duration)."""
    if duration <= 0:
        return 0
    return int(offset < onset + duration and onset < offset + window)


def slice_windows(rec: EventRecord, window: int = 20, expected_samples: int = 60) -> List[WindowSample]:
    if rec.num_samples != expected_samples:
        raise DataError(f"record has {rec.num_samples} samples, expected {expected_samples}")
    onset = rec.scenario.onset_ms // rec.sampling_ms
    duration = rec.scenario.duration_ms // rec.sampling_ms
    return [
        WindowSample(
            features=rec.values[:, offset:offset + window, :],
            label=window_label(offset, window, onset, duration),
            scenario_id=rec.scenario.scenario_id,
            offset=offset,
        )
        for offset in range(rec.num_samples - window + 1)
    ]


def stack_windows(samples: List[WindowSample]):
    """(features W×N×S×F, labels, scenario ids, offsets) as arrays."""
    if not samples:
        raise DataError("no windows to stack")
    return (
        np.stack([s.features for s in samples]),
        np.asarray([s.label for s in samples], dtype=np.int64),
        np.asarray([s.scenario_id for s in samples], dtype=np.int64),
        np.asarray([s.offset for s in samples], dtype=np.int64),
    )
