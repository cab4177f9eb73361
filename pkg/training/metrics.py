"""Detection metrics and seed-level confidence intervals."""
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from datagen.dataset import WindowSet
from schema.records import Metrics
from utils.errors import UsageError


def metrics_from_predictions(predicted: np.ndarray, labels: np.ndarray) -> Metrics:
    predicted = np.asarray(predicted, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    if predicted.shape != labels.shape:
        raise UsageError(f"{predicted.shape} predictions for {labels.shape} labels")
    tp = int(np.sum(predicted & labels))
    fp = int(np.sum(predicted & ~labels))
    tn = int(np.sum(~predicted & ~labels))
    fn = int(np.sum(~predicted & labels))
    return Metrics.from_counts(tp, fp, tn, fn)


def evaluate(model, windows: WindowSet, batch_size: int = 256) -> Metrics:
    """Eval-mode metrics; parameters and running statistics are left untouched."""
    if len(windows) == 0:
        raise UsageError("cannot evaluate on an empty window set")
    predicted = np.concatenate(
        [model.predict_batch(features) for features, _ in windows.batches(batch_size)]
    )
    return metrics_from_predictions(predicted, windows.labels)


def confidence_interval_90(values: Sequence[float]) -> Tuple[float, float]:
    """Two-sided 90% Student-t interval of the mean."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise UsageError(f"a confidence interval needs at least 2 values, got {arr.size}")
    mean = float(arr.mean())
    half = float(stats.t.ppf(0.95, arr.size - 1) * arr.std(ddof=1) / np.sqrt(arr.size))
    return mean - half, mean + half
