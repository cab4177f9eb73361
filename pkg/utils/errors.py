"""Exception hierarchy shared by every package."""
from typing import Optional


class FaultDetectionError(Exception):
    """Base class for all library errors."""


class ConfigError(FaultDetectionError, ValueError):
    """Invalid configuration value or unknown identifier."""


class DimensionError(FaultDetectionError, ValueError):
    """Tensor shapes do not agree for the requested operation."""


class DegenerateNeighborhoodError(FaultDetectionError, ValueError):
    """A node has no neighbor to aggregate or attend over."""


class EmptyGraphError(FaultDetectionError, ValueError):
    """Readout over a graph without nodes."""


class EmptySequenceError(FaultDetectionError, ValueError):
    """Recurrent cell called on a zero-length sequence."""


class BatchTooSmallError(FaultDetectionError, ValueError):
    """Batch normalization in training mode needs at least two rows."""


class DataError(FaultDetectionError, ValueError):
    """Malformed records, labels or dataset files."""


class UsageError(FaultDetectionError, RuntimeError):
    """API called out of contract (empty inputs, non-scalar loss, ...)."""


class ConstructionError(FaultDetectionError, ValueError):
    """A derived structure could not be built (e.g. disconnected PMU graph)."""


class TopologyError(FaultDetectionError, ValueError):
    """Malformed feeder topology or unreachable bus."""


class BindingError(FaultDetectionError, ValueError):
    """Sample node set does not match the model's graph binding."""


class NonFiniteError(FaultDetectionError, FloatingPointError):
    """NaN or Inf found where finite values are required."""


class DivergenceError(FaultDetectionError, RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: Optional[int] = None, batch: Optional[int] = None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class IncompleteGridError(FaultDetectionError, RuntimeError):
    """Benchmark grid has failed or missing cells; `report` holds what finished."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
