"""Dense float64 tensors with reverse-mode automatic differentiation.

A `Tensor` wraps a numpy array. Every differentiable operation is a
`Function` subclass; applying it records the function on the output tensor.
`Tape.trace` walks those records from a loss back to the leaves and orders
them topologically, and `backward` replays the tape in reverse to populate
`.grad` on every leaf that requires it.
"""
import contextlib
import contextvars
import weakref
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import settings
from utils.errors import NonFiniteError, UsageError

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]

_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar("grad_enabled", default=True)
_debug_finite: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "debug_finite", default=settings.DEBUG_FINITE
)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Run ops without recording them (evaluation, finite differences)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


@contextlib.contextmanager
def debug_finite(enabled: bool = True) -> Iterator[None]:
    """Check every op output for NaN/Inf while the context is active."""
    token = _debug_finite.set(enabled)
    try:
        yield
    finally:
        _debug_finite.reset(token)


def grad_enabled() -> bool:
    return _grad_enabled.get()


def _assert_finite(arr: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{where}: tensor contains NaN or Inf")


class Tensor:
    """N-dimensional float64 value that can take part in gradient computation."""

    __array_priority__ = 100.0

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        *,
        _creator: Optional["Function"] = None,
    ):
        if _creator is None:
            arr = np.array(data, dtype=np.float64)
            _assert_finite(arr, "Tensor construction")
        else:
            arr = np.asarray(data, dtype=np.float64)
        self.data: np.ndarray = arr
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._creator = _creator

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._creator is None

    def item(self) -> float:
        if self.data.size != 1:
            raise UsageError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Copy of the underlying values."""
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> "Tape":
        return backward(self)

    # operator sugar, the ops module holds the implementations
    def __add__(self, other):
        from engine import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from engine import ops
        return ops.add(self, other)

    def __sub__(self, other):
        from engine import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from engine import ops
        return ops.add(ops.mul(self, -1.0), other)

    def __mul__(self, other):
        from engine import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from engine import ops
        return ops.mul(self, other)

    def __neg__(self):
        from engine import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from engine import ops
        return ops.matmul(self, other)

    def __getitem__(self, key):
        from engine import ops
        return ops.index(self, key)

    def reshape(self, *shape) -> "Tensor":
        from engine import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        from engine import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"


class Function:
    """One recorded operation: its inputs, its output and the backward rule.

    Subclasses implement `forward` on raw arrays and `backward`, which maps
    dL/d(output) to a tuple with one dL/d(input) per input (None when the
    input gets no gradient).
    """

    def __init__(self, *inputs: Tensor):
        self.inputs: Tuple[Tensor, ...] = inputs
        self.output: Callable[[], Optional[Tensor]] = lambda: None

    def forward(self, *arrays: np.ndarray, **kwargs) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no forward rule")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{type(self).__name__} has no backward rule")

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs) -> Tensor:
        fn = cls(*inputs)
        out_data = fn.forward(*(t.data for t in inputs), **kwargs)
        if _debug_finite.get():
            _assert_finite(out_data, cls.__name__)
        track = grad_enabled() and any(t.requires_grad for t in inputs)
        if not track:
            return Tensor(out_data, _creator=_DETACHED)
        out = Tensor(out_data, requires_grad=True, _creator=fn)
        fn.output = weakref.ref(out)
        return out


class _Detached(Function):
    """Marker creator for op outputs that were not recorded."""


# Op outputs outside the tape skip the construction copy but are not leaves
# with gradients; the sentinel keeps `is_leaf` False for them.
_DETACHED = _Detached()


class Tape:
    """Operations reachable from an output, in topological order.

    Every record's inputs were produced by records earlier in the list (or
    are leaves), so replaying the list backwards visits each consumer before
    its producers.
    """

    def __init__(self, records: List[Function]):
        self.records = records

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Function]:
        return iter(self.records)

    @classmethod
    def trace(cls, output: Tensor) -> "Tape":
        records: List[Function] = []
        if not isinstance(output._creator, Function) or output._creator is _DETACHED:
            return cls(records)
        visited = set()
        stack: List[Tuple[Function, bool]] = [(output._creator, False)]
        while stack:
            fn, expanded = stack.pop()
            if expanded:
                records.append(fn)
                continue
            if id(fn) in visited:
                continue
            visited.add(id(fn))
            stack.append((fn, True))
            for tensor in reversed(fn.inputs):
                creator = tensor._creator
                if tensor.requires_grad and creator is not None and creator is not _DETACHED:
                    if id(creator) not in visited:
                        stack.append((creator, False))
        return cls(records)

    def backward(self, output: Tensor, grad: np.ndarray) -> None:
        if not self.records:
            if output.requires_grad:
                output.grad = grad.copy() if output.grad is None else output.grad + grad
            return
        pending: Dict[int, np.ndarray] = {id(output): grad}
        for fn in reversed(self.records):
            produced = fn.output()
            if produced is None:
                continue
            upstream = pending.pop(id(produced), None)
            if upstream is None:
                continue
            input_grads = fn.backward(upstream)
            for tensor, g in zip(fn.inputs, input_grads):
                if g is None or not tensor.requires_grad:
                    continue
                if g.shape != tensor.shape:
                    raise UsageError(
                        f"{type(fn).__name__} backward returned shape {g.shape} for input {tensor.shape}"
                    )
                if tensor.is_leaf:
                    tensor.grad = g.copy() if tensor.grad is None else tensor.grad + g
                else:
                    key = id(tensor)
                    pending[key] = pending[key] + g if key in pending else g


def backward(loss: Tensor) -> Tape:
    """Populate `.grad` of every requires_grad leaf reachable from a scalar loss.

    Gradients accumulate across calls until the caller resets them.
    """
    if loss.data.size != 1 or loss.ndim > 1:
        raise UsageError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise UsageError("loss was not produced on the tape (no input requires grad)")
    tape = Tape.trace(loss)
    tape.backward(loss, np.ones_like(loss.data))
    return tape


def parameter(data: ArrayLike) -> Tensor:
    """Learnable leaf tensor."""
    return Tensor(data, requires_grad=True)


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)
