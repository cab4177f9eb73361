"""Differentiable operations over `Tensor`.

Binary tensor-tensor ops require equal shapes; use `expand` to broadcast
explicitly. Python scalars are accepted as constants.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from engine.tensor import Function, Tensor
from utils.errors import (
    BatchTooSmallError,
    ConfigError,
    DataError,
    DegenerateNeighborhoodError,
    DimensionError,
)

Scalar = Union[int, float]


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum out broadcast dimensions so `grad` matches `shape`."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for dim, extent in enumerate(shape):
        if extent == 1 and grad.shape[dim] != 1:
            grad = grad.sum(axis=dim, keepdims=True)
    return grad


def _same_shape(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------- arithmetic

class Add(Function):
    def forward(self, a, b):
        _same_shape(a, b, "add")
        return a + b

    def backward(self, grad):
        return grad, grad


class Sub(Function):
    def forward(self, a, b):
        _same_shape(a, b, "sub")
        return a - b

    def backward(self, grad):
        return grad, -grad


class Mul(Function):
    def forward(self, a, b):
        _same_shape(a, b, "mul")
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class AddConst(Function):
    def forward(self, x, c):
        return x + c

    def backward(self, grad):
        return (grad,)


class MulConst(Function):
    def forward(self, x, c):
        self.c = c
        return x * c

    def backward(self, grad):
        return (grad * self.c,)


def add(a: Tensor, b: Union[Tensor, Scalar]) -> Tensor:
    if isinstance(b, Tensor):
        return Add.apply(a, b)
    return AddConst.apply(a, c=float(b))


def sub(a: Tensor, b: Union[Tensor, Scalar]) -> Tensor:
    if isinstance(b, Tensor):
        return Sub.apply(a, b)
    return AddConst.apply(a, c=-float(b))


def mul(a: Tensor, b: Union[Tensor, Scalar]) -> Tensor:
    if isinstance(b, Tensor):
        return Mul.apply(a, b)
    return MulConst.apply(a, c=float(b))


class MatMul(Function):
    """Matrix product with numpy batch broadcasting over leading axes."""

    def forward(self, a, b):
        if a.ndim < 2 or b.ndim < 2:
            raise DimensionError(f"matmul needs >=2-D operands, got {a.shape} and {b.shape}")
        if a.shape[-1] != b.shape[-2]:
            raise DimensionError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
        try:
            np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
        except ValueError as e:
            raise DimensionError(f"matmul batch dimensions differ: {a.shape} @ {b.shape}") from e
        self.a, self.b = a, b
        if b.ndim == 2:
            k = a.shape[-1]
            return (a.reshape(-1, k) @ b).reshape(a.shape[:-1] + (b.shape[-1],))
        return a @ b

    def backward(self, grad):
        a, b = self.a, self.b
        if b.ndim == 2:
            k, n = b.shape
            g2 = grad.reshape(-1, n)
            grad_a = (g2 @ b.T).reshape(a.shape)
            grad_b = a.reshape(-1, k).T @ g2
            return grad_a, grad_b
        grad_a = unbroadcast(grad @ np.swapaxes(b, -1, -2), a.shape)
        grad_b = unbroadcast(np.swapaxes(a, -1, -2) @ grad, b.shape)
        return grad_a, grad_b


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul.apply(a, b)


# ---------------------------------------------------------------- pointwise

class Sigmoid(Function):
    def forward(self, x):
        e = np.exp(-np.abs(x))
        self.out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Tanh(Function):
    def forward(self, x):
        self.out = np.tanh(x)
        return self.out

    def backward(self, grad):
        return (grad * (1.0 - self.out ** 2),)


class Relu(Function):
    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0.0)

    def backward(self, grad):
        return (grad * self.mask,)


class LeakyRelu(Function):
    def forward(self, x, slope):
        self.slope = slope
        self.mask = x > 0
        return np.where(self.mask, x, slope * x)

    def backward(self, grad):
        return (grad * np.where(self.mask, 1.0, self.slope),)


def sigmoid(x: Tensor) -> Tensor:
    return Sigmoid.apply(x)


def tanh(x: Tensor) -> Tensor:
    return Tanh.apply(x)


def relu(x: Tensor) -> Tensor:
    return Relu.apply(x)


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    if not 0.0 < slope < 1.0:
        raise ConfigError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    return LeakyRelu.apply(x, slope=slope)


def identity(x: Tensor) -> Tensor:
    return x


ACTIVATIONS = {
    "relu": relu,
    "tanh": tanh,
    "sigmoid": sigmoid,
    "leaky_relu": leaky_relu,
    "identity": identity,
}


def activation(name: str):
    """Look up a pointwise activation by name."""
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ConfigError(f"unknown activation '{name}', expected one of {sorted(ACTIVATIONS)}")


def elementwise(op: str, *operands, **kwargs) -> Tensor:
    """Dispatch a named pointwise op: add, sub, mul, sigmoid, tanh, leaky_relu, relu."""
    binary = {"add": add, "sub": sub, "mul": mul}
    if op in binary:
        return binary[op](*operands)
    return activation(op)(*operands, **kwargs)


# ---------------------------------------------------------------- shape ops

class Sum(Function):
    def forward(self, x, axis, keepdims):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        return np.asarray(np.sum(x, axis=axis, keepdims=keepdims))

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    return Sum.apply(x, axis=axis, keepdims=keepdims)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = x.size if axis is None else int(np.prod([x.shape[a] for a in np.atleast_1d(axis)]))
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


class Reshape(Function):
    def forward(self, x, shape):
        self.shape = x.shape
        try:
            return x.reshape(shape)
        except ValueError as e:
            raise DimensionError(f"cannot reshape {x.shape} to {shape}") from e

    def backward(self, grad):
        return (grad.reshape(self.shape),)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(x, shape=tuple(shape))


class Expand(Function):
    def forward(self, x, shape):
        self.shape = x.shape
        try:
            return np.broadcast_to(x, shape).copy()
        except ValueError as e:
            raise DimensionError(f"cannot broadcast {x.shape} to {shape}") from e

    def backward(self, grad):
        return (unbroadcast(grad, self.shape),)


def expand(x: Tensor, shape: Sequence[int]) -> Tensor:
    """Broadcast to `shape`; the backward pass sums over repeated axes."""
    return Expand.apply(x, shape=tuple(shape))


class Index(Function):
    def forward(self, x, key):
        self.shape, self.key = x.shape, key
        return np.array(x[key])

    def backward(self, grad):
        out = np.zeros(self.shape)
        np.add.at(out, self.key, grad)
        return (out,)


def index(x: Tensor, key) -> Tensor:
    return Index.apply(x, key=key)


class Gather(Function):
    def forward(self, x, indices, axis):
        self.shape, self.indices, self.axis = x.shape, indices, axis
        return np.take(x, indices, axis=axis)

    def backward(self, grad):
        out = np.zeros(self.shape)
        np.add.at(np.moveaxis(out, self.axis, 0), self.indices, np.moveaxis(grad, self.axis, 0))
        return (out,)


def gather(x: Tensor, indices: np.ndarray, axis: int = 0) -> Tensor:
    """Select slices along `axis` (repeats allowed)."""
    return Gather.apply(x, indices=np.asarray(indices, dtype=np.int64), axis=axis)


class SegmentSum(Function):
    def forward(self, x, segments, num_segments, axis):
        self.segments, self.axis = segments, axis
        moved = np.moveaxis(x, axis, 0)
        out = np.zeros((num_segments,) + moved.shape[1:])
        np.add.at(out, segments, moved)
        return np.moveaxis(out, 0, axis)

    def backward(self, grad):
        return (np.take(grad, self.segments, axis=self.axis),)


def segment_sum(x: Tensor, segments: np.ndarray, num_segments: int, axis: int = 0) -> Tensor:
    """Sum slices along `axis` into `num_segments` buckets given by `segments`."""
    segments = np.asarray(segments, dtype=np.int64)
    if segments.shape != (x.shape[axis],):
        raise DimensionError(f"segment ids {segments.shape} do not match axis extent {x.shape[axis]}")
    return SegmentSum.apply(x, segments=segments, num_segments=num_segments, axis=axis)


class MaxReduce(Function):
    """Max along an axis; the gradient goes to the first arg-max."""

    def forward(self, x, axis):
        if x.shape[axis] == 0:
            raise DimensionError("max over an empty axis")
        self.shape, self.axis = x.shape, axis
        self.argmax = np.expand_dims(np.argmax(x, axis=axis), axis)
        return np.take_along_axis(x, self.argmax, axis=axis).squeeze(axis)

    def backward(self, grad):
        out = np.zeros(self.shape)
        np.put_along_axis(out, self.argmax, np.expand_dims(grad, self.axis), axis=self.axis)
        return (out,)


def max_reduce(x: Tensor, axis: int) -> Tensor:
    return MaxReduce.apply(x, axis=axis)


class Concat(Function):
    def forward(self, *arrays, axis):
        first = arrays[0]
        for arr in arrays[1:]:
            if arr.ndim != first.ndim:
                raise DimensionError(f"concat rank mismatch {first.shape} vs {arr.shape}")
            for dim in range(first.ndim):
                if dim != axis % first.ndim and arr.shape[dim] != first.shape[dim]:
                    raise DimensionError(f"concat extent mismatch {first.shape} vs {arr.shape} off axis {axis}")
        self.axis = axis
        self.splits = np.cumsum([arr.shape[axis] for arr in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise DimensionError("concat needs at least one tensor")
    return Concat.apply(*tensors, axis=axis)


# ---------------------------------------------------------------- graph ops

class SegmentSoftmax(Function):
    def forward(self, scores, segments, num_segments, axis):
        self.segments, self.axis, self.num_segments = segments, axis, num_segments
        s = np.moveaxis(scores, axis, 0)
        peak = np.full((num_segments,) + s.shape[1:], -np.inf)
        np.maximum.at(peak, segments, s)
        ex = np.exp(s - peak[segments])
        denom = np.zeros_like(peak)
        np.add.at(denom, segments, ex)
        self.out = ex / denom[segments]
        return np.moveaxis(self.out, 0, axis)

    def backward(self, grad):
        g = np.moveaxis(grad, self.axis, 0)
        weighted = np.zeros((self.num_segments,) + g.shape[1:])
        np.add.at(weighted, self.segments, g * self.out)
        return (np.moveaxis(self.out * (g - weighted[self.segments]), 0, self.axis),)


def segment_softmax(
    scores: Tensor,
    segments: np.ndarray,
    num_segments: Optional[int] = None,
    axis: int = -1,
) -> Tensor:
    """Softmax of edge scores normalized within each target-node segment."""
    segments = np.asarray(segments, dtype=np.int64)
    if segments.shape != (scores.shape[axis],):
        raise DimensionError(f"segment ids {segments.shape} do not match score extent {scores.shape[axis]}")
    if num_segments is None:
        num_segments = int(segments.max()) + 1 if segments.size else 0
    if segments.size and (segments.min() < 0 or segments.max() >= num_segments):
        raise DimensionError(f"segment ids must lie in [0, {num_segments})")
    counts = np.bincount(segments, minlength=num_segments)
    if num_segments == 0 or np.any(counts == 0):
        empty = np.flatnonzero(counts == 0).tolist()
        raise DegenerateNeighborhoodError(f"segments without members: {empty}")
    return SegmentSoftmax.apply(scores, segments=segments, num_segments=num_segments, axis=axis)


# ---------------------------------------------------------------- regularization

class Dropout(Function):
    def forward(self, x, mask):
        self.mask = mask
        return x * mask

    def backward(self, grad):
        return (grad * self.mask,)


def dropout(x: Tensor, p: float, training: bool, rng: Optional[np.random.Generator] = None) -> Tensor:
    """Inverted dropout: survivors are scaled by 1/(1-p); eval mode is identity."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ConfigError("dropout in training mode needs a seeded generator")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return Dropout.apply(x, mask=mask)


@dataclass
class BatchNormState:
    """Running statistics of one batch-norm block."""

    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def fresh(cls, features: int) -> "BatchNormState":
        return cls(running_mean=np.zeros(features), running_var=np.ones(features))


class BatchNorm(Function):
    def forward(self, x, gamma, beta, mean, var, eps):
        self.inv_std = 1.0 / np.sqrt(var + eps)
        self.xhat = (x - mean) * self.inv_std
        self.gamma = gamma
        return gamma * self.xhat + beta

    def backward(self, grad):
        grad_gamma = (grad * self.xhat).sum(axis=0)
        grad_beta = grad.sum(axis=0)
        gxhat = grad * self.gamma
        if self.training:
            n = grad.shape[0]
            grad_x = (self.inv_std / n) * (
                n * gxhat - gxhat.sum(axis=0) - self.xhat * (gxhat * self.xhat).sum(axis=0)
            )
        else:
            grad_x = gxhat * self.inv_std
        return grad_x, grad_gamma, grad_beta


def batch_norm(
    x: Tensor,
    state: BatchNormState,
    gamma: Tensor,
    beta: Tensor,
    training: bool,
) -> Tensor:
    """Normalize a B×D batch per feature; training mode updates the running stats."""
    if x.ndim != 2:
        raise DimensionError(f"batch_norm expects B×D input, got {x.shape}")
    features = x.shape[1]
    if gamma.shape != (features,) or beta.shape != (features,):
        raise DimensionError(f"gamma/beta must have shape ({features},)")
    if training:
        rows = x.shape[0]
        if rows < 2:
            raise BatchTooSmallError("batch_norm in training mode needs at least 2 rows")
        mean = x.data.mean(axis=0)
        var = x.data.var(axis=0)
        m = state.momentum
        state.running_mean = (1.0 - m) * state.running_mean + m * mean
        state.running_var = (1.0 - m) * state.running_var + m * var * rows / (rows - 1)
    else:
        mean, var = state.running_mean, state.running_var
    return _apply_batch_norm(x, gamma, beta, mean, var, state.eps, training)


def _apply_batch_norm(x, gamma, beta, mean, var, eps, training) -> Tensor:
    fn_cls = _BatchNormTrain if training else _BatchNormEval
    return fn_cls.apply(x, gamma, beta, mean=mean, var=var, eps=eps)


class _BatchNormTrain(BatchNorm):
    training = True


class _BatchNormEval(BatchNorm):
    training = False


# ---------------------------------------------------------------- loss

class BceWithLogits(Function):
    def forward(self, z, labels):
        self.z, self.labels = z, labels
        losses = np.maximum(z, 0.0) - z * labels + np.log1p(np.exp(-np.abs(z)))
        return np.asarray(losses.mean())

    def backward(self, grad):
        e = np.exp(-np.abs(self.z))
        prob = np.where(self.z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        return (grad * (prob - self.labels) / self.z.size,)


def bce_with_logits(logits: Tensor, labels) -> Tensor:
    """Mean binary cross-entropy on logits, stable for large |z|."""
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != logits.shape:
        raise DimensionError(f"labels {labels.shape} do not match logits {logits.shape}")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise DataError("labels must be 0 or 1")
    return BceWithLogits.apply(logits, labels=labels)
