"""Graph readout and the binary classification head."""
import numpy as np

from engine import ops
from engine.tensor import Tensor
from layers.module import Module, uniform_init
from utils.errors import DimensionError, EmptyGraphError


def maxpool_readout(h: Tensor) -> Tensor:
    """Feature-wise max over the node axis (-2): N×H -> H, B×N×H -> B×H."""
    if h.ndim < 2:
        raise DimensionError(f"readout expects node features, got {h.shape}")
    if h.shape[-2] == 0:
        raise EmptyGraphError("cannot pool a graph with no nodes")
    return ops.max_reduce(h, axis=-2)


class ClassifyHead(Module):
    """Single logit z = h·w + b."""

    def __init__(self, in_dim: int, rng: np.random.Generator):
        self.in_dim = in_dim
        self.w = uniform_init(rng, (in_dim, 1), in_dim)
        self.b = uniform_init(rng, (1,), in_dim)

    def forward(self, h: Tensor) -> Tensor:
        if h.shape[-1] != self.in_dim:
            raise DimensionError(f"head expects {self.in_dim} features, got {h.shape}")
        z = ops.matmul(ops.reshape(h, (-1, self.in_dim)), self.w)
        z = ops.add(z, ops.expand(self.b, z.shape))
        return ops.reshape(z, h.shape[:-1])


def classify_head(head: ClassifyHead, h: Tensor) -> Tensor:
    return head.forward(h)
