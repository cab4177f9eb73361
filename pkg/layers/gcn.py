"""Graph convolution over a normalized adjacency."""
import numpy as np

from engine import ops
from engine.tensor import Tensor
from layers.module import Module, uniform_init
from utils.errors import DimensionError


class GcnLayer(Module):
    """H' = φ(Â H W); W has no bias."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, activation: str = "relu"):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.W = uniform_init(rng, (in_dim, out_dim), in_dim)

    def forward(self, h: Tensor, a_hat: Tensor) -> Tensor:
        """`h` is N×H or B×N×H; `a_hat` is N×N."""
        if h.ndim < 2 or a_hat.shape != (h.shape[-2], h.shape[-2]):
            raise DimensionError(f"Â {a_hat.shape} does not fit node features {h.shape}")
        mixed = ops.matmul(a_hat, h)
        return ops.activation(self.activation)(ops.matmul(mixed, self.W))


def gcn_forward(layer: GcnLayer, h: Tensor, a_hat: Tensor) -> Tensor:
    return layer.forward(h, a_hat)
