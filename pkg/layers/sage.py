"""GraphSAGE layer, full-batch (no neighbor sampling)."""
import numpy as np

from engine import ops
from engine.tensor import Tensor
from layers.module import Module, NeighborIndex, as_neighbor_index, uniform_init
from utils.errors import ConfigError, DimensionError

AGGREGATORS = ("mean", "max")


def aggregate(h: Tensor, index: NeighborIndex, aggregator: str) -> Tensor:
    """Per-node mean or max of neighbor rows along the node axis (-2)."""
    if aggregator == "mean":
        summed = ops.segment_sum(ops.gather(h, index.sources, axis=-2), index.targets, index.num_nodes, axis=-2)
        inv_degree = Tensor((1.0 / index.degree)[:, None])
        return ops.mul(summed, ops.expand(inv_degree, summed.shape))
    width = index.padded.shape[1]
    picked = ops.gather(h, index.padded.reshape(-1), axis=-2)
    grouped = ops.reshape(picked, h.shape[:-2] + (index.num_nodes, width, h.shape[-1]))
    return ops.max_reduce(grouped, axis=-2)


class SageLayer(Module):
    """h'_v = φ(concat(h_v, AGG{h_u : u ∈ N(v)}) W)."""

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        rng: np.random.Generator,
        aggregator: str = "max",
        activation: str = "relu",
    ):
        if aggregator not in AGGREGATORS:
            raise ConfigError(f"aggregator must be one of {AGGREGATORS}, got '{aggregator}'")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.aggregator = aggregator
        self.activation = activation
        self.W = uniform_init(rng, (2 * in_dim, out_dim), 2 * in_dim)

    def forward(self, h: Tensor, neighbors) -> Tensor:
        index = as_neighbor_index(neighbors)
        if h.ndim < 2 or h.shape[-2] != index.num_nodes:
            raise DimensionError(f"{index.num_nodes} neighbor lists for node features {h.shape}")
        agg = aggregate(h, index, self.aggregator)
        return ops.activation(self.activation)(ops.matmul(ops.concat([h, agg], axis=-1), self.W))


def sage_forward(layer: SageLayer, h: Tensor, neighbors) -> Tensor:
    return layer.forward(h, neighbors)
