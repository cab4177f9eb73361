"""Attention message passing: GAT (v1) and GATv2."""
from typing import List, Optional

import numpy as np

from engine import ops
from engine.tensor import Tensor
from layers.module import Module, NeighborIndex, as_neighbor_index, uniform_init
from utils.errors import ConfigError, DimensionError


def _per_edge(x: Tensor, rows: np.ndarray) -> Tensor:
    return ops.gather(x, rows, axis=-2)


def _drop_edge_axis(scores: Tensor) -> Tensor:
    """(..., E, 1) -> (..., E)"""
    return ops.reshape(scores, scores.shape[:-1])


class GatHead(Module):
    """One v1 head: e_vu = LeakyReLU(aᵀ [W h_v ‖ W h_u]), messages W h_u."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.W = uniform_init(rng, (in_dim, out_dim), in_dim)
        self.a = uniform_init(rng, (2 * out_dim, 1), 2 * out_dim)

    def scores_and_messages(self, h: Tensor, index: NeighborIndex, slope: float):
        out_dim = self.W.shape[1]
        z = ops.matmul(h, self.W)
        target_part = ops.matmul(z, self.a[:out_dim])
        source_part = ops.matmul(z, self.a[out_dim:])
        raw = ops.add(_per_edge(target_part, index.targets), _per_edge(source_part, index.sources))
        scores = _drop_edge_axis(ops.leaky_relu(raw, slope))
        return scores, _per_edge(z, index.sources)


class GatV2Head(Module):
    """One v2 head: e_vu = aᵀ LeakyReLU(W₁ h_v + W₂ h_u), messages W₂ h_u."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.W1 = uniform_init(rng, (in_dim, out_dim), in_dim)
        self.W2 = uniform_init(rng, (in_dim, out_dim), in_dim)
        self.a = uniform_init(rng, (out_dim, 1), out_dim)

    def scores_and_messages(self, h: Tensor, index: NeighborIndex, slope: float):
        p1 = ops.matmul(h, self.W1)
        p2 = ops.matmul(h, self.W2)
        source_rows = _per_edge(p2, index.sources)
        hidden = ops.leaky_relu(ops.add(_per_edge(p1, index.targets), source_rows), slope)
        scores = _drop_edge_axis(ops.matmul(hidden, self.a))
        return scores, source_rows


class _AttentionLayer(Module):
    head_cls = GatHead

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        rng: np.random.Generator,
        heads: int = 1,
        slope: float = 0.2,
        attn_dropout: float = 0.0,
        self_loops: bool = True,
        activation: str = "relu",
    ):
        if heads < 1:
            raise ConfigError(f"heads must be >= 1, got {heads}")
        if not 0.0 <= attn_dropout < 1.0:
            raise ConfigError(f"attention dropout must lie in [0, 1), got {attn_dropout}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.slope = slope
        self.attn_dropout = attn_dropout
        self.self_loops = self_loops
        self.activation = activation
        self.heads = [self.head_cls(in_dim, out_dim, rng) for _ in range(heads)]

    def index(self, neighbors) -> NeighborIndex:
        if isinstance(neighbors, NeighborIndex):
            return neighbors
        return as_neighbor_index(neighbors, self_loops=self.self_loops)

    def attention(self, h: Tensor, neighbors) -> List[Tensor]:
        """Per-head α over the index's edges (…×E), before attention dropout."""
        index = self.index(neighbors)
        return [
            ops.segment_softmax(head.scores_and_messages(h, index, self.slope)[0], index.targets, index.num_nodes)
            for head in self.heads
        ]

    def forward(
        self,
        h: Tensor,
        neighbors,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        index = self.index(neighbors)
        if h.ndim < 2 or h.shape[-2] != index.num_nodes:
            raise DimensionError(f"{index.num_nodes} neighborhoods for node features {h.shape}")
        combined = None
        for head in self.heads:
            scores, messages = head.scores_and_messages(h, index, self.slope)
            alpha = ops.segment_softmax(scores, index.targets, index.num_nodes)
            alpha = ops.dropout(alpha, self.attn_dropout, training, rng)
            weights = ops.expand(ops.reshape(alpha, alpha.shape + (1,)), messages.shape)
            pooled = ops.segment_sum(ops.mul(messages, weights), index.targets, index.num_nodes, axis=-2)
            combined = pooled if combined is None else ops.add(combined, pooled)
        if len(self.heads) > 1:
            combined = ops.mul(combined, 1.0 / len(self.heads))
        return ops.activation(self.activation)(combined)


class GatLayer(_AttentionLayer):
    """Original graph attention; head outputs are averaged."""

    head_cls = GatHead


class GatV2Layer(_AttentionLayer):
    """Graph attention with separate source/target transforms."""

    head_cls = GatV2Head


def gat_forward(layer: _AttentionLayer, h: Tensor, neighbors, training: bool = False, rng=None) -> Tensor:
    return layer.forward(h, neighbors, training=training, rng=rng)
