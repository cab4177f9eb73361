"""Parameter containers, seeded initialization and neighbor indexing."""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from engine import ops
from engine.ops import BatchNormState
from engine.tensor import Tensor, parameter
from utils.errors import DegenerateNeighborhoodError


def uniform_init(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> Tensor:
    """Learnable tensor drawn from U(-s, s) with s = 1/sqrt(fan_in)."""
    bound = 1.0 / np.sqrt(fan_in)
    return parameter(rng.uniform(-bound, bound, size=shape))


class Module:
    """Holds learnable tensors and child modules as attributes.

    Parameter names follow attribute insertion order, so two modules built
    from the same seed enumerate identical names in identical order.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                yield f"{prefix}{name}", value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{name}.{i}.")

    def parameters(self) -> Dict[str, Tensor]:
        return dict(self.named_parameters())

    def named_states(self, prefix: str = "") -> Iterator[Tuple[str, BatchNormState]]:
        """Running batch-norm statistics, keyed like parameters."""
        for name, value in vars(self).items():
            if isinstance(value, BatchNormState):
                yield f"{prefix}{name}", value
            elif isinstance(value, Module):
                yield from value.named_states(f"{prefix}{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_states(f"{prefix}{name}.{i}.")

    def named_buffers(self) -> Iterator[Tuple[str, np.ndarray]]:
        for name, state in self.named_states():
            yield f"{name}.running_mean", state.running_mean
            yield f"{name}.running_var", state.running_var

    def zero_grad(self) -> None:
        for _, p in self.named_parameters():
            p.zero_grad()


class BatchNorm(Module):
    """Learnable affine batch normalization over the last axis."""

    def __init__(self, features: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = parameter(np.ones(features))
        self.beta = parameter(np.zeros(features))
        self.state = BatchNormState.fresh(features)
        self.state.momentum = momentum
        self.state.eps = eps

    def forward(self, x: Tensor, training: bool) -> Tensor:
        """Rows are every leading index (graphs × nodes in the GNN block)."""
        rows = ops.reshape(x, (-1, x.shape[-1]))
        out = ops.batch_norm(rows, self.state, self.gamma, self.beta, training)
        return ops.reshape(out, x.shape)


@dataclass(frozen=True)
class NeighborIndex:
    """Edge arrays derived from per-node neighbor lists.

    `targets`/`sources` list every directed message edge grouped by target;
    `padded` is N×K with short rows repeating their first neighbor, which
    leaves a max over the row unchanged.
    """

    num_nodes: int
    targets: np.ndarray
    sources: np.ndarray
    degree: np.ndarray
    padded: np.ndarray

    @classmethod
    def from_lists(cls, neighbors: Sequence[Sequence[int]], self_loops: bool = False) -> "NeighborIndex":
        rows: List[List[int]] = []
        for v, nbrs in enumerate(neighbors):
            members = sorted(set(int(u) for u in nbrs) | ({v} if self_loops else set()))
            if not members:
                raise DegenerateNeighborhoodError(f"node {v} has an empty neighborhood")
            rows.append(members)
        targets = np.asarray([v for v, row in enumerate(rows) for _ in row], dtype=np.int64)
        sources = np.asarray([u for row in rows for u in row], dtype=np.int64)
        width = max(len(row) for row in rows) if rows else 0
        padded = np.asarray([row + [row[0]] * (width - len(row)) for row in rows], dtype=np.int64)
        degree = np.asarray([len(row) for row in rows], dtype=np.float64)
        return cls(num_nodes=len(rows), targets=targets, sources=sources, degree=degree, padded=padded)


def as_neighbor_index(neighbors, self_loops: bool = False) -> NeighborIndex:
    if isinstance(neighbors, NeighborIndex):
        return neighbors
    return NeighborIndex.from_lists(neighbors, self_loops=self_loops)

