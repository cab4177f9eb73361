"""Recurrent and recurrent-graph fault detectors.

Every family starts with one GRU shared across PMU nodes. Baselines either
classify each node on its own (GRU_LOCAL, majority vote) or max-pool the
node states (GRU_AGG); the graph families insert message passing, dropout
and batch normalization between the GRU and the pooling.
"""
from typing import List, Optional, Sequence, Union

import numpy as np

from engine import ops
from engine.tensor import Tensor, no_grad
from grid.pmu_graph import PmuGraph, neighbor_lists, normalized_adjacency
from layers.gat import GatLayer, GatV2Layer
from layers.gcn import GcnLayer
from layers.gru import GruCell
from layers.module import BatchNorm, Module, NeighborIndex
from layers.readout import ClassifyHead, maxpool_readout
from layers.sage import SageLayer
from models.spec import Detection, Family, ModelSpec
from utils.errors import BindingError, DimensionError
from utils.helpers import arrays_sha256

ArrayOrTensor = Union[np.ndarray, Tensor]


class ModelInstance(Module):
    """Parameters θ of one ModelSpec plus the PMU graph they are applied to."""

    def __init__(self, spec: ModelSpec, graph: PmuGraph):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        self.gru = GruCell(spec.input_dim, spec.hidden, rng)
        self.gnn: List[Module] = []
        self.norms: List[BatchNorm] = []
        if spec.family.uses_graph:
            for i in range(spec.gnn_layers):
                in_dim = spec.hidden if i == 0 else spec.gnn_out
                self.gnn.append(self._gnn_layer(in_dim, rng))
                self.norms.append(BatchNorm(spec.gnn_out))
            head_dim = spec.gnn_out
        else:
            head_dim = spec.hidden
        self.head = ClassifyHead(head_dim, rng)
        self._bind(graph)

    def _gnn_layer(self, in_dim: int, rng: np.random.Generator) -> Module:
        spec = self.spec
        if spec.family == Family.RGCN:
            return GcnLayer(in_dim, spec.gnn_out, rng, activation=spec.activation)
        if spec.family == Family.RGSAGE:
            return SageLayer(in_dim, spec.gnn_out, rng, aggregator=spec.sage_aggregator, activation=spec.activation)
        layer_cls = GatLayer if spec.family == Family.RGAT else GatV2Layer
        return layer_cls(
            in_dim,
            spec.gnn_out,
            rng,
            heads=spec.heads,
            slope=spec.leaky_slope,
            attn_dropout=spec.attn_dropout,
            self_loops=spec.self_loops,
            activation=spec.activation,
        )

    def _bind(self, graph: PmuGraph) -> None:
        self.graph = graph
        self.a_hat: Optional[Tensor] = None
        self.neighbors: Optional[NeighborIndex] = None
        family = self.spec.family
        if family == Family.RGCN:
            self.a_hat = normalized_adjacency(graph)
        elif family == Family.RGSAGE:
            self.neighbors = NeighborIndex.from_lists(neighbor_lists(graph))
        elif family.uses_attention:
            self.neighbors = NeighborIndex.from_lists(neighbor_lists(graph), self_loops=self.spec.self_loops)

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    # ------------------------------------------------------------------ forward

    def node_states(self, features: ArrayOrTensor) -> Tensor:
        """Final GRU hidden state per node: B×N×S×F -> B×N×H."""
        x = features if isinstance(features, Tensor) else Tensor(features)
        if x.ndim != 4 or x.shape[-1] != self.spec.input_dim:
            raise DimensionError(f"expected B×N×S×{self.spec.input_dim} features, got {x.shape}")
        batch, nodes, steps, feats = x.shape
        if nodes != self.num_nodes:
            raise BindingError(f"sample has {nodes} nodes, model is bound to {self.num_nodes}")
        h = self.gru.forward(ops.reshape(x, (batch * nodes, steps, feats)))
        return ops.reshape(h, (batch, nodes, self.spec.hidden))

    def forward_batch(
        self,
        features: ArrayOrTensor,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        """Logits for a batch: B×N per node for GRU_LOCAL, otherwise B."""
        h = self.node_states(features)
        family = self.spec.family
        if family == Family.GRU_LOCAL:
            return self.head.forward(h)
        if family.uses_graph:
            for layer, norm in zip(self.gnn, self.norms):
                if family == Family.RGCN:
                    h = layer.forward(h, self.a_hat)
                elif family == Family.RGSAGE:
                    h = layer.forward(h, self.neighbors)
                else:
                    h = layer.forward(h, self.neighbors, training=training, rng=rng)
                h = ops.dropout(h, self.spec.dropout, training, rng)
                h = norm.forward(h, training)
        return self.head.forward(maxpool_readout(h))

    def forward(
        self,
        sample: ArrayOrTensor,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        """Single N×S×F window: N node logits (GRU_LOCAL) or one scalar logit."""
        x = sample if isinstance(sample, Tensor) else Tensor(sample)
        if x.ndim != 3:
            raise DimensionError(f"expected an N×S×F window, got {x.shape}")
        out = self.forward_batch(ops.reshape(x, (1,) + x.shape), training=training, rng=rng)
        return ops.reshape(out, out.shape[1:])

    # ------------------------------------------------------------------ decisions

    def decide(self, logits: np.ndarray) -> np.ndarray:
        """Boolean fault decision per sample from forward_batch logits."""
        logits = np.asarray(logits)
        if self.spec.family == Family.GRU_LOCAL:
            return majority_vote(logits > 0.0)
        return logits > 0.0

    def predict_batch(self, features: ArrayOrTensor) -> np.ndarray:
        with no_grad():
            logits = self.forward_batch(features, training=False).data
        return self.decide(logits)

    def predict(self, sample: ArrayOrTensor) -> Detection:
        x = sample.data if isinstance(sample, Tensor) else np.asarray(sample, dtype=np.float64)
        fault = bool(self.predict_batch(x[None])[0])
        return Detection.FAULT if fault else Detection.NO_FAULT

    def loss(self, features: ArrayOrTensor, labels: Sequence[float], training: bool = True, rng=None) -> Tensor:
        """Mean BCE; GRU_LOCAL nodes all carry their window's label."""
        logits = self.forward_batch(features, training=training, rng=rng)
        targets = np.asarray(labels, dtype=np.float64)
        if logits.ndim == 2:
            targets = np.broadcast_to(targets[:, None], logits.shape)
        return ops.bce_with_logits(logits, targets)

    # ------------------------------------------------------------------ graph binding

    def rebind_graph(self, graph: PmuGraph) -> "ModelInstance":
        """Same θ (shared, not copied) applied to another PMU graph."""
        clone = ModelInstance.__new__(ModelInstance)
        clone.__dict__.update(self.__dict__)
        clone._bind(graph)
        return clone

    def checksum(self) -> str:
        """SHA-256 over parameter and running-statistic bytes."""
        named = {name: p.data for name, p in self.named_parameters()}
        named.update(dict(self.named_buffers()))
        return arrays_sha256(named)


def majority_vote(node_decisions: np.ndarray) -> np.ndarray:
    """Fault iff strictly more than half of the nodes vote fault (last axis)."""
    votes = np.asarray(node_decisions, dtype=bool)
    return 2 * votes.sum(axis=-1) > votes.shape[-1]


def build_model(spec: ModelSpec, graph: PmuGraph) -> ModelInstance:
    return ModelInstance(spec, graph)


def forward(m: ModelInstance, sample: ArrayOrTensor, training: bool = False, rng=None) -> Tensor:
    return m.forward(sample, training=training, rng=rng)


def predict(m: ModelInstance, sample: ArrayOrTensor) -> Detection:
    return m.predict(sample)


def rebind_graph(m: ModelInstance, graph: PmuGraph) -> ModelInstance:
    return m.rebind_graph(graph)
