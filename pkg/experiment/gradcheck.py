"""Finite-difference verification of every layer and every model family."""
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from engine import ops
from engine.gradcheck import check_gradients
from engine.tensor import Tensor, parameter
from grid.pmu_graph import PmuGraph, neighbor_lists, normalized_adjacency
from layers.gat import GatLayer, GatV2Layer
from layers.gcn import GcnLayer
from layers.gru import GruCell
from layers.module import BatchNorm
from layers.readout import ClassifyHead, maxpool_readout
from layers.sage import SageLayer
from models.model import ModelInstance
from models.spec import ALL_FAMILIES, ModelSpec
from utils.errors import ConfigError
from utils.logger import setup_logger

logger = setup_logger(__name__)

TOLERANCE = 1e-4

Check = Tuple[Callable[[], Tensor], Dict[str, Tensor]]

# 4-node toy graph: a path with one chord
TOY_GRAPH = PmuGraph(pmu_buses=(1, 2, 3, 4), edges=((1, 2), (2, 3), (3, 4), (1, 3)))


def _weighted_sum(out: Tensor, rng: np.random.Generator) -> Callable[[Tensor], Tensor]:
    w = Tensor(rng.normal(size=out.shape))
    return lambda y: ops.sum(ops.mul(y, w))


def _layer_check(forward: Callable[[], Tensor], tensors: Dict[str, Tensor], rng: np.random.Generator) -> Check:
    project = _weighted_sum(forward(), rng)
    return (lambda: project(forward())), tensors


def _pointwise(rng):
    magnitude = rng.uniform(0.1, 1.5, size=(3, 4))
    x = parameter(magnitude * rng.choice([-1.0, 1.0], size=(3, 4)))

    def forward():
        return ops.add(
            ops.add(ops.sigmoid(x), ops.tanh(x)),
            ops.add(ops.relu(x), ops.leaky_relu(x, 0.2)),
        )

    return _layer_check(forward, {"x": x}, rng)


def _gru(rng):
    cell = GruCell(3, 4, rng)
    seq = parameter(rng.normal(size=(2, 5, 3)))
    return _layer_check(lambda: cell.forward(seq), {"seq": seq, **cell.parameters()}, rng)


def _gcn(rng):
    layer = GcnLayer(3, 4, rng, activation="tanh")
    h = parameter(rng.normal(size=(4, 3)))
    a_hat = normalized_adjacency(TOY_GRAPH)
    return _layer_check(lambda: layer.forward(h, a_hat), {"h": h, **layer.parameters()}, rng)


def _sage(aggregator):
    def build(rng):
        layer = SageLayer(3, 4, rng, aggregator=aggregator, activation="tanh")
        h = parameter(rng.normal(size=(4, 3)))
        nbrs = neighbor_lists(TOY_GRAPH)
        return _layer_check(lambda: layer.forward(h, nbrs), {"h": h, **layer.parameters()}, rng)

    return build


def _attention(layer_cls):
    def build(rng):
        layer = layer_cls(3, 4, rng, heads=2, activation="tanh")
        h = parameter(rng.normal(size=(4, 3)))
        nbrs = neighbor_lists(TOY_GRAPH)
        return _layer_check(lambda: layer.forward(h, nbrs), {"h": h, **layer.parameters()}, rng)

    return build


def _batch_norm(rng):
    bn = BatchNorm(3)
    bn.gamma.data = rng.uniform(0.5, 1.5, size=3)
    bn.beta.data = rng.normal(size=3)
    x = parameter(rng.normal(size=(6, 3)))
    return _layer_check(lambda: bn.forward(x, training=True), {"x": x, "gamma": bn.gamma, "beta": bn.beta}, rng)


def _maxpool(rng):
    h = parameter(rng.normal(size=(2, 4, 3)))
    return _layer_check(lambda: maxpool_readout(h), {"h": h}, rng)


def _head(rng):
    head = ClassifyHead(3, rng)
    h = parameter(rng.normal(size=(5, 3)))
    return _layer_check(lambda: head.forward(h), {"h": h, **head.parameters()}, rng)


def _family(family):
    def build(rng):
        spec = ModelSpec(
            family=family,
            input_dim=2,
            hidden=4,
            gnn_out=3,
            dropout=0.0,
            attn_dropout=0.0,
            activation="tanh",
            seed=int(rng.integers(1 << 31)),
        )
        model = ModelInstance(spec, TOY_GRAPH)
        features = parameter(rng.normal(size=(2, TOY_GRAPH.num_nodes, 3, 2)))
        labels = np.array([1.0, 0.0])
        return (
            lambda: model.loss(features, labels, training=True),
            {"features": features, **model.parameters()},
        )

    return build


COMPONENTS: Dict[str, Callable[[np.random.Generator], Check]] = {
    "pointwise": _pointwise,
    "gru": _gru,
    "gcn": _gcn,
    "sage_mean": _sage("mean"),
    "sage_max": _sage("max"),
    "gat": _attention(GatLayer),
    "gatv2": _attention(GatV2Layer),
    "batch_norm": _batch_norm,
    "maxpool": _maxpool,
    "head": _head,
    **{f"model_{f.value}": _family(f) for f in ALL_FAMILIES},
}


def run_gradcheck(
    components: Optional[Iterable[str]] = None,
    seed: int = 0,
    tolerance: float = TOLERANCE,
) -> pd.DataFrame:
    """One row per component: worst tensor and its relative error."""
    names = list(components) if components is not None else list(COMPONENTS)
    unknown = [n for n in names if n not in COMPONENTS]
    if unknown:
        raise ConfigError(f"unknown gradcheck components: {unknown}")
    order = list(COMPONENTS)
    rows: List[Dict] = []
    for name in names:
        loss_fn, tensors = COMPONENTS[name](np.random.default_rng([seed, order.index(name)]))
        errors = check_gradients(loss_fn, tensors)
        worst = max(errors, key=errors.get)
        rows.append(
            {
                "component": name,
                "worst_tensor": worst,
                "max_rel_error": errors[worst],
                "passed": bool(errors[worst] < tolerance),
            }
        )
        logger.debug(f"gradcheck {name}: {errors[worst]:.3e} ({worst})")
    return pd.DataFrame(rows, columns=["component", "worst_tensor", "max_rel_error", "passed"])
