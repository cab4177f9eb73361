from layers.gat import GatLayer, GatV2Layer, gat_forward
from layers.gcn import GcnLayer, gcn_forward
from layers.gru import GruCell, gru_forward
from layers.module import BatchNorm, Module, NeighborIndex, as_neighbor_index, uniform_init
from layers.readout import ClassifyHead, classify_head, maxpool_readout
from layers.sage import AGGREGATORS, SageLayer, sage_forward

__all__ = [
    "AGGREGATORS",
    "BatchNorm",
    "ClassifyHead",
    "GatLayer",
    "GatV2Layer",
    "GcnLayer",
    "GruCell",
    "Module",
    "NeighborIndex",
    "SageLayer",
    "as_neighbor_index",
    "classify_head",
    "gat_forward",
    "gcn_forward",
    "gru_forward",
    "maxpool_readout",
    "sage_forward",
    "uniform_init",
]
