"""Feeder topology and the measured-bus (PMU) graph."""
from grid.pmu_graph import PmuGraph, induce_pmu_graph, neighbor_lists, normalized_adjacency
from grid.topology import Topology, load_topology, parse_topology

__all__ = [
    "PmuGraph",
    "Topology",
    "induce_pmu_graph",
    "load_topology",
    "neighbor_lists",
    "normalized_adjacency",
    "parse_topology",
]
