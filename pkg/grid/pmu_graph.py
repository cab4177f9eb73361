"""Measured-bus graph induced on a feeder by a PMU placement."""
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, List, Tuple

import networkx as nx
import numpy as np

from engine.tensor import Tensor
from grid.topology import Topology
from utils.errors import ConfigError, ConstructionError


@dataclass(frozen=True)
class PmuGraph:
    """Graph over measured buses; node i is `pmu_buses[i]` (ascending bus id)."""

    pmu_buses: Tuple[int, ...]
    edges: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if list(self.pmu_buses) != sorted(set(self.pmu_buses)):
            raise ConstructionError("pmu_buses must be unique and ascending")
        known = set(self.pmu_buses)
        for u, v in self.edges:
            if u == v or u not in known or v not in known:
                raise ConstructionError(f"invalid PMU edge ({u}, {v})")

    @property
    def num_nodes(self) -> int:
        return len(self.pmu_buses)

    @cached_property
    def position(self) -> dict:
        return {bus: i for i, bus in enumerate(self.pmu_buses)}

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Binary symmetric N×N matrix with zero diagonal."""
        a = np.zeros((self.num_nodes, self.num_nodes))
        for u, v in self.edges:
            i, j = self.position[u], self.position[v]
            a[i, j] = a[j, i] = 1.0
        return a

    @cached_property
    def degree(self) -> np.ndarray:
        """Diagonal degree matrix of A."""
        return np.diag(self.adjacency.sum(axis=1))

    def neighbor_lists(self) -> List[List[int]]:
        """Sorted neighbor node indices per node, self excluded."""
        return [np.flatnonzero(row).tolist() for row in self.adjacency]

    def normalized_adjacency(self) -> Tensor:
        return normalized_adjacency(self)


def induce_pmu_graph(topo: Topology, pmus: Iterable[int]) -> PmuGraph:
    """Contract unmeasured buses: PMUs u, v are joined iff the shortest feeder
    path between them has no other PMU as an interior vertex."""
    buses = sorted(set(int(b) for b in pmus))
    missing = [b for b in buses if b not in topo.graph]
    if missing:
        raise ConfigError(f"PMU buses not on the feeder: {missing}")
    if len(buses) < 2:
        raise ConfigError("a PMU graph needs at least two PMUs")
    measured = set(buses)
    edges = []
    for i, u in enumerate(buses):
        paths = nx.single_source_shortest_path(topo.graph, u)
        for v in buses[i + 1:]:
            interior = paths[v][1:-1]
            if not measured.intersection(interior):
                edges.append((u, v))
    graph = PmuGraph(pmu_buses=tuple(buses), edges=tuple(edges))
    check = nx.Graph()
    check.add_nodes_from(buses)
    check.add_edges_from(edges)
    if not nx.is_connected(check):
        raise ConstructionError("induced PMU graph is disconnected")
    return graph


def normalized_adjacency(g: PmuGraph) -> Tensor:
    """D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I."""
    a_self = g.adjacency + np.eye(g.num_nodes)
    inv_sqrt = 1.0 / np.sqrt(a_self.sum(axis=1))
    return Tensor(a_self * inv_sqrt[:, None] * inv_sqrt[None, :])


def neighbor_lists(g: PmuGraph) -> List[List[int]]:
    return g.neighbor_lists()
