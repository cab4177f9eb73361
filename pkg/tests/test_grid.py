from collections import deque

import networkx as nx
import numpy as np
import pytest

from grid.pmu_graph import PmuGraph, induce_pmu_graph, normalized_adjacency
from grid.topology import Topology, parse_topology
from utils.errors import ConfigError, ConstructionError, TopologyError

PATH_FEEDER = """
# five buses in a line
nominal_voltage 4160
source 1
bus 1
bus 2
bus 3
bus 4
bus 5
edge 1 2
edge 2 3
edge 3 4
edge 4 5
"""


def contracted_edges(topo: Topology, pmus):
    """Breadth-first search from each PMU that stops at the first PMU it meets."""
    measured = set(pmus)
    edges = set()
    for start in pmus:
        seen = {start}
        queue = deque([start])
        while queue:
            bus = queue.popleft()
            for nxt in topo.graph.neighbors(bus):
                if nxt in seen:
                    continue
                seen.add(nxt)
                if nxt in measured:
                    edges.add(tuple(sorted((start, nxt))))
                else:
                    queue.append(nxt)
    return edges


class TestTopology:
    def test_parse_headers(self):
        topo = parse_topology(PATH_FEEDER)
        assert topo.buses == (1, 2, 3, 4, 5)
        assert topo.nominal_voltage == 4160.0
        assert topo.source_bus == 1
        assert topo.hop_distance(1, 5) == 4
        assert topo.depth[4] == 3

    @pytest.mark.parametrize(
        "text",
        [
            "bus 1\nbus 2\nedge 1 1",
            "bus 1\nbus 2\nedge 1 3",
            "bus 1\nbus 2\nbus 3\nedge 1 2",
            "bus 1\nbus 2\nedge 1 2\nedge 2 1",
            "bus 1\nbus 1",
            "bus one",
            "line 1 2",
        ],
    )
    def test_rejects_malformed(self, text):
        with pytest.raises(TopologyError):
            parse_topology(text)

    def test_unknown_bus_distance(self):
        with pytest.raises(TopologyError):
            parse_topology(PATH_FEEDER).hop_distance(1, 99)

    def test_bundled_feeder_is_radial(self, feeder):
        assert nx.is_tree(feeder.graph)
        assert feeder.source_bus == 150
        assert feeder.depth[feeder.source_bus] == 0


class TestPmuGraph:
    def test_path_contraction(self):
        topo = parse_topology(PATH_FEEDER)
        g = induce_pmu_graph(topo, [5, 1, 3])
        assert g.pmu_buses == (1, 3, 5)
        assert set(g.edges) == {(1, 3), (3, 5)}

    def test_two_node_normalized_adjacency(self):
        a_hat = normalized_adjacency(PmuGraph(pmu_buses=(1, 2), edges=((1, 2),))).data
        np.testing.assert_allclose(a_hat, np.full((2, 2), 0.5))

    def test_normalized_adjacency_formula(self, toy_graph):
        a = toy_graph.adjacency + np.eye(4)
        d = np.diag(1 / np.sqrt(a.sum(axis=1)))
        np.testing.assert_allclose(normalized_adjacency(toy_graph).data, d @ a @ d)

    def test_single_node_graph(self):
        g = PmuGraph(pmu_buses=(7,), edges=())
        np.testing.assert_allclose(normalized_adjacency(g).data, [[1.0]])
        assert g.neighbor_lists() == [[]]

    def test_matches_search_oracle_on_every_configuration(self, feeder, pmu_table):
        for n, buses in pmu_table.items():
            g = induce_pmu_graph(feeder, buses)
            assert g.num_nodes == n
            assert set(g.edges) == contracted_edges(feeder, buses)
            assert np.allclose(g.adjacency, g.adjacency.T)
            assert not np.any(np.diag(g.adjacency))

    def test_adjacency_sweep_on_random_graphs(self, random_graphs):
        for g in random_graphs:
            n = g.num_nodes
            nbrs = g.neighbor_lists()
            a_hat = normalized_adjacency(g).data
            expected = np.zeros((n, n))
            for v in range(n):
                for u in [v] + nbrs[v]:
                    expected[v, u] = 1.0 / np.sqrt((len(nbrs[v]) + 1) * (len(nbrs[u]) + 1))
            np.testing.assert_allclose(a_hat, expected, atol=1e-12)
            assert np.max(np.abs(np.linalg.eigvalsh(a_hat))) <= 1.0 + 1e-12
            assert sum(len(row) for row in nbrs) == 2 * len(g.edges)
            assert all(v in nbrs[u] for v in range(n) for u in nbrs[v])

    def test_rejects_unknown_bus(self, feeder):
        with pytest.raises(ConfigError):
            induce_pmu_graph(feeder, [1, 9999])

    def test_needs_two_pmus(self, feeder):
        with pytest.raises(ConfigError):
            induce_pmu_graph(feeder, [13])

    def test_rejects_unsorted_or_invalid_construction(self):
        with pytest.raises(ConstructionError):
            PmuGraph(pmu_buses=(2, 1), edges=())
        with pytest.raises(ConstructionError):
            PmuGraph(pmu_buses=(1, 2), edges=((1, 3),))


def test_pmu_configurations_are_nested(pmu_table):
    sizes = sorted(pmu_table)
    assert sizes == [7, 11, 15, 19, 25]
    for small, large in zip(sizes, sizes[1:]):
        assert set(pmu_table[small]) <= set(pmu_table[large])
    for n, buses in pmu_table.items():
        assert len(buses) == n
