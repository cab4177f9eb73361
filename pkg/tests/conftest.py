"""Shared fixtures: bundled feeder, PMU table and a small seeded dataset."""
import networkx as nx
import numpy as np
import pytest

from config.presets import presets
from datagen.dataset import build_dataset
from datagen.scenario import GeneratorConfig
from grid.pmu_graph import PmuGraph
from storage.dataset_store import save_dataset

# Connected G(n, p) graphs for layer and adjacency sweeps
RANDOM_GRAPH_COUNT = 100
RANDOM_GRAPH_SEED = 2024

# Three fault locations at nominal load: 3 x 41 = 123 graph windows
SMALL_FAULT_BUSES = [13, 47, 89]


@pytest.fixture(scope="session")
def feeder():
    return presets.topology()


@pytest.fixture(scope="session")
def pmu_table():
    return presets.pmu_configs()


@pytest.fixture(scope="session")
def small_config() -> GeneratorConfig:
    desk = presets.generator_config("desk")
    return GeneratorConfig.model_validate(
        {**desk.model_dump(mode="json"), "preset": "test", "fault_buses": SMALL_FAULT_BUSES, "load_scales_pu": [1.0]}
    )


@pytest.fixture(scope="session")
def small_dataset(feeder, pmu_table, small_config):
    return build_dataset(feeder, pmu_table[25], seed=7, cfg=small_config)


@pytest.fixture(scope="session")
def small_dataset_dir(tmp_path_factory, small_dataset):
    out = tmp_path_factory.mktemp("dataset")
    save_dataset(small_dataset, out)
    return out


@pytest.fixture
def toy_graph() -> PmuGraph:
    """4-node path 1-2-3-4 with the chord 1-3."""
    return PmuGraph(pmu_buses=(1, 2, 3, 4), edges=((1, 2), (2, 3), (3, 4), (1, 3)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_pmu_graphs(count: int, seed: int, max_nodes: int = 10):
    """Seeded connected G(n, p) graphs, 2 <= n <= max_nodes; disconnected draws are redrawn."""
    draw = np.random.default_rng(seed)
    graphs = []
    while len(graphs) < count:
        n = int(draw.integers(2, max_nodes + 1))
        g = nx.gnp_random_graph(n, float(draw.uniform(0.2, 0.8)), seed=int(draw.integers(1 << 31)))
        if not nx.is_connected(g):
            continue
        graphs.append(
            PmuGraph(pmu_buses=tuple(range(1, n + 1)), edges=tuple((u + 1, v + 1) for u, v in sorted(g.edges)))
        )
    return graphs


@pytest.fixture(scope="session")
def random_graphs():
    return random_pmu_graphs(RANDOM_GRAPH_COUNT, RANDOM_GRAPH_SEED)
