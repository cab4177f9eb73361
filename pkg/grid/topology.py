"""Feeder topology: parsing, validation and hop distances."""
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx

from utils.errors import TopologyError
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class Topology:
    """Simple connected feeder graph over integer bus ids."""

    buses: Tuple[int, ...]
    edges: Tuple[Tuple[int, int], ...]
    nominal_voltage: float = 13_200.0
    frequency: float = 60.0
    source_bus: Optional[int] = None
    graph: nx.Graph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bus_set = set(self.buses)
        if len(bus_set) != len(self.buses):
            raise TopologyError("duplicate bus declarations")
        g = nx.Graph()
        g.add_nodes_from(sorted(bus_set))
        for u, v in self.edges:
            if u == v:
                raise TopologyError(f"self-loop on bus {u}")
            if u not in bus_set or v not in bus_set:
                raise TopologyError(f"edge ({u}, {v}) references an undeclared bus")
            if g.has_edge(u, v):
                raise TopologyError(f"duplicate edge ({u}, {v})")
            g.add_edge(u, v)
        if g.number_of_nodes() == 0 or not nx.is_connected(g):
            raise TopologyError("feeder topology must be connected")
        if self.source_bus is not None and self.source_bus not in bus_set:
            raise TopologyError(f"source bus {self.source_bus} is not declared")
        object.__setattr__(self, "graph", g)

    @classmethod
    def from_edges(cls, edges: Iterable[Tuple[int, int]], **kwargs) -> "Topology":
        edges = tuple((int(u), int(v)) for u, v in edges)
        buses = tuple(sorted({b for e in edges for b in e}))
        return cls(buses=buses, edges=edges, **kwargs)

    def hop_distance(self, a: int, b: int) -> int:
        if a not in self.graph or b not in self.graph:
            raise TopologyError(f"bus {a if a not in self.graph else b} is not on the feeder")
        try:
            return nx.shortest_path_length(self.graph, a, b)
        except nx.NetworkXNoPath as e:
            raise TopologyError(f"bus {b} unreachable from bus {a}") from e

    def distances_from(self, bus: int) -> Dict[int, int]:
        if bus not in self.graph:
            raise TopologyError(f"bus {bus} is not on the feeder")
        return dict(nx.single_source_shortest_path_length(self.graph, bus))

    @cached_property
    def depth(self) -> Dict[int, int]:
        """Hop distance of every bus from the source (first bus when unset)."""
        root = self.source_bus if self.source_bus is not None else self.buses[0]
        return self.distances_from(root)


def parse_topology(text: str) -> Topology:
    """Parse `bus <id>` / `edge <id> <id>` records with `#` comments.

    Optional header records: `nominal_voltage <volts>`, `frequency <hz>`,
    `source <id>`.
    """
    buses: List[int] = []
    edges: List[Tuple[int, int]] = []
    extras: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "bus" and len(parts) == 2:
                buses.append(int(parts[1]))
            elif parts[0] == "edge" and len(parts) == 3:
                edges.append((int(parts[1]), int(parts[2])))
            elif parts[0] in ("nominal_voltage", "frequency") and len(parts) == 2:
                extras[parts[0]] = float(parts[1])
            elif parts[0] == "source" and len(parts) == 2:
                extras["source_bus"] = int(parts[1])
            else:
                raise TopologyError(f"line {lineno}: unrecognized record '{line}'")
        except ValueError as e:
            if isinstance(e, TopologyError):
                raise
            raise TopologyError(f"line {lineno}: bad number in '{line}'") from e
    return Topology(
        buses=tuple(buses),
        edges=tuple(edges),
        nominal_voltage=extras.get("nominal_voltage", 13_200.0),
        frequency=extras.get("frequency", 60.0),
        source_bus=extras.get("source_bus"),
    )


def load_topology(path: Path) -> Topology:
    path = Path(path)
    if not path.exists():
        raise TopologyError(f"topology file not found: {path}")
    topo = parse_topology(path.read_text())
    logger.info(f"Loaded topology {path.name}: {len(topo.buses)} buses, {len(topo.edges)} edges")
    return topo
