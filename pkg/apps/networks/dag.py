"""
Directed acyclic graphs over variable names
"""
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import networkx as nx

from core.exceptions import AcyclicityError, StructureError

logger = logging.getLogger(__name__)

Edge = Tuple[str, str]


@dataclass(frozen=True)
class Dag:
    """Vertices plus (parent, child) edges; validated on construction"""
    vertices: Tuple[str, ...]
    edges: Tuple[Edge, ...] = ()
    _graph: nx.DiGraph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vertices = tuple(self.vertices)
        edges = tuple((str(p), str(c)) for p, c in self.edges)
        object.__setattr__(self, 'vertices', vertices)
        object.__setattr__(self, 'edges', edges)

        if len(set(vertices)) != len(vertices):
            raise StructureError(f"Duplicate vertices: {list(vertices)}")
        known = set(vertices)
        seen = set()
        for parent, child in edges:
            if parent not in known or child not in known:
                raise StructureError(f"Edge ({parent}, {child}) references an unknown vertex")
            if parent == child:
                raise AcyclicityError(f"Self-loop on {parent}", cycle=[parent])
            if (parent, child) in seen:
                raise StructureError(f"Repeated edge ({parent}, {child})")
            seen.add((parent, child))

        graph = nx.DiGraph()
        graph.add_nodes_from(vertices)
        graph.add_edges_from(edges)
        try:
            cycle = nx.find_cycle(graph)
        except nx.NetworkXNoCycle:
            cycle = None
        if cycle:
            path = [u for u, _ in cycle] + [cycle[0][0]]
            raise AcyclicityError(f"Edges contain a directed cycle: {' -> '.join(path)}", cycle=path[:-1])
        object.__setattr__(self, '_graph', graph)

    def parents(self, vertex: str) -> List[str]:
        """Parents in declaration order of the edges"""
        self._require(vertex)
        return [p for p, c in self.edges if c == vertex]

    def children(self, vertex: str) -> List[str]:
        self._require(vertex)
        return [c for p, c in self.edges if p == vertex]

    def topological_order(self) -> List[str]:
        """Deterministic topological order; ties follow vertex declaration order"""
        position = {v: i for i, v in enumerate(self.vertices)}
        return list(nx.lexicographical_topological_sort(self._graph, key=position.__getitem__))

    def _require(self, vertex: str):
        if vertex not in self._graph:
            raise StructureError(f"Unknown vertex {vertex}")


def make_dag(vertices: Sequence[str], edges: Iterable[Edge] = ()) -> Dag:
    return Dag(tuple(vertices), tuple(edges))
