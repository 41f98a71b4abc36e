"""
Application-load-resource tripartite graph: construction, edge pruning,
complement and induced sub-graphs.

Vertices are ordered applications first, then configurations, then compute
nodes; that order is also the qubit order used by the QAOA engine. Edges only
join (application, configuration) and (configuration, compute node) pairs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from .errors import GraphError, ScenarioValidationError

if TYPE_CHECKING:
    from .cost_model import AppRequirements, ComputeNodeSpec
    from .scenario_io import Scenario

logger = logging.getLogger(__name__)


class VertexClass(str, Enum):
    APPLICATION = 'application'
    CONFIGURATION = 'configuration'
    COMPUTE_NODE = 'compute_node'


@dataclass(frozen=True, order=True)
class VertexId:
    """A vertex of the tripartite graph; `ref` is the scenario id it stands for"""
    index: int
    vclass: VertexClass = field(compare=False)
    ref: str = field(compare=False)

    def __str__(self) -> str:
        return self.ref


@dataclass(frozen=True)
class EdgeWeight:
    """Per-application [cost (T-ops), loss (MAPE %)] plus the apps the edge is still feasible for"""
    cost: Mapping[str, float]
    loss: Mapping[str, float]
    feasible_for: FrozenSet[str]

    def __post_init__(self):
        for app_id, value in list(self.cost.items()) + list(self.loss.items()):
            if value < 0:
                raise GraphError(f"Negative edge weight {value} for application {app_id}")

    def restricted_to(self, apps: Iterable[str]) -> EdgeWeight:
        return EdgeWeight(self.cost, self.loss, frozenset(apps))


@dataclass(frozen=True)
class ComplementEdgeList:
    vertices: Tuple[VertexId, ...]
    edges: FrozenSet[Tuple[VertexId, VertexId]]

    def __len__(self) -> int:
        return len(self.edges)


_ADMITTED = {
    frozenset({VertexClass.APPLICATION, VertexClass.CONFIGURATION}),
    frozenset({VertexClass.CONFIGURATION, VertexClass.COMPUTE_NODE}),
}


class TripartiteGraph:
    """Immutable three-class weighted graph backed by a frozen networkx graph"""

    def __init__(self, graph: nx.Graph):
        for u, v in graph.edges:
            if frozenset({u.vclass, v.vclass}) not in _ADMITTED:
                raise GraphError(f"Edge ({u}, {v}) joins {u.vclass.value} and {v.vclass.value}")
        self._graph = nx.freeze(graph)
        self._by_ref = {(v.ref, v.vclass): v for v in graph.nodes}

    @property
    def nx_graph(self) -> nx.Graph:
        return self._graph

    @property
    def vertices(self) -> List[VertexId]:
        return sorted(self._graph.nodes)

    def _of_class(self, vclass: VertexClass) -> List[VertexId]:
        return [v for v in self.vertices if v.vclass == vclass]

    @property
    def v1(self) -> List[VertexId]:
        return self._of_class(VertexClass.APPLICATION)

    @property
    def v2(self) -> List[VertexId]:
        return self._of_class(VertexClass.CONFIGURATION)

    @property
    def v3(self) -> List[VertexId]:
        return self._of_class(VertexClass.COMPUTE_NODE)

    @property
    def edges(self) -> Dict[Tuple[VertexId, VertexId], EdgeWeight]:
        return {tuple(sorted((u, v))): data['edge_weight'] for u, v, data in self._graph.edges(data=True)}

    def num_vertices(self) -> int:
        return self._graph.number_of_nodes()

    def num_edges(self) -> int:
        return self._graph.number_of_edges()

    def has_edge(self, u: VertexId, v: VertexId) -> bool:
        return self._graph.has_edge(u, v)

    def weight(self, u: VertexId, v: VertexId) -> EdgeWeight:
        try:
            return self._graph.edges[u, v]['edge_weight']
        except KeyError:
            raise GraphError(f"No edge between {u} and {v}") from None

    def vertex(self, ref: str, vclass: VertexClass) -> VertexId:
        try:
            return self._by_ref[(ref, vclass)]
        except KeyError:
            raise GraphError(f"No {vclass.value} vertex {ref!r} in graph") from None

    def find(self, ref: str, vclass: VertexClass) -> Optional[VertexId]:
        return self._by_ref.get((ref, vclass))

    def candidates(self, app: VertexId) -> List[Tuple[VertexId, VertexId]]:
        """Surviving (configuration, compute node) pairs for one application"""
        pairs = []
        for config in sorted(self._graph.neighbors(app)):
            for node in sorted(self._graph.neighbors(config)):
                if node.vclass != VertexClass.COMPUTE_NODE:
                    continue
                if app.ref in self.weight(config, node).feasible_for:
                    pairs.append((config, node))
        return pairs

    def __eq__(self, other) -> bool:
        if not isinstance(other, TripartiteGraph):
            return NotImplemented
        return set(self._graph.nodes) == set(other._graph.nodes) and self.edges == other.edges

    def __repr__(self) -> str:
        return (f"TripartiteGraph(|V1|={len(self.v1)}, |V2|={len(self.v2)}, "
                f"|V3|={len(self.v3)}, |E|={self.num_edges()})")


def build_graph(scenario: Scenario) -> TripartiteGraph:
    """Materialise the tripartite graph (no application-node edges) from a scenario's profile table"""
    apps = [a.app_id for a in scenario.applications]
    graph = nx.Graph()

    index = 0
    app_vertices, config_vertices, node_vertices = [], [], []
    for target, vclass, refs in (
        (app_vertices, VertexClass.APPLICATION, apps),
        (config_vertices, VertexClass.CONFIGURATION, [c.config_id for c in scenario.configurations]),
        (node_vertices, VertexClass.COMPUTE_NODE, [n.node_id for n in scenario.nodes]),
    ):
        for ref in refs:
            vertex = VertexId(index, vclass, ref)
            graph.add_node(vertex)
            target.append(vertex)
            index += 1

    for config in config_vertices:
        costs, losses = {}, {}
        for app in app_vertices:
            profile = scenario.profiles.get((app.ref, config.ref))
            if profile is None:
                raise ScenarioValidationError(f"Missing profile entry for (app={app.ref}, config={config.ref})")
            costs[app.ref] = profile.cost
            losses[app.ref] = profile.loss
            graph.add_edge(app, config, edge_weight=EdgeWeight(
                {app.ref: profile.cost}, {app.ref: profile.loss}, frozenset({app.ref})
            ))
        for node in node_vertices:
            graph.add_edge(config, node, edge_weight=EdgeWeight(dict(costs), dict(losses), frozenset(apps)))

    return TripartiteGraph(graph)


def prune_edges(graph: TripartiteGraph,
                requirements: Mapping[str, AppRequirements],
                node_specs: Mapping[str, ComputeNodeSpec]) -> TripartiteGraph:
    """Remove infeasible edges (loss or full-capacity latency over target)"""
    pruned = nx.Graph()
    pruned.add_nodes_from(graph.vertices)
    removed = annotations_dropped = 0

    for (u, v), weight in graph.edges.items():
        if u.vclass == VertexClass.APPLICATION:
            feasible = {h for h in weight.feasible_for if weight.loss[h] <= requirements[h].loss_max}
        else:
            capacity = node_specs[v.ref].capacity
            feasible = {
                h for h in weight.feasible_for
                if weight.cost[h] / capacity <= requirements[h].latency_max
            }
        annotations_dropped += len(weight.feasible_for) - len(feasible)
        if feasible:
            pruned.add_edge(u, v, edge_weight=weight.restricted_to(feasible))
        else:
            removed += 1

    logger.info(f"Pruning removed {removed} edges and {annotations_dropped} per-application annotations")
    return TripartiteGraph(pruned)


def complement(graph: TripartiteGraph) -> ComplementEdgeList:
    """All vertex pairs that are not edges of the (pruned) graph"""
    if graph.num_vertices() < 2:
        raise GraphError("Complement needs at least two vertices")
    comp = nx.complement(graph.nx_graph)
    edges = frozenset(tuple(sorted((u, v))) for u, v in comp.edges)
    return ComplementEdgeList(tuple(graph.vertices), edges)


def induced_subgraph(graph: TripartiteGraph, vertex_subset: Iterable[VertexId]) -> TripartiteGraph:
    subset = set(vertex_subset)
    if not subset:
        raise GraphError("Cannot take the sub-graph induced by an empty vertex set")
    unknown = subset - set(graph.vertices)
    if unknown:
        raise GraphError(f"Vertices not in graph: {', '.join(sorted(str(v) for v in unknown))}")
    return TripartiteGraph(graph.nx_graph.subgraph(subset).copy())

