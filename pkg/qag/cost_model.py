"""
Latency, energy and feasibility model for an assignment of applications
to (configuration, compute node) pairs.

t = c / x for a configuration-to-node edge, zero on the application-to-
configuration edge (unbounded rate there). Energy charges the node's max power
for the execution time; idle draw is assignment-independent and excluded.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Mapping, Optional

from .errors import CostModelError
from .graph_model import TripartiteGraph, VertexClass

# Relative slack for floating point comparisons against targets and capacities
TOLERANCE = 1e-9


@dataclass(frozen=True)
class ComputeNodeSpec:
    node_id: str
    node_type: str
    idle_power: float
    max_power: float
    capacity: float

    def __post_init__(self):
        if not 0 <= self.idle_power <= self.max_power:
            raise CostModelError(
                f"Node {self.node_id}: need 0 <= idle_power <= max_power, "
                f"got idle={self.idle_power}, max={self.max_power}"
            )
        if self.capacity <= 0:
            raise CostModelError(f"Node {self.node_id}: capacity must be positive, got {self.capacity}")


@dataclass(frozen=True)
class AppRequirements:
    app_id: str
    loss_max: float
    latency_max: float
    label: str = ''

    def __post_init__(self):
        if self.loss_max <= 0:
            raise CostModelError(f"Application {self.app_id}: loss_max must be positive, got {self.loss_max}")
        if self.latency_max <= 0:
            raise CostModelError(f"Application {self.app_id}: latency_max must be positive, got {self.latency_max}")


@dataclass(frozen=True)
class AssignmentRow:
    app_id: str
    config_id: str
    node_id: str
    rate: float


@dataclass(frozen=True)
class Assignment:
    """Per-application choice; a `None` row marks the application as churned"""
    rows: Mapping[str, Optional[AssignmentRow]] = field(default_factory=dict)

    @property
    def served(self) -> Dict[str, AssignmentRow]:
        return {app_id: row for app_id, row in self.rows.items() if row is not None}

    @property
    def churned(self) -> FrozenSet[str]:
        return frozenset(app_id for app_id, row in self.rows.items() if row is None)

    def node_load(self) -> Dict[str, float]:
        load: Dict[str, float] = defaultdict(float)
        for row in self.served.values():
            load[row.node_id] += row.rate
        return dict(load)


@dataclass(frozen=True)
class AppVerdict:
    latency_ok: bool
    loss_ok: bool
    resource_ok: bool
    cardinality_ok: bool

    @property
    def feasible(self) -> bool:
        return self.latency_ok and self.loss_ok and self.resource_ok and self.cardinality_ok


@dataclass(frozen=True)
class FeasibilityReport:
    verdicts: Mapping[str, AppVerdict]

    @property
    def feasible(self) -> bool:
        return all(v.feasible for v in self.verdicts.values())

    def violations(self) -> Dict[str, AppVerdict]:
        return {app_id: v for app_id, v in self.verdicts.items() if not v.feasible}


def edge_time(cost: float, rate: float) -> float:
    """Seconds to process `cost` tera-operations at `rate` TOPS"""
    if rate == math.inf:
        return 0.0
    if rate <= 0:
        raise CostModelError(f"Compute rate must be positive, got {rate}")
    return cost / rate


def granted_rate(spec: ComputeNodeSpec, used: Mapping[str, float]) -> float:
    """Default allocation: min(remaining, full capacity), callers grant in ascending app-id order"""
    return min(spec.capacity - used.get(spec.node_id, 0.0), spec.capacity)


def meets_latency(cost: float, rate: float, latency_max: float) -> bool:
    return rate > 0 and cost / rate <= latency_max * (1 + TOLERANCE)


def deployment_energy(cost: float, spec: ComputeNodeSpec) -> float:
    """Joules for `cost` tera-operations on a whole node"""
    return edge_time(cost, spec.capacity) * spec.max_power


def _edge_costs(row: AssignmentRow, graph: TripartiteGraph):
    app = graph.vertex(row.app_id, VertexClass.APPLICATION)
    config = graph.vertex(row.config_id, VertexClass.CONFIGURATION)
    node = graph.vertex(row.node_id, VertexClass.COMPUTE_NODE)
    return graph.weight(app, config).cost[row.app_id], graph.weight(config, node).cost[row.app_id]


def app_latency(row: AssignmentRow, graph: TripartiteGraph) -> float:
    app_config_cost, config_node_cost = _edge_costs(row, graph)
    return edge_time(app_config_cost, math.inf) + edge_time(config_node_cost, row.rate)


def app_energy(row: AssignmentRow, graph: TripartiteGraph, node_spec: ComputeNodeSpec) -> float:
    _, config_node_cost = _edge_costs(row, graph)
    # application and configuration vertices draw no power
    return edge_time(config_node_cost, row.rate) * node_spec.max_power


def app_loss(row: AssignmentRow, graph: TripartiteGraph) -> float:
    app = graph.vertex(row.app_id, VertexClass.APPLICATION)
    config = graph.vertex(row.config_id, VertexClass.CONFIGURATION)
    return graph.weight(app, config).loss[row.app_id]


def check_feasibility(assignment: Assignment,
                      graph: TripartiteGraph,
                      requirements: Mapping[str, AppRequirements],
                      node_specs: Mapping[str, ComputeNodeSpec]) -> FeasibilityReport:
    """Latency, loss, resource and cardinality verdicts for every served application"""
    load = assignment.node_load()
    verdicts = {}
    for app_id, row in assignment.served.items():
        req = requirements[app_id]
        cardinality_ok = (
            graph.find(row.config_id, VertexClass.CONFIGURATION) is not None
            and graph.find(row.node_id, VertexClass.COMPUTE_NODE) is not None
            and row.node_id in node_specs
        )
        if not cardinality_ok:
            verdicts[app_id] = AppVerdict(False, False, False, False)
            continue

        spec = node_specs[row.node_id]
        _, cost = _edge_costs(row, graph)
        slack = 1 + TOLERANCE
        latency_ok = row.rate > 0 and app_latency(row, graph) <= req.latency_max * slack
        loss_ok = app_loss(row, graph) <= req.loss_max
        demanded = cost / req.latency_max
        resource_ok = (
            demanded <= row.rate * slack
            and row.rate <= spec.capacity * slack
            and load[row.node_id] <= spec.capacity * slack
        )
        verdicts[app_id] = AppVerdict(latency_ok, loss_ok, resource_ok, True)
    return FeasibilityReport(verdicts)


def system_energy(assignment: Assignment,
                  graph: TripartiteGraph,
                  node_specs: Mapping[str, ComputeNodeSpec]) -> float:
    return sum(
        app_energy(row, graph, node_specs[row.node_id])
        for row in assignment.served.values()
    )


def node_energy_per_op(spec: ComputeNodeSpec) -> float:
    """Joules per tera-operation when running flat out"""
    return spec.max_power / spec.capacity
