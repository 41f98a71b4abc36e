"""
QAG orchestration: prune the tripartite graph, split it recursively with
QAOA max-cut on the complement, pick the minimum-energy path in every
single-application leaf and reconcile shared node capacity.
"""

from __future__ import annotations

import itertools
import logging
import sqlite3
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .cache_manager import CacheManager, problem_signature
from .cost_model import (
    TOLERANCE,
    AppRequirements,
    Assignment,
    AssignmentRow,
    ComputeNodeSpec,
    FeasibilityReport,
    app_energy,
    app_latency,
    app_loss,
    check_feasibility,
    deployment_energy,
    granted_rate,
    meets_latency,
    system_energy,
)
from .errors import GraphError, PartitionError
from .graph_model import (
    TripartiteGraph,
    VertexClass,
    VertexId,
    build_graph,
    induced_subgraph,
    prune_edges,
)
from .qaoa_engine import (
    CutProblem,
    OptimizedParams,
    QaoaConfig,
    classical_maxcut,
    optimize_params,
    rank_valid_states,
    run_qaoa,
)
from .scenario_io import Scenario

logger = logging.getLogger(__name__)

# Node placements per split are enumerated up to this many nodes, searched locally beyond
NODE_PLACEMENT_LIMIT = 10


@dataclass(frozen=True)
class PartitionNode:
    """One sub-graph of the recursion; internal nodes carry the split that produced their children"""
    vertices: Tuple[VertexId, ...]
    method: str = 'leaf'  # leaf | qaoa | classical | per-app
    bitstring: Optional[str] = None
    children: Tuple[PartitionNode, ...] = ()
    optimized: Optional[OptimizedParams] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def applications(self) -> List[VertexId]:
        return [v for v in self.vertices if v.vclass == VertexClass.APPLICATION]

    @property
    def churn_leaf(self) -> bool:
        """A leaf without a configuration or a compute node cannot serve its application"""
        classes = {v.vclass for v in self.vertices}
        return self.is_leaf and (
            VertexClass.CONFIGURATION not in classes or VertexClass.COMPUTE_NODE not in classes
        )


@dataclass(frozen=True)
class PartitionTree:
    graph: TripartiteGraph
    root: PartitionNode

    def leaves(self) -> List[PartitionNode]:
        found, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                found.append(node)
            else:
                stack.extend(reversed(node.children))
        return found

    def leaf_graphs(self) -> List[TripartiteGraph]:
        return [induced_subgraph(self.graph, leaf.vertices) for leaf in self.leaves()]

    def depth(self) -> int:
        def walk(node: PartitionNode) -> int:
            return 0 if node.is_leaf else 1 + max(walk(child) for child in node.children)
        return walk(self.root)

    def traces(self) -> List[Tuple[float, ...]]:
        found, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.optimized is not None:
                found.append(node.optimized.trace)
            stack.extend(node.children)
        return found

    def summary(self) -> Dict[str, Any]:
        leaves = self.leaves()
        return {
            'depth': self.depth(),
            'leaves': [[str(v) for v in leaf.vertices] for leaf in leaves],
            'churn_leaves': [str(leaf.applications[0]) for leaf in leaves if leaf.churn_leaf],
        }


@dataclass(frozen=True)
class Candidate:
    config_id: str
    node_id: str
    cost: float
    energy: float
    latency: float
    loss: float


@dataclass(frozen=True)
class PathChoice:
    """An application's surviving candidates, best first; empty means churn"""
    app_id: str
    latency_max: float
    ranked: Tuple[Candidate, ...] = ()

    @property
    def best(self) -> Optional[Candidate]:
        return self.ranked[0] if self.ranked else None


@dataclass(frozen=True)
class AppOutcome:
    config_id: Optional[str]
    node_id: Optional[str]
    rate: float
    energy: float
    latency: float
    loss: float
    feasible: bool


@dataclass(frozen=True)
class OrchestrationResult:
    scheme: str
    assignment: Assignment
    per_app: Mapping[str, AppOutcome]
    churned: FrozenSet[str]
    system_energy: float
    report: FeasibilityReport
    diagnostics: Mapping[str, Any] = field(default_factory=dict)
    churn_energy: float = 0.0

    @property
    def served(self) -> int:
        return len(self.per_app) - len(self.churned)

    @property
    def charged_energy(self) -> float:
        """Served energy plus the churn charge; what sweeps compare across schemes"""
        return self.system_energy + self.churn_energy

    def summary_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for app_id, outcome in self.per_app.items():
            rows.append({
                'app_id': app_id,
                'config_id': outcome.config_id,
                'node_id': outcome.node_id,
                'rate_tops': outcome.rate,
                'energy_j': outcome.energy,
                'latency_s': outcome.latency,
                'loss_mape': outcome.loss,
                'churned': app_id in self.churned,
            })
        return rows


def _child_seed(seed: int, path: Sequence[int]) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def _optimize(problem: CutProblem, config: QaoaConfig, cache: Optional[CacheManager]) -> OptimizedParams:
    if cache is None:
        return optimize_params(problem, config)

    signature = problem_signature(problem, config)
    try:
        cached = cache.get_params(signature)
    except sqlite3.Error as e:
        logger.warning(f"Parameter cache unavailable: {e}")
        return optimize_params(problem, config)
    if cached is not None:
        logger.debug(f"Parameter cache hit for {problem.n}-qubit problem")
        return cached

    optimized = optimize_params(problem, config)
    try:
        cache.store_params(signature, optimized)
    except sqlite3.Error as e:
        logger.warning(f"Could not store QAOA parameters: {e}")
    return optimized


def _per_app_leaves(graph: TripartiteGraph) -> Tuple[PartitionNode, ...]:
    """Each application with its own adjacent configurations and the nodes still feasible for it"""
    leaves = []
    for app in graph.v1:
        pairs = graph.candidates(app)
        configs = {config for config, _ in pairs} or set(graph.nx_graph.neighbors(app))
        nodes = {node for _, node in pairs}
        leaves.append(PartitionNode(tuple(sorted({app} | configs | nodes))))
    return tuple(leaves)


def _node_energies(graph: TripartiteGraph,
                   node_specs: Optional[Mapping[str, ComputeNodeSpec]]) -> Dict[Tuple[VertexId, VertexId], float]:
    """Cheapest whole-node energy of every feasible (application, node) pair; zero without node specs"""
    energies: Dict[Tuple[VertexId, VertexId], float] = {}
    for app in graph.v1:
        for config, node in graph.candidates(app):
            energy = 0.0
            if node_specs is not None:
                energy = deployment_energy(graph.weight(config, node).cost[app.ref], node_specs[node.ref])
            key = (app, node)
            energies[key] = min(energy, energies.get(key, energy))
    return energies


def _side_estimate(apps: Sequence[VertexId],
                   nodes: Sequence[VertexId],
                   energies: Mapping[Tuple[VertexId, VertexId], float]) -> Tuple[int, float]:
    """Served count and energy if the side's apps took whole nodes greedily in app-id order"""
    taken, served, energy = set(), 0, 0.0
    for app in sorted(apps, key=lambda v: v.ref):
        options = [(energies[(app, node)], node.index, node) for node in nodes
                   if node not in taken and (app, node) in energies]
        if options:
            cheapest, _, node = min(options, key=lambda o: o[:2])
            taken.add(node)
            served += 1
            energy += cheapest
    return served, energy


def _placements(count: int, sampled: Tuple[int, ...]) -> Iterator[Tuple[int, ...]]:
    if count <= NODE_PLACEMENT_LIMIT:
        yield from itertools.product((0, 1), repeat=count)
        return
    yield sampled
    # single moves and pairwise swaps around the sampled placement
    for i in range(count):
        yield sampled[:i] + (1 - sampled[i],) + sampled[i + 1:]
    for i, j in itertools.combinations(range(count), 2):
        if sampled[i] != sampled[j]:
            swapped = list(sampled)
            swapped[i], swapped[j] = sampled[j], sampled[i]
            yield tuple(swapped)


def _settle_nodes(graph: TripartiteGraph,
                  sides: Tuple[List[VertexId], List[VertexId]],
                  node_specs: Optional[Mapping[str, ComputeNodeSpec]]) -> Optional[Tuple[List[VertexId], List[VertexId]]]:
    """Place the compute nodes across a split by estimated energy; None when every placement strands an app

    An application is stranded when it has a feasible node in the graph but none on its side.
    Applications and configurations stay where the cut put them. Ties go to the cut's own placement.
    """
    energies = _node_energies(graph, node_specs)
    servable = {app for app, _ in energies}
    nodes = graph.v3
    apps = [[v for v in side if v.vclass == VertexClass.APPLICATION] for side in sides]
    rest = [[v for v in side if v.vclass != VertexClass.COMPUTE_NODE] for side in sides]
    sampled = tuple(0 if node in sides[0] else 1 for node in nodes)

    best_key, best_placement = None, None
    for placement in _placements(len(nodes), sampled):
        groups = ([n for n, s in zip(nodes, placement) if s == 0], [n for n, s in zip(nodes, placement) if s == 1])
        if any(len(apps[i]) == 1 and not groups[i] for i in (0, 1)):
            continue
        if any(app in servable and not any((app, n) in energies for n in groups[i])
               for i in (0, 1) for app in apps[i]):
            continue
        estimates = [_side_estimate(apps[i], groups[i], energies) for i in (0, 1)]
        moved = sum(a != b for a, b in zip(placement, sampled))
        key = (-sum(e[0] for e in estimates), round(sum(e[1] for e in estimates), 9), moved, placement)
        if best_key is None or key < best_key:
            best_key, best_placement = key, groups

    if best_placement is None:
        return None
    return rest[0] + best_placement[0], rest[1] + best_placement[1]


def _child_vertices(graph: TripartiteGraph, side: Sequence[VertexId]) -> List[VertexId]:
    """A side plus every configuration adjacent to its applications; configurations carry no capacity"""
    shared = {
        neighbor
        for v in side if v.vclass == VertexClass.APPLICATION
        for neighbor in graph.nx_graph.neighbors(v)
    }
    return sorted(set(side) | shared)


def partition_recursive(graph: TripartiteGraph,
                        qaoa_config: QaoaConfig = QaoaConfig(),
                        seed: int = 0,
                        cache: Optional[CacheManager] = None,
                        node_specs: Optional[Mapping[str, ComputeNodeSpec]] = None) -> PartitionTree:
    """Split a pruned graph until every leaf holds exactly one application

    Without `node_specs` nodes are only moved to keep applications from being stranded.
    """
    if not graph.v1:
        raise GraphError("Cannot partition a graph without application vertices")
    return PartitionTree(graph, _split(graph, qaoa_config, seed, cache, node_specs, ()))


def _split(graph: TripartiteGraph,
           config: QaoaConfig,
           seed: int,
           cache: Optional[CacheManager],
           node_specs: Optional[Mapping[str, ComputeNodeSpec]],
           path: Tuple[int, ...]) -> PartitionNode:
    vertices = tuple(graph.vertices)
    if len(graph.v1) == 1:
        return PartitionNode(vertices)

    problem = CutProblem.from_graph(graph)
    node_seed = _child_seed(seed, path)
    optimized = None
    try:
        if problem.n <= config.qubit_budget:
            optimized = _optimize(problem, config, cache)
            outcome = run_qaoa(problem, config, node_seed, optimized)
            ranked = rank_valid_states(outcome.counts, problem) or [outcome.bitstring]
            method = 'qaoa'
        else:
            logger.warning(f"{problem.n} vertices exceed the {config.qubit_budget}-qubit budget, "
                           f"using classical max-cut")
            ranked = [classical_maxcut(problem, config, node_seed)]
            method = 'classical'
    except PartitionError as e:
        logger.warning(f"Partition failed on {len(graph.v1)} applications ({e}); using per-application leaves")
        return PartitionNode(vertices, 'per-app', children=_per_app_leaves(graph))

    for bitstring in ranked:
        sides = _settle_nodes(graph, problem.sides(bitstring), node_specs)
        if sides is not None:
            break
        logger.debug(f"Split {bitstring} strands an application, trying the next state")
    else:
        logger.warning(f"Every {method} split of {len(graph.v1)} applications strands one; "
                       f"using per-application leaves")
        return PartitionNode(vertices, 'per-app', bitstring=ranked[0], children=_per_app_leaves(graph),
                             optimized=optimized)

    logger.info(f"Split {len(graph.v1)} applications by {method}: "
                f"{[str(v) for v in sides[0]]} | {[str(v) for v in sides[1]]}")
    children = tuple(
        _split(induced_subgraph(graph, _child_vertices(graph, side)), config, seed, cache, node_specs, path + (i,))
        for i, side in enumerate(sides)
    )
    return PartitionNode(vertices, method, bitstring, children, optimized)


def min_energy_path(leaf: TripartiteGraph,
                    requirements: Mapping[str, AppRequirements],
                    node_specs: Mapping[str, ComputeNodeSpec]) -> PathChoice:
    """Rank the leaf's (configuration, node) pairs by full-capacity energy, then latency, then vertex index"""
    apps = leaf.v1
    if len(apps) != 1:
        raise GraphError(f"A leaf must hold exactly one application, found {len(apps)}")
    app = apps[0]
    req = requirements[app.ref]

    keyed = []
    for config, node in leaf.candidates(app):
        spec = node_specs[node.ref]
        row = AssignmentRow(app.ref, config.ref, node.ref, spec.capacity)
        latency = app_latency(row, leaf)
        loss = app_loss(row, leaf)
        if loss > req.loss_max or latency > req.latency_max * (1 + TOLERANCE):
            continue
        energy = app_energy(row, leaf, spec)
        cost = leaf.weight(config, node).cost[app.ref]
        logger.debug(f"{app.ref}: ({config.ref}, {node.ref}) energy {energy:.3f} J, latency {latency:.4f} s")
        keyed.append(((energy, latency, config.index, node.index),
                      Candidate(config.ref, node.ref, cost, energy, latency, loss)))

    keyed.sort(key=lambda item: item[0])
    return PathChoice(app.ref, req.latency_max, tuple(candidate for _, candidate in keyed))


def resolve_contention(choices: Sequence[PathChoice],
                       node_specs: Mapping[str, ComputeNodeSpec]) -> Assignment:
    """Grant node capacity greedily in app-id order, falling back along each app's ranking"""
    used: Dict[str, float] = {}
    rows: Dict[str, Optional[AssignmentRow]] = {}

    for choice in sorted(choices, key=lambda c: c.app_id):
        rows[choice.app_id] = None
        for candidate in choice.ranked:
            rate = granted_rate(node_specs[candidate.node_id], used)
            if not meets_latency(candidate.cost, rate, choice.latency_max):
                continue
            used[candidate.node_id] = used.get(candidate.node_id, 0.0) + rate
            rows[choice.app_id] = AssignmentRow(choice.app_id, candidate.config_id, candidate.node_id, rate)
            break
        if rows[choice.app_id] is None and choice.ranked:
            logger.info(f"{choice.app_id} churned: no remaining capacity among {len(choice.ranked)} candidates")

    return Assignment({c.app_id: rows[c.app_id] for c in choices})


def costliest_deployment(scenario: Scenario) -> float:
    """Whole-node energy of the scenario's most expensive deployment, charged per churned application"""
    energies = [
        deployment_energy(profile.cost, spec)
        for profile in scenario.profiles.values()
        for spec in scenario.node_specs.values()
    ]
    return max(energies, default=0.0)


def build_result(scheme: str,
                 scenario: Scenario,
                 graph: TripartiteGraph,
                 assignment: Assignment,
                 diagnostics: Optional[Mapping[str, Any]] = None) -> OrchestrationResult:
    """Evaluate an assignment against the full graph and package it"""
    requirements, node_specs = scenario.requirements, scenario.node_specs
    report = check_feasibility(assignment, graph, requirements, node_specs)

    per_app = {}
    for app in scenario.applications:
        row = assignment.rows.get(app.app_id)
        if row is None:
            per_app[app.app_id] = AppOutcome(None, None, 0.0, 0.0, 0.0, 0.0, False)
            continue
        per_app[app.app_id] = AppOutcome(
            row.config_id, row.node_id, row.rate,
            app_energy(row, graph, node_specs[row.node_id]),
            app_latency(row, graph),
            app_loss(row, graph),
            report.verdicts[app.app_id].feasible,
        )

    violations = report.violations()
    if violations:
        logger.error(f"{scheme} produced infeasible rows for {', '.join(sorted(violations))}")

    full = Assignment({app.app_id: assignment.rows.get(app.app_id) for app in scenario.applications})
    return OrchestrationResult(
        scheme=scheme,
        assignment=full,
        per_app=per_app,
        churned=full.churned,
        system_energy=system_energy(full, graph, node_specs),
        report=report,
        diagnostics=dict(diagnostics or {}),
        churn_energy=len(full.churned) * costliest_deployment(scenario),
    )


def solve(scenario: Scenario,
          qaoa_config: QaoaConfig = QaoaConfig(),
          seed: int = 0,
          cache: Optional[CacheManager] = None) -> OrchestrationResult:
    """Prune, partition, choose paths and reconcile capacity; deterministic given the seed"""
    scenario.validate()
    requirements, node_specs = scenario.requirements, scenario.node_specs

    graph = build_graph(scenario)
    pruned = prune_edges(graph, requirements, node_specs)
    tree = partition_recursive(pruned, qaoa_config, seed, cache, node_specs)

    choices = []
    for leaf, leaf_graph in zip(tree.leaves(), tree.leaf_graphs()):
        if leaf.churn_leaf:
            choices.append(PathChoice(leaf.applications[0].ref, requirements[leaf.applications[0].ref].latency_max))
            continue
        choices.append(min_energy_path(leaf_graph, requirements, node_specs))

    assignment = resolve_contention(choices, node_specs)
    diagnostics = {'partition': tree.summary(), 'traces': [list(t) for t in tree.traces()]}
    result = build_result('QAG', scenario, graph, assignment, diagnostics)
    logger.info(f"QAG served {result.served}/{len(scenario.applications)} applications "
                f"using {result.system_energy:.3f} J")
    return result
