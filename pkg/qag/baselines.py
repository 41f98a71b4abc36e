"""
Benchmarks: the exhaustive optimum (Opt) and the fixed-configuration baseline (RNF)
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .cost_model import Assignment, AssignmentRow, granted_rate, meets_latency
from .errors import OracleBudgetError, ScenarioValidationError
from .graph_model import build_graph
from .orchestrator import OrchestrationResult, build_result
from .scenario_io import Scenario

logger = logging.getLogger(__name__)

DEFAULT_ORACLE_BUDGET = 10_000_000

RNF_PRESETS = ('inference', 'full-training')


class PolicyKind(str, Enum):
    EXHAUSTIVE_OPTIMUM = 'exhaustive-optimum'
    FIXED_CONFIG = 'fixed-config'


@dataclass(frozen=True)
class BaselinePolicy:
    """How a benchmark picks configurations; `fixed_config_selector` is a preset name or app -> config id"""
    kind: PolicyKind = PolicyKind.FIXED_CONFIG
    fixed_config_selector: Union[str, Mapping[str, str]] = 'inference'
    fixed_node_policy: str = 'first-feasible-by-index'

    def __post_init__(self):
        if not isinstance(self.kind, PolicyKind):
            raise ValueError(f"Unknown baseline kind {self.kind!r}")
        if isinstance(self.fixed_config_selector, str) and self.fixed_config_selector not in RNF_PRESETS:
            raise ValueError(
                f"Unknown fixed-config preset {self.fixed_config_selector!r} (expected one of {', '.join(RNF_PRESETS)})"
            )
        if self.fixed_node_policy != 'first-feasible-by-index':
            raise ValueError(f"Unknown node policy {self.fixed_node_policy!r}")

    @property
    def scheme(self) -> str:
        return 'Opt' if self.kind == PolicyKind.EXHAUSTIVE_OPTIMUM else 'RNF'

    def designated_configs(self, scenario: Scenario) -> Dict[str, str]:
        """Resolve the selector to one configuration id per application"""
        configs = scenario.configurations
        selector = self.fixed_config_selector

        if selector == 'inference':
            inference = [c for c in configs if c.mode == 0]
            if not inference:
                raise ScenarioValidationError("configurations: no load-and-infer (mode 0) configuration for RNF")
            return {a.app_id: inference[0].config_id for a in scenario.applications}
        if selector == 'full-training':
            # first of the largest training volume
            heaviest = max(configs, key=lambda c: (c.training_volume, -configs.index(c)))
            return {a.app_id: heaviest.config_id for a in scenario.applications}

        known = scenario.configs_by_id
        designated = {}
        for app in scenario.applications:
            if app.app_id not in selector:
                raise ScenarioValidationError(f"rnf selector: no configuration designated for {app.app_id}")
            config_id = selector[app.app_id]
            if config_id not in known:
                raise ScenarioValidationError(f"rnf selector: unknown configuration {config_id!r} for {app.app_id}")
            designated[app.app_id] = config_id
        return designated


OPTIMUM = BaselinePolicy(PolicyKind.EXHAUSTIVE_OPTIMUM)


def search_space(scenario: Scenario) -> int:
    """Candidate assignments the exhaustive search would have to consider"""
    h = len(scenario.applications)
    return len(scenario.configurations) ** h * len(scenario.nodes) ** h * h


def optimal_solve(scenario: Scenario, budget: int = DEFAULT_ORACLE_BUDGET) -> OrchestrationResult:
    """Brute force under the default allocation policy: most applications served first, then least energy"""
    scenario.validate()
    space = search_space(scenario)
    if space > budget:
        raise OracleBudgetError(
            f"Exhaustive search over {space:,} candidate assignments exceeds the budget of {budget:,}"
        )

    requirements, node_specs = scenario.requirements, scenario.node_specs
    # Capacity is granted in ascending app-id order, whatever order the scenario lists them in
    apps = sorted(a.app_id for a in scenario.applications)

    # Per-app options that are individually feasible on a whole node; None is churn
    options: List[List[Optional[Tuple[str, str, float]]]] = []
    for app_id in apps:
        req = requirements[app_id]
        app_options: List[Optional[Tuple[str, str, float]]] = [None]
        for config in scenario.configurations:
            profile = scenario.profiles[(app_id, config.config_id)]
            if profile.loss > req.loss_max:
                continue
            for node in scenario.nodes:
                if meets_latency(profile.cost, node.capacity, req.latency_max):
                    app_options.append((config.config_id, node.node_id, profile.cost))
        options.append(app_options)

    best_key: Optional[Tuple[int, float]] = None
    best_rows: Dict[str, Optional[AssignmentRow]] = {app_id: None for app_id in apps}
    evaluated = 0

    for combo in itertools.product(*options):
        evaluated += 1
        used: Dict[str, float] = {}
        rows: Dict[str, Optional[AssignmentRow]] = {}
        energy = 0.0
        for app_id, choice in zip(apps, combo):
            if choice is None:
                rows[app_id] = None
                continue
            config_id, node_id, cost = choice
            spec = node_specs[node_id]
            rate = granted_rate(spec, used)
            if not meets_latency(cost, rate, requirements[app_id].latency_max):
                break
            used[node_id] = used.get(node_id, 0.0) + rate
            rows[app_id] = AssignmentRow(app_id, config_id, node_id, rate)
            energy += cost / rate * spec.max_power
        else:
            served = sum(row is not None for row in rows.values())
            key = (-served, energy)
            if best_key is None or key < best_key:
                best_key, best_rows = key, rows

    logger.info(f"Opt evaluated {evaluated} of {space} candidate assignments")
    graph = build_graph(scenario)
    return build_result('Opt', scenario, graph, Assignment(best_rows), {'evaluated': evaluated})


def rnf_solve(scenario: Scenario, policy: BaselinePolicy = BaselinePolicy()) -> OrchestrationResult:
    """Fixed configuration per app on the first node by index that still has room for it"""
    scenario.validate()
    requirements, node_specs = scenario.requirements, scenario.node_specs
    designated = policy.designated_configs(scenario)

    used: Dict[str, float] = {}
    rows: Dict[str, Optional[AssignmentRow]] = {}
    for app in sorted(scenario.applications, key=lambda a: a.app_id):
        req = requirements[app.app_id]
        config_id = designated[app.app_id]
        profile = scenario.profiles[(app.app_id, config_id)]
        rows[app.app_id] = None

        if profile.loss > req.loss_max:
            logger.debug(f"RNF churns {app.app_id}: {config_id} loss {profile.loss:.2f} > {req.loss_max}")
            continue

        for node in scenario.nodes:
            rate = granted_rate(node_specs[node.node_id], used)
            if not meets_latency(profile.cost, rate, req.latency_max):
                continue
            used[node.node_id] = used.get(node.node_id, 0.0) + rate
            rows[app.app_id] = AssignmentRow(app.app_id, config_id, node.node_id, rate)
            break
        else:
            logger.debug(f"RNF churns {app.app_id}: no node meets {req.latency_max} s with {config_id}")

    graph = build_graph(scenario)
    return build_result('RNF', scenario, graph, Assignment(rows), {'designated': designated})


def run_baseline(scenario: Scenario,
                 policy: BaselinePolicy,
                 budget: int = DEFAULT_ORACLE_BUDGET) -> OrchestrationResult:
    if policy.kind == PolicyKind.EXHAUSTIVE_OPTIMUM:
        return optimal_solve(scenario, budget)
    return rnf_solve(scenario, policy)

