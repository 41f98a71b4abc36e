"""
Shared pytest fixtures and scenario builders
"""

from dataclasses import replace

import pytest

from qag.cost_model import AppRequirements, ComputeNodeSpec
from qag.graph_model import build_graph, prune_edges
from qag.qaoa_engine import QaoaConfig
from qag.scenario_io import NODE_CATALOGUE, Configuration, Profile, Scenario, fixture_small_example


def set_targets(scenario, targets):
    """Per-app (loss_max, latency_max) overrides"""
    apps = tuple(
        replace(app, loss_max=targets[app.app_id][0], latency_max=targets[app.app_id][1])
        if app.app_id in targets else app
        for app in scenario.applications
    )
    return replace(scenario, applications=apps)


def table_node(node_id, node_type):
    return ComputeNodeSpec(node_id, node_type, *NODE_CATALOGUE[node_type])


def make_scenario(targets, profiles, nodes):
    """targets: app -> (loss_max, latency_max); profiles: app -> [(cost, loss), ...]; sigma1 is load-and-infer"""
    apps = tuple(AppRequirements(app_id, loss, latency) for app_id, (loss, latency) in targets.items())
    n_configs = len(next(iter(profiles.values())))
    configs = tuple(Configuration(f"sigma{i + 1}", 'GEANT', 1, 1, 0 if i == 0 else 1) for i in range(n_configs))
    table = {
        (app_id, config.config_id): Profile(cost, loss)
        for app_id, rows in profiles.items()
        for config, (cost, loss) in zip(configs, rows)
    }
    return Scenario(apps, configs, tuple(nodes), table).validate()


def random_scenario(rng, n_apps=2, n_configs=4, n_nodes=2):
    types = list(NODE_CATALOGUE)
    nodes = [table_node(f"n{i + 1}", types[int(k)]) for i, k in enumerate(rng.integers(0, 3, size=n_nodes))]
    targets = {f"h{i + 1}": (float(rng.uniform(10, 80)), float(rng.uniform(0.5, 60))) for i in range(n_apps)}
    profiles = {
        app_id: [(float(rng.uniform(1, 100)), float(rng.uniform(5, 80))) for _ in range(n_configs)]
        for app_id in targets
    }
    return make_scenario(targets, profiles, nodes)


@pytest.fixture
def small_scenario():
    return fixture_small_example()


@pytest.fixture
def small_graph(small_scenario):
    return build_graph(small_scenario)


@pytest.fixture
def pruned_graph(small_scenario, small_graph):
    return prune_edges(small_graph, small_scenario.requirements, small_scenario.node_specs)


@pytest.fixture
def qaoa_config():
    return QaoaConfig(layers=2, shots=100, max_iters=100, qubit_budget=12)


@pytest.fixture
def quiet_env(monkeypatch, tmp_path):
    """No log file, cache under tmp_path, no notifications"""
    monkeypatch.setenv('QAG_LOG_FILE', '')
    monkeypatch.setenv('QAG_CACHE_DB', str(tmp_path / 'cache.db'))
    monkeypatch.delenv('NTFY_TOPIC', raising=False)
    return tmp_path
