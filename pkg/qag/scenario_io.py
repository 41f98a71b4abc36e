"""
Scenario files, validation, the worked fixtures and the synthetic profile generator
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .cost_model import AppRequirements, ComputeNodeSpec
from .errors import CostModelError, ScenarioParseError, ScenarioValidationError, SchemaVersionError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SUPPORTED_VERSIONS = {1}

EPOCH_RANGE = (1, 50)
STEPS_RANGE = (1, 2000)


@dataclass(frozen=True)
class Configuration:
    """GNN deployment recipe; mode 0 = load-and-infer, otherwise load-update-infer"""
    config_id: str
    data_source: str
    epochs: int
    steps_per_epoch: int
    mode: int

    @property
    def training_volume(self) -> int:
        return 0 if self.mode == 0 else self.epochs * self.steps_per_epoch


@dataclass(frozen=True)
class Profile:
    cost: float
    loss: float


@dataclass(frozen=True)
class Scenario:
    applications: Tuple[AppRequirements, ...]
    configurations: Tuple[Configuration, ...]
    nodes: Tuple[ComputeNodeSpec, ...]
    profiles: Mapping[Tuple[str, str], Profile] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def requirements(self) -> Dict[str, AppRequirements]:
        return {a.app_id: a for a in self.applications}

    @property
    def node_specs(self) -> Dict[str, ComputeNodeSpec]:
        return {n.node_id: n for n in self.nodes}

    @property
    def configs_by_id(self) -> Dict[str, Configuration]:
        return {c.config_id: c for c in self.configurations}

    def validate(self) -> 'Scenario':
        if self.schema_version not in SUPPORTED_VERSIONS:
            raise SchemaVersionError(f"Unsupported schema_version {self.schema_version!r}")
        for name, items, key in (
            ('applications', self.applications, 'app_id'),
            ('configurations', self.configurations, 'config_id'),
            ('nodes', self.nodes, 'node_id'),
        ):
            if not items:
                raise ScenarioValidationError(f"{name}: at least one entry is required")
            ids = [getattr(item, key) for item in items]
            duplicates = sorted({i for i in ids if ids.count(i) > 1})
            if duplicates:
                raise ScenarioValidationError(f"{name}.{key}: duplicate ids {', '.join(duplicates)}")

        for i, config in enumerate(self.configurations):
            if config.epochs < 1 or config.steps_per_epoch < 1:
                raise ScenarioValidationError(
                    f"configurations[{i}] ({config.config_id}): epochs and steps_per_epoch must be >= 1"
                )
            if config.mode < 0:
                raise ScenarioValidationError(f"configurations[{i}] ({config.config_id}): mode must be >= 0")

        app_ids = [a.app_id for a in self.applications]
        config_ids = [c.config_id for c in self.configurations]
        for app_id in app_ids:
            for config_id in config_ids:
                profile = self.profiles.get((app_id, config_id))
                if profile is None:
                    raise ScenarioValidationError(f"profiles: missing entry for (app={app_id}, config={config_id})")
                if profile.cost < 0 or profile.loss < 0:
                    raise ScenarioValidationError(
                        f"profiles: negative cost or loss for (app={app_id}, config={config_id})"
                    )
        extra = set(self.profiles) - {(a, c) for a in app_ids for c in config_ids}
        if extra:
            app_id, config_id = sorted(extra)[0]
            raise ScenarioValidationError(f"profiles: unknown pair (app={app_id}, config={config_id})")
        return self


def with_targets(scenario: Scenario,
                 tau_max: Optional[float] = None,
                 loss_max: Optional[float] = None) -> Scenario:
    """Copy of the scenario with uniform latency and/or loss targets"""
    apps = []
    for app in scenario.applications:
        apps.append(replace(
            app,
            latency_max=app.latency_max if tau_max is None else float(tau_max),
            loss_max=app.loss_max if loss_max is None else float(loss_max),
        ))
    return replace(scenario, applications=tuple(apps))


# --- file format ---------------------------------------------------------

def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    return {
        'schema_version': scenario.schema_version,
        'applications': [
            {'app_id': a.app_id, 'label': a.label,
             'loss_max': float(a.loss_max), 'latency_max': float(a.latency_max)}
            for a in scenario.applications
        ],
        'configurations': [
            {'config_id': c.config_id, 'data_source': c.data_source, 'epochs': int(c.epochs),
             'steps_per_epoch': int(c.steps_per_epoch), 'mode': int(c.mode)}
            for c in scenario.configurations
        ],
        'nodes': [
            {'node_id': n.node_id, 'node_type': n.node_type, 'idle_power': float(n.idle_power),
             'max_power': float(n.max_power), 'capacity': float(n.capacity)}
            for n in scenario.nodes
        ],
        'profiles': [
            {'app_id': a.app_id, 'config_id': c.config_id,
             'cost': float(scenario.profiles[(a.app_id, c.config_id)].cost),
             'loss': float(scenario.profiles[(a.app_id, c.config_id)].loss)}
            for a in scenario.applications
            for c in scenario.configurations
            if (a.app_id, c.config_id) in scenario.profiles
        ],
    }


def _field(entry: Mapping[str, Any], name: str, path: str, kind):
    if not isinstance(entry, Mapping):
        raise ScenarioValidationError(f"{path}: expected an object")
    if name not in entry:
        raise ScenarioValidationError(f"{path}.{name}: missing")
    value = entry[name]
    try:
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError
        if kind is int and float(value) != int(value):
            raise TypeError
        return kind(value)
    except (TypeError, ValueError):
        raise ScenarioValidationError(f"{path}.{name}: expected {kind.__name__}, got {value!r}") from None


def _list(data: Mapping[str, Any], name: str) -> List[Any]:
    if name not in data:
        raise ScenarioValidationError(f"{name}: missing")
    if not isinstance(data[name], list):
        raise ScenarioValidationError(f"{name}: expected a list")
    return data[name]


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    if not isinstance(data, Mapping):
        raise ScenarioValidationError("scenario: expected an object at top level")
    version = data.get('schema_version')
    if version not in SUPPORTED_VERSIONS:
        raise SchemaVersionError(
            f"schema_version: unsupported value {version!r} (supported: {sorted(SUPPORTED_VERSIONS)})"
        )

    apps = []
    for i, entry in enumerate(_list(data, 'applications')):
        path = f"applications[{i}]"
        label = entry.get('label', '') if isinstance(entry, Mapping) else ''
        try:
            apps.append(AppRequirements(
                _field(entry, 'app_id', path, str),
                _field(entry, 'loss_max', path, float),
                _field(entry, 'latency_max', path, float),
                label if isinstance(label, str) else str(label),
            ))
        except CostModelError as e:
            raise ScenarioValidationError(f"{path}: {e}") from None

    configs = []
    for i, entry in enumerate(_list(data, 'configurations')):
        path = f"configurations[{i}]"
        configs.append(Configuration(
            _field(entry, 'config_id', path, str),
            _field(entry, 'data_source', path, str),
            _field(entry, 'epochs', path, int),
            _field(entry, 'steps_per_epoch', path, int),
            _field(entry, 'mode', path, int),
        ))

    nodes = []
    for i, entry in enumerate(_list(data, 'nodes')):
        path = f"nodes[{i}]"
        try:
            nodes.append(ComputeNodeSpec(
                _field(entry, 'node_id', path, str),
                _field(entry, 'node_type', path, str),
                _field(entry, 'idle_power', path, float),
                _field(entry, 'max_power', path, float),
                _field(entry, 'capacity', path, float),
            ))
        except CostModelError as e:
            raise ScenarioValidationError(f"{path}: {e}") from None

    profiles = {}
    for i, entry in enumerate(_list(data, 'profiles')):
        path = f"profiles[{i}]"
        key = (_field(entry, 'app_id', path, str), _field(entry, 'config_id', path, str))
        if key in profiles:
            raise ScenarioValidationError(f"{path}: duplicate entry for (app={key[0]}, config={key[1]})")
        profiles[key] = Profile(_field(entry, 'cost', path, float), _field(entry, 'loss', path, float))
    return Scenario(tuple(apps), tuple(configs), tuple(nodes), profiles, version).validate()


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    text = path.read_text(encoding='utf-8')
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{path}: {e.msg}", e.lineno, e.colno) from None
    scenario = scenario_from_dict(data)
    logger.info(f"Loaded scenario {path}: {len(scenario.applications)} apps, "
                f"{len(scenario.configurations)} configs, {len(scenario.nodes)} nodes")
    return scenario


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    scenario.validate()
    path = Path(path)
    path.write_text(json.dumps(scenario_to_dict(scenario), indent=2) + '\n', encoding='utf-8')
    logger.info(f"Saved scenario to {path}")


# --- fixtures ------------------------------------------------------------

# Compute node catalogue: type -> (idle W, max W, TOPS)
NODE_CATALOGUE = {
    'CPU': (5.0, 12.0, 2.0),
    'T4 GPU': (36.0, 70.0, 80.0),
    'TPU v2': (53.0, 280.0, 180.0),
}

# Network modeling applications: (scenario / predicted parameter, train/test data sources)
APPLICATION_CATALOGUE = [
    ('h1', 'Real-traffic / Delay', ('GERMANY50', 'NOBEL-GBN', 'GEANT', 'ABILENE')),
    ('h2', 'Traffic models / Delay', ('GBN', 'GEANT', 'NSFNET')),
    ('h3', 'Traffic models / Jitter', ('GBN', 'GEANT', 'NSFNET')),
    ('h4', 'Traffic models / Packet-loss', ('GBN', 'GEANT', 'NSFNET')),
    ('h5', 'Scheduling / Delay', ('GBN', 'GEANT', 'NSFNET')),
    ('h6', 'Scheduling / Jitter', ('GBN', 'GEANT', 'NSFNET')),
    ('h7', 'Scheduling / Packet-loss', ('GBN', 'GEANT', 'NSFNET')),
]


def catalogue_nodes() -> List[ComputeNodeSpec]:
    return [
        ComputeNodeSpec(f"n{i}", node_type, idle, max_power, tops)
        for i, (node_type, (idle, max_power, tops)) in enumerate(NODE_CATALOGUE.items(), start=1)
    ]


def fixture_small_example() -> Scenario:
    """Two applications, four configurations, a CPU and a T4 GPU, with the worked-example edge weights"""
    apps = (
        AppRequirements('h1', 30.0, 60.0, APPLICATION_CATALOGUE[0][1]),
        AppRequirements('h2', 30.0, 60.0, APPLICATION_CATALOGUE[1][1]),
    )
    configs = (
        Configuration('sigma1', 'ABILENE', 1, 1, 0),
        Configuration('sigma2', 'GEANT', 1, 5, 1),
        Configuration('sigma3', 'GEANT', 10, 50, 1),
        Configuration('sigma4', 'GEANT', 20, 200, 1),
    )
    cpu, gpu = NODE_CATALOGUE['CPU'], NODE_CATALOGUE['T4 GPU']
    nodes = (
        ComputeNodeSpec('n1', 'CPU', *cpu),
        ComputeNodeSpec('n2', 'T4 GPU', *gpu),
    )
    weights = {
        'h1': [(50.0, 15.0), (30.0, 25.0), (20.0, 40.0), (10.0, 50.0)],
        'h2': [(100.0, 65.0), (80.0, 75.0), (70.0, 20.0), (60.0, 30.0)],
    }
    profiles = {
        (app_id, config.config_id): Profile(cost, loss)
        for app_id, rows in weights.items()
        for config, (cost, loss) in zip(configs, rows)
    }
    return Scenario(apps, configs, nodes, profiles).validate()


def fixture_large_scenario(seed: int = 0,
                           loss_max: float = 20.0,
                           latency_max: float = 5.0,
                           n_configs: int = 20,
                           n_inference: int = 2,
                           noise: float = 0.05) -> Scenario:
    """Seven applications, twenty shared configurations, three nodes of each catalogue type"""
    rng = np.random.default_rng(seed)
    apps = tuple(AppRequirements(app_id, loss_max, latency_max, label)
                 for app_id, label, _ in APPLICATION_CATALOGUE)
    sources = sorted({s for _, _, srcs in APPLICATION_CATALOGUE for s in srcs})

    configs = []
    for i in range(n_configs):
        source = sources[int(rng.integers(len(sources)))]
        if i < n_inference:
            configs.append(Configuration(f"sigma{i + 1}", source, 1, 1, 0))
        else:
            configs.append(Configuration(
                f"sigma{i + 1}", source,
                int(rng.integers(EPOCH_RANGE[0], EPOCH_RANGE[1] + 1)),
                int(rng.integers(STEPS_RANGE[0], STEPS_RANGE[1] + 1)),
                1,
            ))

    nodes = []
    for node_type, (idle, max_power, tops) in NODE_CATALOGUE.items():
        for _ in range(3):
            nodes.append(ComputeNodeSpec(f"n{len(nodes) + 1}", node_type, idle, max_power, tops))

    profiles = generate_profiles(seed, apps, configs, noise=noise)
    return Scenario(apps, tuple(configs), tuple(nodes), profiles).validate()


def generate_profiles(seed: int,
                      apps: Sequence[AppRequirements],
                      configs: Sequence[Configuration],
                      noise: float = 0.05) -> Dict[Tuple[str, str], Profile]:
    """Affine-in-volume cost and exponentially decaying loss toward a per-app floor"""
    # Offset so the profile stream differs from the stream that drew the configurations
    rng = np.random.default_rng([seed, 1])
    profiles = {}
    for app in apps:
        infer_cost = rng.uniform(0.5, 2.0)       # T-ops for load-and-infer
        step_cost = rng.uniform(0.001, 0.004)    # T-ops per training step
        base_loss = rng.uniform(15.0, 60.0)      # pre-trained model MAPE %
        floor_loss = rng.uniform(3.0, 10.0)
        scale = rng.uniform(2_000.0, 20_000.0)   # steps for the loss gap to shrink by e
        factors = np.exp(rng.normal(0.0, noise, size=len(configs))) if noise > 0 else np.ones(len(configs))

        for config, factor in zip(configs, factors):
            volume = config.training_volume
            cost = infer_cost + step_cost * volume
            loss = floor_loss + (base_loss - floor_loss) * math.exp(-volume / scale)
            profiles[(app.app_id, config.config_id)] = Profile(float(cost), float(loss * factor))
    return profiles


def open_scenario(source: str, seed: int = 0) -> Scenario:
    """Resolve `fixture:small`, `fixture:large[:SEED]` or a path to a scenario file"""
    if source == 'fixture:small':
        return fixture_small_example()
    if source.startswith('fixture:large'):
        _, _, suffix = source.partition('fixture:large')
        if suffix:
            try:
                seed = int(suffix.lstrip(':'))
            except ValueError:
                raise ScenarioValidationError(f"Bad fixture seed in {source!r}") from None
        return fixture_large_scenario(seed)
    if source.startswith('fixture:'):
        raise ScenarioValidationError(f"Unknown fixture {source!r} (expected fixture:small or fixture:large)")
    return load_scenario(source)
