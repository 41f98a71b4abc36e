"""
Sweep runner: energy and churn of QAG, Opt and RNF over a grid of latency and
loss targets, with seeded random instances and normal-approximation 95% CIs.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import norm

from .baselines import DEFAULT_ORACLE_BUDGET, OPTIMUM, BaselinePolicy, run_baseline, search_space
from .cache_manager import CacheManager
from .errors import OracleBudgetError
from .orchestrator import OrchestrationResult, solve
from .qaoa_engine import QaoaConfig
from .scenario_io import Profile, Scenario, open_scenario, with_targets

logger = logging.getLogger(__name__)

SCHEMES = ('QAG', 'Opt', 'RNF')
RESULT_COLUMNS = ('scheme', 'tau_max', 'loss_max', 'mean_energy_j', 'ci95_j', 'churn_rate', 'wall_time_s')

Z_95 = float(norm.ppf(0.975))


@dataclass(frozen=True)
class SweepSpec:
    scenario: str
    tau_grid: Tuple[float, ...]
    loss_grid: Tuple[float, ...]
    schemes: Tuple[str, ...] = SCHEMES
    iterations: int = 200
    base_seed: int = 0
    qaoa: QaoaConfig = field(default_factory=QaoaConfig)
    oracle_budget: int = DEFAULT_ORACLE_BUDGET
    rnf_selector: Union[str, Mapping[str, str]] = 'inference'
    record_timing: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not self.tau_grid or not self.loss_grid:
            raise ValueError("tau_grid and loss_grid must both be non-empty")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ValueError(f"Unknown schemes {', '.join(unknown)} (expected a subset of {', '.join(SCHEMES)})")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SweepSpec:
        """Build a spec from a JSON-style mapping (`sweep --spec-file`)"""
        qaoa = QaoaConfig(**data.get('qaoa', {}))
        return cls(
            scenario=data['scenario'],
            tau_grid=tuple(float(t) for t in data['tau_grid']),
            loss_grid=tuple(float(l) for l in data['loss_grid']),
            schemes=tuple(normalize_scheme(s) for s in data.get('schemes', SCHEMES)),
            iterations=int(data.get('iterations', 200)),
            base_seed=int(data.get('base_seed', 0)),
            qaoa=qaoa,
            oracle_budget=int(data.get('oracle_budget', DEFAULT_ORACLE_BUDGET)),
            rnf_selector=data.get('rnf_selector', 'inference'),
            record_timing=bool(data.get('record_timing', False)),
        )

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> SweepSpec:
        with open(path, encoding='utf-8') as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    tau_max: float
    loss_max: float
    mean_energy_j: float
    ci95_j: float
    churn_rate: float
    wall_time_s: float


@dataclass(frozen=True)
class SweepResult:
    rows: Tuple[SweepRow, ...] = ()

    def cell(self, scheme: str, tau_max: float, loss_max: float) -> Optional[SweepRow]:
        for row in self.rows:
            if (row.scheme, row.tau_max, row.loss_max) == (scheme, tau_max, loss_max):
                return row
        return None


def normalize_scheme(name: str) -> str:
    lookup = {s.lower(): s for s in SCHEMES}
    try:
        return lookup[name.lower()]
    except KeyError:
        raise ValueError(f"Unknown scheme {name!r} (expected one of {', '.join(SCHEMES)})") from None


def instance_seed(base_seed: int, iteration: int) -> int:
    # Shared by every grid cell so all cells see the same instances
    return int(np.random.SeedSequence([base_seed, iteration]).generate_state(1)[0])


def solver_seed(base_seed: int, cell: int, iteration: int) -> int:
    return int(np.random.SeedSequence([base_seed, cell, iteration, 1]).generate_state(1)[0])


def draw_instance(scenario: Scenario, seed: int) -> Scenario:
    """Sample configurations and nodes uniformly with replacement from the scenario's pools

    Load-and-infer configurations are always kept, first and in pool order; sampling fills the other slots.
    """
    rng = np.random.default_rng(seed)
    pool = scenario.configurations
    kept = [i for i, c in enumerate(pool) if c.mode == 0]
    config_picks = kept + [int(p) for p in rng.integers(len(pool), size=len(pool) - len(kept))]
    node_picks = rng.integers(len(scenario.nodes), size=len(scenario.nodes))

    configs, profiles = [], {}
    for i, pick in enumerate(config_picks, start=1):
        source = scenario.configurations[int(pick)]
        config = replace(source, config_id=f"sigma{i}")
        configs.append(config)
        for app in scenario.applications:
            profile = scenario.profiles[(app.app_id, source.config_id)]
            profiles[(app.app_id, config.config_id)] = Profile(profile.cost, profile.loss)

    nodes = [replace(scenario.nodes[int(pick)], node_id=f"n{i}") for i, pick in enumerate(node_picks, start=1)]
    return Scenario(scenario.applications, tuple(configs), tuple(nodes), profiles, scenario.schema_version)


def confidence_half_width(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return Z_95 * float(np.std(values, ddof=1)) / math.sqrt(len(values))


def _runner(spec: SweepSpec, cache: Optional[CacheManager]) -> Dict[str, Callable[[Scenario, int], OrchestrationResult]]:
    policy = BaselinePolicy(fixed_config_selector=spec.rnf_selector)
    return {
        'QAG': lambda scenario, seed: solve(scenario, spec.qaoa, seed, cache),
        'Opt': lambda scenario, seed: run_baseline(scenario, OPTIMUM, spec.oracle_budget),
        'RNF': lambda scenario, seed: run_baseline(scenario, policy),
    }


def run_sweep(spec: SweepSpec,
              cache: Optional[CacheManager] = None,
              scenario: Optional[Scenario] = None) -> SweepResult:
    """Every (tau_max, loss_max) cell, every scheme, `iterations` seeded instances; deterministic given base_seed"""
    base = scenario if scenario is not None else open_scenario(spec.scenario, spec.base_seed)
    base.validate()

    if 'Opt' in spec.schemes and search_space(base) > spec.oracle_budget:
        raise OracleBudgetError(
            f"Opt needs {search_space(base):,} candidate assignments on {spec.scenario}, "
            f"budget is {spec.oracle_budget:,}"
        )

    instances = [draw_instance(base, instance_seed(spec.base_seed, i)) for i in range(spec.iterations)]
    runners = _runner(spec, cache)
    cells = list(itertools.product(spec.tau_grid, spec.loss_grid))
    n_apps = len(base.applications)

    rows = []
    for cell, (tau_max, loss_max) in enumerate(cells):
        logger.info(f"Cell {cell + 1}/{len(cells)}: tau_max={tau_max} s, loss_max={loss_max}%")
        for scheme in spec.schemes:
            energies, churned, elapsed = [], 0, 0.0
            for iteration, instance in enumerate(instances):
                targeted = with_targets(instance, tau_max, loss_max)
                start = time.perf_counter()
                result = runners[scheme](targeted, solver_seed(spec.base_seed, cell, iteration))
                elapsed += time.perf_counter() - start
                energies.append(result.charged_energy)
                churned += len(result.churned)

            row = SweepRow(
                scheme=scheme,
                tau_max=float(tau_max),
                loss_max=float(loss_max),
                mean_energy_j=float(np.mean(energies)),
                ci95_j=confidence_half_width(energies),
                churn_rate=churned / (n_apps * len(instances)),
                wall_time_s=elapsed / len(instances) if spec.record_timing else 0.0,
            )
            logger.debug(f"{row}")
            rows.append(row)

    return SweepResult(tuple(rows))


def savings_summary(result: SweepResult) -> List[str]:
    """QAG against RNF per cell: energy saving and churn difference"""
    lines = []
    for row in result.rows:
        if row.scheme != 'QAG':
            continue
        rnf = result.cell('RNF', row.tau_max, row.loss_max)
        if rnf is None:
            continue
        if rnf.mean_energy_j > 0:
            saving = f"{100 * (1 - row.mean_energy_j / rnf.mean_energy_j):.1f}% energy saved"
        else:
            saving = "RNF used no energy"
        lines.append(
            f"tau={row.tau_max:g}s loss={row.loss_max:g}%: {saving}, "
            f"churn {row.churn_rate:.3f} vs {rnf.churn_rate:.3f}"
        )
    return lines


def emit_results(result: SweepResult, path: Union[str, Path], fmt: str = 'csv') -> Path:
    """Write the rows as CSV (fixed header) or JSON; overwrites, so repeated calls give identical files"""
    path = Path(path)
    if fmt == 'csv':
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(RESULT_COLUMNS)
            for row in result.rows:
                writer.writerow([getattr(row, column) for column in RESULT_COLUMNS])
    elif fmt == 'json':
        payload = {'columns': list(RESULT_COLUMNS), 'rows': [asdict(row) for row in result.rows]}
        path.write_text(json.dumps(payload, indent=2) + '\n', encoding='utf-8')
    else:
        raise ValueError(f"Unknown result format {fmt!r} (expected csv or json)")
    logger.info(f"Wrote {len(result.rows)} result rows to {path}")
    return path


def load_results(path: Union[str, Path]) -> SweepResult:
    """Parse a file written by emit_results (format taken from the extension)"""
    path = Path(path)
    if path.suffix == '.json':
        data = json.loads(path.read_text(encoding='utf-8'))
        return SweepResult(tuple(SweepRow(**row) for row in data['rows']))

    with open(path, newline='', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        rows = []
        for record in reader:
            rows.append(SweepRow(
                scheme=record['scheme'],
                **{column: float(record[column]) for column in RESULT_COLUMNS[1:]},
            ))
    return SweepResult(tuple(rows))
