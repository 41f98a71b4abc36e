"""
Command-line entry point for qag: solve, sweep, oracle, fixtures and cache
"""

import argparse
import json
import logging
import sqlite3
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from .baselines import OPTIMUM, BaselinePolicy, run_baseline
from .cache_manager import CacheManager
from .config import Config
from .errors import QagError
from .notifier import Notifier
from .orchestrator import OrchestrationResult, solve
from .scenario_io import fixture_large_scenario, fixture_small_example, open_scenario, save_scenario, with_targets
from .sweep import SweepSpec, emit_results, normalize_scheme, run_sweep, savings_summary

logger = logging.getLogger(__name__)


def configure_logging(config: Config) -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if config.log_file:
        handlers.insert(0, logging.FileHandler(config.log_file))
    logging.basicConfig(
        level=getattr(logging, config.log_level, logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=handlers
    )


def _open_cache(config: Config) -> Optional[CacheManager]:
    if not config.cache_db_path:
        return None
    try:
        return CacheManager(config.cache_db_path)
    except sqlite3.Error as e:
        logger.warning(f"Cache disabled, could not open {config.cache_db_path}: {e}")
        return None


def _log_run(cache: Optional[CacheManager], command: str, scenario: str, seed: int,
             success: bool, summary: Optional[Dict] = None) -> None:
    if cache is None:
        return
    try:
        cache.log_run(command, scenario, seed, success, summary)
    except sqlite3.Error as e:
        logger.warning(f"Could not record run history: {e}")


def _parse_grid(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("grid must hold at least one value")
    return values


def _parse_selector(text: str) -> Union[str, Dict[str, str]]:
    """`inference`, `full-training` or `h1=sigma1,h2=sigma3`"""
    if '=' not in text:
        return text
    selector = {}
    for part in text.split(','):
        app_id, _, config_id = part.partition('=')
        selector[app_id.strip()] = config_id.strip()
    return selector


def _print_result(result: OrchestrationResult, fmt: str) -> None:
    if fmt == 'json':
        print(json.dumps({
            'scheme': result.scheme,
            'system_energy_j': result.system_energy,
            'churned': sorted(result.churned),
            'rows': result.summary_rows(),
            'diagnostics': result.diagnostics,
        }, indent=2))
        return

    if fmt == 'csv':
        columns = list(result.summary_rows()[0].keys()) if result.per_app else []
        print(','.join(columns))
        for row in result.summary_rows():
            print(','.join('' if row[c] is None else str(row[c]) for c in columns))
        return

    total = len(result.per_app)
    print(f"🧭 {result.scheme}: served {result.served}/{total} applications, "
          f"system energy {result.system_energy:.3f} J")
    for row in result.summary_rows():
        if row['churned']:
            print(f"   {row['app_id']:<6} ❌ churned")
            continue
        print(f"   {row['app_id']:<6} → ({row['config_id']}, {row['node_id']}) "
              f"rate {row['rate_tops']:.2f} TOPS, energy {row['energy_j']:.3f} J, "
              f"latency {row['latency_s']:.4f} s, loss {row['loss_mape']:.2f}%")


def _cmd_solve(args, config: Config) -> int:
    scenario = with_targets(open_scenario(args.scenario, args.seed), args.tau_max, args.loss_max)
    cache = _open_cache(config)
    scheme = normalize_scheme(args.scheme)

    if scheme == 'QAG':
        result = solve(scenario, config.qaoa_config(_qaoa_overrides(args)), args.seed, cache)
    elif scheme == 'Opt':
        result = run_baseline(scenario, OPTIMUM, args.oracle_budget or int(config.oracle_budget))
    else:
        result = run_baseline(scenario, BaselinePolicy(fixed_config_selector=args.rnf_selector))

    _print_result(result, args.format or 'text')
    _log_run(cache, f"solve {scheme}", args.scenario, args.seed, True,
             {'served': result.served, 'energy_j': result.system_energy})
    return 0


def _cmd_oracle(args, config: Config) -> int:
    scenario = with_targets(open_scenario(args.scenario, args.seed), args.tau_max, args.loss_max)
    result = run_baseline(scenario, OPTIMUM, args.oracle_budget or int(config.oracle_budget))
    _print_result(result, args.format or 'text')
    return 0


def _cmd_sweep(args, config: Config, parser: argparse.ArgumentParser) -> int:
    if args.spec_file:
        spec = SweepSpec.from_file(args.spec_file)
    else:
        if args.tau_grid is None or args.loss_grid is None:
            parser.error("sweep needs --tau-grid and --loss-grid (or --spec-file)")
        spec = SweepSpec(
            scenario=args.scenario,
            tau_grid=tuple(args.tau_grid),
            loss_grid=tuple(args.loss_grid),
            schemes=tuple(normalize_scheme(s) for s in args.schemes.split(',')),
            iterations=args.iterations or int(config.iterations),
            base_seed=args.seed,
            qaoa=config.qaoa_config(_qaoa_overrides(args)),
            oracle_budget=args.oracle_budget or int(config.oracle_budget),
            rnf_selector=args.rnf_selector,
            record_timing=args.record_timing,
        )

    fmt = args.format if args.format in ('csv', 'json') else 'csv'
    out = Path(args.out) if args.out else Path(f"results.{fmt}")
    cache = _open_cache(config)
    notifier = Notifier(config.ntfy_topic)

    print(f"🔬 Sweeping {spec.scenario}: {len(spec.tau_grid)}×{len(spec.loss_grid)} cells, "
          f"{spec.iterations} iterations, schemes {', '.join(spec.schemes)}")
    try:
        result = run_sweep(spec, cache)
    except QagError as e:
        notifier.send_error_notification(str(e), command='sweep')
        _log_run(cache, 'sweep', spec.scenario, spec.base_seed, False, {'error': str(e)})
        raise

    emit_results(result, out, fmt)
    savings = savings_summary(result)
    for line in savings:
        logger.info(f"QAG vs RNF {line}")
    print(f"💾 Wrote {len(result.rows)} rows to {out}")

    summary = {'scenario': spec.scenario, 'iterations': spec.iterations, 'rows': len(result.rows),
               'savings': savings, 'output': str(out)}
    _log_run(cache, 'sweep', spec.scenario, spec.base_seed, True, summary)
    notifier.send_sweep_notification(summary)
    return 0


def _cmd_fixtures(args, config: Config) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_scenario(fixture_small_example(), out / 'small.json')
    save_scenario(fixture_large_scenario(args.seed), out / 'large.json')
    print(f"📁 Wrote small.json and large.json to {out}")
    return 0


def _cmd_cache(args, config: Config) -> int:
    cache = CacheManager(config.cache_db_path or 'qag_cache.db')
    if args.cleanup is not None:
        deleted = cache.cleanup_old_data(args.cleanup)
        print(f"🧹 Cleaned up {deleted} old run records (older than {args.cleanup} days)")
        return 0

    stats = cache.get_stats()
    print("📊 QAG Cache Statistics:")
    print(f"   Cached QAOA problems: {stats['cached_problems']}")
    print(f"   Cache hits: {stats['cache_hits']}")
    print(f"   Total runs: {stats['total_runs']}")
    print(f"   Runs last 7 days: {stats['runs_last_7_days']}")
    return 0


def _qaoa_overrides(args) -> Dict[str, Optional[int]]:
    return {
        'layers': args.layers,
        'shots': args.shots,
        'max_iters': args.qaoa_iters,
        'qubit_budget': args.qubit_budget,
    }


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help='Base random seed')
    common.add_argument('--layers', type=int, help='QAOA layers p (env QAG_LAYERS)')
    common.add_argument('--shots', type=int, help='Measurement shots (env QAG_SHOTS)')
    common.add_argument('--qaoa-iters', type=int, help='Optimizer iterations (env QAG_QAOA_ITERS)')
    common.add_argument('--qubit-budget', type=int,
                        help='Largest graph simulated as a circuit, default 12 (env QAG_QUBIT_BUDGET)')
    common.add_argument('--format', choices=['text', 'csv', 'json'], help='Output format')

    targets = argparse.ArgumentParser(add_help=False)
    targets.add_argument('--scenario', default='fixture:small',
                         help='Scenario file, fixture:small or fixture:large[:SEED]')
    targets.add_argument('--tau-max', type=float, help='Uniform latency target in seconds')
    targets.add_argument('--loss-max', type=float, help='Uniform loss target in MAPE percent')
    targets.add_argument('--oracle-budget', type=int, help='Largest search space Opt will enumerate')

    parser = argparse.ArgumentParser(description='QAG - QAOA-based orchestration of GNN network-modeling applications')
    sub = parser.add_subparsers(dest='command', required=True)

    p_solve = sub.add_parser('solve', parents=[common, targets], help='Solve one scenario with one scheme')
    p_solve.add_argument('--scheme', default='qag', help='qag, opt or rnf')
    p_solve.add_argument('--rnf-selector', type=_parse_selector, default='inference',
                         help='inference, full-training or app=config,...')

    p_sweep = sub.add_parser('sweep', parents=[common], help='Run a latency/loss target sweep')
    p_sweep.add_argument('--scenario', default='fixture:small')
    p_sweep.add_argument('--tau-grid', type=_parse_grid, help='Comma-separated tau_max values (s)')
    p_sweep.add_argument('--loss-grid', type=_parse_grid, help='Comma-separated loss_max values (%%)')
    p_sweep.add_argument('--schemes', default='qag,opt,rnf', help='Comma-separated subset of qag,opt,rnf')
    p_sweep.add_argument('--iterations', type=int, help='Instances per cell (env QAG_ITERATIONS)')
    p_sweep.add_argument('--oracle-budget', type=int)
    p_sweep.add_argument('--rnf-selector', type=_parse_selector, default='inference')
    p_sweep.add_argument('--spec-file', help='JSON sweep description; replaces the grid flags')
    p_sweep.add_argument('--out', help='Results file (default results.csv / results.json)')
    p_sweep.add_argument('--record-timing', action='store_true',
                         help='Fill wall_time_s (results then differ between runs)')

    sub.add_parser('oracle', parents=[common, targets], help='Exhaustive optimum only')

    p_fixtures = sub.add_parser('fixtures', parents=[common], help='Write the worked fixtures to disk')
    p_fixtures.add_argument('--out', required=True, help='Output directory')

    p_cache = sub.add_parser('cache', parents=[common], help='Inspect or clean the parameter cache')
    group = p_cache.add_mutually_exclusive_group()
    group.add_argument('--stats', action='store_true', help='Show statistics and exit')
    group.add_argument('--cleanup', type=int, metavar='DAYS', help='Clean up run history older than DAYS')

    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    config = Config()
    try:
        config.validate()
    except ValueError as e:
        print(f"❌ Configuration error: {e}")
        return 1
    configure_logging(config)

    commands = {
        'solve': lambda: _cmd_solve(args, config),
        'oracle': lambda: _cmd_oracle(args, config),
        'sweep': lambda: _cmd_sweep(args, config, parser),
        'fixtures': lambda: _cmd_fixtures(args, config),
        'cache': lambda: _cmd_cache(args, config),
    }
    try:
        return commands[args.command]()
    except SystemExit as e:
        return int(e.code or 0)
    except (QagError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"❌ {e}")
        return 1


def main():
    """Main entry point"""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
