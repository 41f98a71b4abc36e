import json
import math

import pytest

from qag.errors import OracleBudgetError
from qag.scenario_io import fixture_large_scenario
from qag.qaoa_engine import QaoaConfig
from qag.sweep import (
    RESULT_COLUMNS,
    SweepResult,
    SweepRow,
    SweepSpec,
    confidence_half_width,
    draw_instance,
    emit_results,
    instance_seed,
    load_results,
    run_sweep,
    savings_summary,
    solver_seed,
)

FAST = QaoaConfig(max_iters=20, qubit_budget=12)


def small_spec(**overrides):
    settings = dict(scenario='fixture:small', tau_grid=(5.0,), loss_grid=(10.0, 20.0, 30.0, 40.0),
                    iterations=3, base_seed=1, qaoa=FAST)
    settings.update(overrides)
    return SweepSpec(**settings)


def test_row_count_and_order():
    result = run_sweep(small_spec())
    assert len(result.rows) == 4 * 3
    assert [r.scheme for r in result.rows[:3]] == ['QAG', 'Opt', 'RNF']
    assert [r.loss_max for r in result.rows[::3]] == [10.0, 20.0, 30.0, 40.0]
    for row in result.rows:
        assert 0.0 <= row.churn_rate <= 1.0
        assert row.wall_time_s == 0.0


def test_repeated_sweeps_write_identical_files(tmp_path):
    first = emit_results(run_sweep(small_spec(iterations=2)), tmp_path / 'a.csv')
    second = emit_results(run_sweep(small_spec(iterations=2)), tmp_path / 'b.csv')
    assert first.read_bytes() == second.read_bytes()


def test_opt_churn_never_exceeds_qag_or_rnf():
    result = run_sweep(small_spec())
    for row in result.rows:
        if row.scheme == 'Opt':
            continue
        opt = result.cell('Opt', row.tau_max, row.loss_max)
        assert opt.churn_rate <= row.churn_rate


def test_opt_churn_monotone_in_targets():
    by_tau = run_sweep(small_spec(tau_grid=(1.0, 2.0, 5.0, 10.0), loss_grid=(20.0,), schemes=('Opt',)))
    churn = [r.churn_rate for r in by_tau.rows]
    assert churn == sorted(churn, reverse=True)

    by_loss = run_sweep(small_spec(schemes=('Opt',)))
    churn = [r.churn_rate for r in by_loss.rows]
    assert churn == sorted(churn, reverse=True)


def _non_increasing(values):
    return all(later <= earlier + 1e-9 for earlier, later in zip(values, values[1:]))


def test_qag_churn_and_energy_fall_as_targets_relax():
    by_tau = run_sweep(small_spec(tau_grid=(1.0, 2.0, 5.0, 10.0), loss_grid=(20.0,), schemes=('QAG',),
                                  iterations=10))
    assert _non_increasing([r.churn_rate for r in by_tau.rows])
    assert _non_increasing([r.mean_energy_j for r in by_tau.rows])

    by_loss = run_sweep(small_spec(schemes=('QAG', 'Opt'), iterations=10))
    for scheme in ('QAG', 'Opt'):
        rows = [r for r in by_loss.rows if r.scheme == scheme]
        assert _non_increasing([r.churn_rate for r in rows])
        assert _non_increasing([r.mean_energy_j for r in rows])


def test_churned_instances_carry_energy():
    # nothing meets a 10% loss target on the small fixture
    row = run_sweep(small_spec(loss_grid=(10.0,), schemes=('QAG',))).rows[0]
    assert row.churn_rate == 1.0
    assert row.mean_energy_j > 0.0


def test_qag_beats_rnf_on_the_large_fixture():
    spec = SweepSpec(scenario='fixture:large', tau_grid=(1.0, 5.0), loss_grid=(20.0, 40.0), iterations=2,
                     schemes=('QAG', 'RNF'), qaoa=QaoaConfig(max_iters=30), record_timing=True)
    result = run_sweep(spec)
    for row in result.rows:
        if row.scheme != 'QAG':
            continue
        rnf = result.cell('RNF', row.tau_max, row.loss_max)
        assert row.churn_rate <= rnf.churn_rate
        assert row.mean_energy_j <= rnf.mean_energy_j + 1e-9
        # 200 iterations per cell inside ten minutes
        assert row.wall_time_s < 3.0


def test_opt_over_budget_fails_before_work():
    spec = SweepSpec(scenario='fixture:large', tau_grid=(5.0,), loss_grid=(20.0,), iterations=1)
    with pytest.raises(OracleBudgetError):
        run_sweep(spec)


def test_large_sweep_without_opt_uses_classical_fallback():
    spec = SweepSpec(scenario='fixture:large', tau_grid=(5.0,), loss_grid=(20.0,), iterations=1,
                     schemes=('QAG', 'RNF'), qaoa=QaoaConfig(max_iters=10, qubit_budget=10))
    result = run_sweep(spec)
    assert len(result.rows) == 2
    assert len(savings_summary(result)) == 1


def test_spec_validation():
    with pytest.raises(ValueError):
        small_spec(iterations=0)
    with pytest.raises(ValueError):
        small_spec(loss_grid=())
    with pytest.raises(ValueError):
        small_spec(schemes=('QAG', 'Greedy'))


def test_spec_from_file(tmp_path):
    path = tmp_path / 'spec.json'
    path.write_text(json.dumps({
        'scenario': 'fixture:small',
        'tau_grid': [1, 5],
        'loss_grid': [20],
        'schemes': ['qag', 'rnf'],
        'iterations': 4,
        'qaoa': {'layers': 1, 'max_iters': 10},
    }))
    spec = SweepSpec.from_file(path)
    assert spec.tau_grid == (1.0, 5.0)
    assert spec.schemes == ('QAG', 'RNF')
    assert spec.qaoa.layers == 1
    assert spec.iterations == 4


def test_draw_instance(small_scenario):
    instance = draw_instance(small_scenario, 42)
    assert instance == draw_instance(small_scenario, 42)
    assert [c.config_id for c in instance.configurations] == ['sigma1', 'sigma2', 'sigma3', 'sigma4']
    assert [n.node_id for n in instance.nodes] == ['n1', 'n2']
    assert instance.applications == small_scenario.applications
    instance.validate()
    pool = {(p.cost, p.loss) for p in small_scenario.profiles.values()}
    assert {(p.cost, p.loss) for p in instance.profiles.values()} <= pool
    # the load-and-infer configuration always survives the draw
    assert instance.configurations[0] == small_scenario.configurations[0]
    for app in small_scenario.applications:
        assert instance.profiles[(app.app_id, 'sigma1')] == small_scenario.profiles[(app.app_id, 'sigma1')]


def test_draw_instance_keeps_every_load_and_infer_configuration():
    base = fixture_large_scenario(0)
    inference = [c for c in base.configurations if c.mode == 0]
    for seed in range(5):
        instance = draw_instance(base, seed)
        assert len(instance.configurations) == len(base.configurations)
        assert [c.mode for c in instance.configurations[:len(inference)]] == [0] * len(inference)


def test_seeds_are_distinct_streams():
    assert instance_seed(0, 1) == instance_seed(0, 1)
    assert instance_seed(0, 1) != instance_seed(0, 2)
    assert solver_seed(0, 0, 1) != solver_seed(0, 1, 1)


def test_confidence_half_width():
    assert confidence_half_width([3.0]) == 0.0
    assert confidence_half_width([1.0, 2.0, 3.0]) == pytest.approx(1.959964 / math.sqrt(3), rel=1e-6)


def test_single_iteration_has_no_interval():
    result = run_sweep(small_spec(iterations=1, schemes=('Opt', 'RNF')))
    assert all(row.ci95_j == 0.0 for row in result.rows)


def test_timing_is_recorded_on_request():
    result = run_sweep(small_spec(iterations=1, loss_grid=(40.0,), schemes=('RNF',), record_timing=True))
    assert result.rows[0].wall_time_s > 0.0


def test_emit_empty_result(tmp_path):
    path = emit_results(SweepResult(), tmp_path / 'empty.csv')
    assert path.read_text() == ','.join(RESULT_COLUMNS) + '\n'


def _rows():
    return SweepResult(tuple(
        SweepRow(scheme, 5.0, loss, 100.0 + loss, 1.5, 0.25, 0.0)
        for scheme, loss in (('QAG', 10.0), ('QAG', 20.0), ('RNF', 10.0), ('RNF', 20.0))
    ))


def test_emit_csv_round_trip(tmp_path):
    result = _rows()
    path = emit_results(result, tmp_path / 'rows.csv')
    assert len(path.read_text().splitlines()) == 5
    assert load_results(path) == result


def test_emit_json_round_trip(tmp_path):
    result = _rows()
    path = emit_results(result, tmp_path / 'rows.json', fmt='json')
    assert json.loads(path.read_text())['columns'] == list(RESULT_COLUMNS)
    assert load_results(path) == result


def test_emit_is_idempotent(tmp_path):
    path = tmp_path / 'rows.csv'
    emit_results(_rows(), path)
    first = path.read_bytes()
    emit_results(_rows(), path)
    assert path.read_bytes() == first


def test_emit_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit_results(_rows(), tmp_path / 'rows.xml', fmt='xml')


def test_emit_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit_results(_rows(), tmp_path / 'missing' / 'rows.csv')


def test_savings_summary():
    lines = savings_summary(_rows())
    assert len(lines) == 2
    assert lines[0].startswith('tau=5s loss=10%: 0.0% energy saved')
