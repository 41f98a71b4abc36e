import json

import pytest

from qag.main import build_parser, cli_main
from qag.scenario_io import fixture_small_example, load_scenario
from qag.sweep import RESULT_COLUMNS


@pytest.fixture(autouse=True)
def _env(quiet_env):
    return quiet_env


def test_solve_small_fixture(capsys):
    assert cli_main(['solve', '--qubit-budget', '1']) == 0
    out = capsys.readouterr().out
    assert 'QAG: served 2/2 applications, system energy 232.500 J' in out
    assert '(sigma2, n1)' in out
    assert '(sigma4, n2)' in out


def test_solve_json_output(capsys):
    assert cli_main(['solve', '--qubit-budget', '1', '--format', 'json']) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload['scheme'] == 'QAG'
    assert payload['system_energy_j'] == pytest.approx(232.5)
    assert [row['app_id'] for row in payload['rows']] == ['h1', 'h2']


def test_solve_rnf_with_targets(capsys):
    assert cli_main(['solve', '--scheme', 'rnf', '--loss-max', '20', '--rnf-selector', 'h1=sigma1,h2=sigma1']) == 0
    out = capsys.readouterr().out
    assert 'RNF: served 1/2' in out
    assert 'churned' in out


def test_oracle(capsys):
    assert cli_main(['oracle']) == 0
    out = capsys.readouterr().out
    assert 'Opt: served 2/2 applications' in out


def test_oracle_over_budget(capsys):
    assert cli_main(['oracle', '--scenario', 'fixture:large']) == 1
    assert '❌' in capsys.readouterr().out


def test_bad_scenario_path(tmp_path, capsys):
    assert cli_main(['solve', '--scenario', str(tmp_path / 'nowhere.json')]) == 1


def test_unknown_subcommand():
    assert cli_main(['train']) == 2


def test_sweep_requires_grids():
    assert cli_main(['sweep']) == 2


def test_sweep_writes_identical_files(tmp_path):
    args = ['sweep', '--tau-grid', '5', '--loss-grid', '20,40', '--iterations', '2', '--qaoa-iters', '10']
    first, second = tmp_path / 'first.csv', tmp_path / 'second.csv'
    assert cli_main(args + ['--out', str(first)]) == 0
    assert cli_main(args + ['--out', str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert lines[0] == ','.join(RESULT_COLUMNS)
    assert len(lines) == 1 + 2 * 3


def test_sweep_json_from_spec_file(tmp_path):
    spec = tmp_path / 'sweep.json'
    spec.write_text(json.dumps({
        'scenario': 'fixture:small',
        'tau_grid': [5],
        'loss_grid': [30],
        'schemes': ['rnf', 'opt'],
        'iterations': 3,
    }))
    out = tmp_path / 'rows.json'
    assert cli_main(['sweep', '--spec-file', str(spec), '--format', 'json', '--out', str(out)]) == 0
    rows = json.loads(out.read_text())['rows']
    assert [row['scheme'] for row in rows] == ['RNF', 'Opt']


def test_sweep_refuses_opt_on_large(tmp_path):
    out = tmp_path / 'rows.csv'
    args = ['sweep', '--scenario', 'fixture:large', '--tau-grid', '5', '--loss-grid', '20', '--out', str(out)]
    assert cli_main(args) == 1
    assert not out.exists()


def test_fixtures_command(tmp_path):
    out = tmp_path / 'fixtures'
    assert cli_main(['fixtures', '--out', str(out)]) == 0
    assert load_scenario(out / 'small.json') == fixture_small_example()
    assert len(load_scenario(out / 'large.json').applications) == 7


def test_cache_stats_after_runs(capsys):
    assert cli_main(['solve']) == 0
    assert cli_main(['cache', '--stats']) == 0
    out = capsys.readouterr().out
    assert 'Cached QAOA problems: 1' in out
    assert 'Total runs: 1' in out


def test_cache_cleanup(capsys):
    assert cli_main(['cache', '--cleanup', '30']) == 0
    assert 'Cleaned up 0 old run records' in capsys.readouterr().out


def test_invalid_environment(monkeypatch, capsys):
    monkeypatch.setenv('QAG_SHOTS', 'many')
    assert cli_main(['solve']) == 1
    assert 'QAG_SHOTS' in capsys.readouterr().out


def test_parser_defaults():
    args = build_parser().parse_args(['sweep', '--tau-grid', '1,5', '--loss-grid', '20'])
    assert args.tau_grid == [1.0, 5.0]
    assert args.schemes == 'qag,opt,rnf'
    assert args.rnf_selector == 'inference'
