import sqlite3
from datetime import datetime, timedelta

import pytest

from qag.cache_manager import CacheManager, problem_signature
from qag.qaoa_engine import CutProblem, OptimizedParams, QaoaConfig, QaoaParams


@pytest.fixture
def cache(tmp_path):
    return CacheManager(str(tmp_path / 'cache.db'))


def _optimized():
    return OptimizedParams(QaoaParams((-0.9, -1.1), (-2.8, -3.0)), -4.25, (-3.0, -4.0, -4.25), 17)


def test_params_round_trip(cache):
    assert cache.get_params('missing') is None
    cache.store_params('abc', _optimized())
    assert cache.get_params('abc') == _optimized()


def test_hits_are_counted(cache):
    cache.store_params('abc', _optimized())
    cache.get_params('abc')
    cache.get_params('abc')
    cache.get_params('other')
    stats = cache.get_stats()
    assert stats['cached_problems'] == 1
    assert stats['cache_hits'] == 2


def test_store_replaces(cache):
    cache.store_params('abc', _optimized())
    newer = OptimizedParams(QaoaParams((0.1,), (0.2,)), -1.0, (-1.0,), 3)
    cache.store_params('abc', newer)
    assert cache.get_params('abc') == newer
    assert cache.get_stats()['cached_problems'] == 1


def test_run_history(cache):
    cache.log_run('solve QAG', 'fixture:small', 0, True, {'served': 2})
    cache.log_run('sweep', 'fixture:large', 3, False, {'error': 'budget'})
    runs = cache.get_recent_runs()
    assert [r['command'] for r in runs] == ['sweep', 'solve QAG']
    assert runs[0]['success'] is False
    stats = cache.get_stats()
    assert stats['total_runs'] == 2
    assert stats['runs_last_7_days'] == 2


def test_cleanup_removes_only_old_runs(cache):
    cache.log_run('solve QAG', 'fixture:small', 0)
    with sqlite3.connect(cache.db_path) as conn:
        conn.execute(
            'INSERT INTO run_history (command, scenario, seed, created_at) VALUES (?, ?, ?, ?)',
            ('sweep', 'fixture:small', 0, datetime.now() - timedelta(days=400)),
        )
    cache.store_params('abc', _optimized())

    assert cache.cleanup_old_data(365) == 1
    stats = cache.get_stats()
    assert stats['total_runs'] == 1
    assert stats['cached_problems'] == 1


def test_signature_tracks_problem_and_optimizer(pruned_graph):
    problem = CutProblem.from_graph(pruned_graph)
    config = QaoaConfig()
    assert problem_signature(problem, config) == problem_signature(CutProblem.from_graph(pruned_graph), config)
    assert problem_signature(problem, config) != problem_signature(problem, QaoaConfig(layers=1))
    assert problem_signature(problem, config) != problem_signature(problem, QaoaConfig(max_iters=10))
    # shots and the qubit budget do not affect the optimized angles
    assert problem_signature(problem, config) == problem_signature(problem, QaoaConfig(shots=7, qubit_budget=9))
