import itertools

import networkx as nx
import numpy as np
import pytest

from qag.errors import PartitionError, QubitBudgetError
from qag.graph_model import VertexClass
from qag.qaoa_engine import (
    CutProblem,
    QaoaConfig,
    QaoaParams,
    best_valid_state,
    classical_maxcut,
    cut_value,
    distribution,
    expectation,
    is_valid_split,
    optimize_params,
    rank_valid_states,
    run_qaoa,
    sample,
    simulate,
)

EXAMPLE_SPLITS = {'01001101', '01001110'}

A, C, N = VertexClass.APPLICATION, VertexClass.CONFIGURATION, VertexClass.COMPUTE_NODE


def plain_problem(n, edges):
    return CutProblem(n, tuple(edges), (A,) * n)


def exact_maxcut(problem):
    return max(cut_value(''.join(bits), problem) for bits in itertools.product('01', repeat=problem.n))


@pytest.fixture
def example_problem(pruned_graph):
    return CutProblem.from_graph(pruned_graph)


def test_problem_from_pruned_example(example_problem):
    assert example_problem.n == 8
    assert len(example_problem.cost_edges) == 16
    assert example_problem.class_of_qubit == (A, A, C, C, C, C, N, N)


def test_problem_validation():
    with pytest.raises(ValueError):
        CutProblem(2, ((0, 0),), (A, A))
    with pytest.raises(ValueError):
        CutProblem(2, ((0, 2),), (A, A))
    with pytest.raises(ValueError):
        CutProblem(2, ((0, 1), (1, 0)), (A, A))


def test_cut_value(example_problem):
    assert cut_value('01001101', example_problem) == 12
    assert cut_value('00000000', example_problem) == 0
    with pytest.raises(ValueError):
        cut_value('0101', example_problem)


def test_validity_rules(example_problem):
    assert is_valid_split('01001101', example_problem)
    # h1 alone with configurations but no node
    assert not is_valid_split('01001111', example_problem)
    # both applications on one side
    assert not is_valid_split('00001101', example_problem)


def test_p0_state_is_uniform():
    problem = plain_problem(4, [(0, 1), (1, 2), (2, 3)])
    sv = simulate(problem, QaoaParams((), ()))
    np.testing.assert_allclose(sv.amplitudes, np.full(16, 0.25), atol=1e-12)


def test_p0_expectation_is_half_the_edges(example_problem):
    sv = simulate(example_problem, QaoaParams((), ()))
    assert expectation(sv, example_problem) == pytest.approx(-8.0, abs=1e-9)


def test_norm_preserved_across_layers(example_problem):
    rng = np.random.default_rng(3)
    for layers in (1, 2, 4):
        params = QaoaParams(tuple(rng.uniform(-3, 3, layers)), tuple(rng.uniform(-3, 3, layers)))
        assert simulate(example_problem, params).norm() == pytest.approx(1.0, abs=1e-10)


def test_qubit_budget_enforced(example_problem):
    with pytest.raises(QubitBudgetError) as info:
        simulate(example_problem, QaoaParams((0.1,), (0.2,)), qubit_budget=6)
    assert info.value.n == 8
    with pytest.raises(QubitBudgetError):
        optimize_params(example_problem, QaoaConfig(qubit_budget=6))


def test_single_edge_concentrates_on_cut_states():
    problem = plain_problem(2, [(0, 1)])
    optimized = optimize_params(problem, QaoaConfig())
    probs = distribution(simulate(problem, optimized.params))
    assert probs.get('01', 0) + probs.get('10', 0) >= 0.9


def test_trace_is_monotone_and_bounded(example_problem):
    optimized = optimize_params(example_problem, QaoaConfig())
    trace = np.array(optimized.trace)
    assert len(trace) <= 100
    assert np.all(np.diff(trace) <= 1e-12)
    assert trace[-1] == pytest.approx(optimized.value)
    # better than the uniform superposition
    assert optimized.value < -8.0


def _reached_final_at(trace, tolerance):
    return next(i for i, value in enumerate(trace, start=1) if value <= trace[-1] + tolerance)


def test_optimizer_settles_within_sixty_iterations(example_problem):
    config = QaoaConfig()
    problems = [example_problem]
    for seed in range(9):
        graph = nx.gnp_random_graph(5 + seed % 4, 0.5, seed=seed)
        if graph.number_of_edges():
            problems.append(plain_problem(graph.number_of_nodes(), sorted(graph.edges)))

    settled = 0
    for problem in problems:
        trace = optimize_params(problem, config).trace
        assert len(trace) <= config.max_iters
        settled += _reached_final_at(trace, config.tolerance) <= 60
    assert settled >= 0.5 * len(problems)


def test_plateau_stops_early(example_problem):
    # a coarse tolerance plateaus long before the iteration cap
    config = QaoaConfig(tolerance=0.5, patience=3)
    optimized = optimize_params(example_problem, config)
    assert len(optimized.trace) < config.max_iters
    with pytest.raises(ValueError):
        QaoaConfig(patience=0)


def test_simulation_matches_dense_operators():
    problem = plain_problem(3, [(0, 1), (1, 2), (0, 2)])
    gamma, beta = 0.7, -0.4
    cuts = np.array([cut_value(format(i, '03b'), problem) for i in range(8)])
    rx = np.array([[np.cos(beta), -1j * np.sin(beta)], [-1j * np.sin(beta), np.cos(beta)]])
    mixer = np.kron(np.kron(rx, rx), rx)
    expected = mixer @ (np.exp(-1j * gamma * cuts) / np.sqrt(8))

    sv = simulate(problem, QaoaParams((gamma,), (beta,)))
    assert np.allclose(sv.amplitudes, expected)


def test_simulation_keeps_unit_norm():
    graph = nx.gnp_random_graph(10, 0.4, seed=3)
    problem = plain_problem(10, sorted(graph.edges))
    sv = simulate(problem, QaoaParams((0.3, -1.2), (0.8, 2.1)))
    assert np.linalg.norm(sv.amplitudes) == pytest.approx(1.0)


def test_optimization_is_deterministic(example_problem):
    config = QaoaConfig(max_iters=30)
    assert optimize_params(example_problem, config) == optimize_params(example_problem, config)


def test_sampling_is_seeded(example_problem):
    sv = simulate(example_problem, QaoaParams((-1.0, -1.0), (-3.0, -3.0)))
    first = sample(sv, 100, seed=11)
    assert first == sample(sv, 100, seed=11)
    assert sum(first.counts.values()) == 100
    with pytest.raises(ValueError):
        sample(sv, 0)


def test_best_valid_state_folds_global_flip(example_problem):
    counts = {'10110010': 5, '01001101': 3, '01001110': 6}
    assert best_valid_state(counts, example_problem) == '01001101'


def test_best_valid_state_breaks_ties_by_cut_then_lexicographic(example_problem):
    # equal counts: the larger cut wins
    assert best_valid_state({'01000101': 4, '01001101': 4}, example_problem) == '01001101'
    # equal counts and cuts: lexicographic
    assert best_valid_state({'01001110': 4, '01001101': 4}, example_problem) == '01001101'


def test_rank_valid_states_orders_all_valid_splits(example_problem):
    counts = {'00000000': 50, '10110010': 5, '01001101': 3, '01001110': 6, '01000101': 6}
    # the flipped '10110010' folds onto '01001101'
    assert rank_valid_states(counts, example_problem) == ['01001101', '01001110', '01000101']
    assert rank_valid_states({'00000000': 9}, example_problem) == []


def test_best_valid_state_ignores_invalid_samples(example_problem):
    counts = {'00000000': 90, '01001110': 10}
    assert best_valid_state(counts, example_problem) == '01001110'


def test_best_valid_state_searches_when_no_sample_is_valid(example_problem):
    assert best_valid_state({'00000000': 100}, example_problem) in EXAMPLE_SPLITS


def test_no_valid_split_raises():
    # one application cannot be split from anything
    problem = CutProblem(3, ((0, 1), (1, 2)), (A, C, N))
    with pytest.raises(PartitionError):
        best_valid_state({'011': 1}, problem)


def test_classical_maxcut_exact_on_example(example_problem):
    bitstring = classical_maxcut(example_problem)
    assert bitstring == '01001101'
    assert cut_value(bitstring, example_problem) == 12


def test_classical_maxcut_local_search_beyond_exact_limit(example_problem):
    config = QaoaConfig(exact_limit=4)
    bitstring = classical_maxcut(example_problem, config, seed=5)
    assert is_valid_split(bitstring, example_problem)
    assert bitstring.startswith('0')
    assert classical_maxcut(example_problem, config, seed=5) == bitstring


def test_example_partition_reproduced(example_problem):
    config = QaoaConfig()
    optimized = optimize_params(example_problem, config)
    hits = sum(
        run_qaoa(example_problem, config, seed, optimized).bitstring in EXAMPLE_SPLITS
        for seed in range(20)
    )
    assert hits >= 18


def test_optimized_circuit_cuts_random_graphs():
    good = total = 0
    for seed in range(20):
        n = 4 + seed % 5
        graph = nx.gnp_random_graph(n, 0.5, seed=seed)
        if graph.number_of_edges() == 0:
            continue
        problem = plain_problem(n, sorted(graph.edges))
        optimized = optimize_params(problem, QaoaConfig(max_iters=60))
        counts = sample(simulate(problem, optimized.params), 100, seed=seed)
        best = max(cut_value(b, problem) for b in counts.counts)
        total += 1
        good += best >= 0.8 * exact_maxcut(problem)
    assert good >= 0.9 * total
