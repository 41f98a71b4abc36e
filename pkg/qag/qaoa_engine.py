"""
QAOA max-cut engine: statevector simulation, classical parameter
optimization, shot sampling and constrained state selection.

Bitstrings list qubit 0 first (leftmost), so basis-state index b holds
qubit q in bit (n - 1 - q). A cut and its bitwise complement describe the same
partition; selection folds them onto the representative whose first qubit is 0.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .errors import PartitionError, QubitBudgetError
from .graph_model import TripartiteGraph, VertexClass, VertexId, complement

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QaoaConfig:
    layers: int = 2
    shots: int = 100
    max_iters: int = 100
    qubit_budget: int = 12
    init_gamma: float = -1.0
    init_beta: float = -3.0
    initial_step: float = 0.5
    exact_limit: int = 20
    restarts: int = 16
    tolerance: float = 1e-3
    patience: int = 10

    def __post_init__(self):
        if self.layers < 0:
            raise ValueError(f"layers must be >= 0, got {self.layers}")
        for name in ('shots', 'max_iters', 'qubit_budget', 'restarts', 'patience'):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")


@dataclass(frozen=True)
class CutProblem:
    n: int
    cost_edges: Tuple[Tuple[int, int], ...]
    class_of_qubit: Tuple[VertexClass, ...]
    vertices: Tuple[VertexId, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.class_of_qubit) != self.n:
            raise ValueError(f"class_of_qubit has {len(self.class_of_qubit)} entries for {self.n} qubits")
        seen = set()
        for u, v in self.cost_edges:
            if u == v:
                raise ValueError(f"Self-loop on qubit {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"Edge ({u}, {v}) out of range for {self.n} qubits")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"Duplicate edge {key}")
            seen.add(key)

    @classmethod
    def from_graph(cls, graph: TripartiteGraph) -> CutProblem:
        """Max-cut problem over the complement of a (pruned) tripartite graph"""
        comp = complement(graph)
        position = {v: i for i, v in enumerate(comp.vertices)}
        edges = tuple(sorted((position[u], position[v]) for u, v in comp.edges))
        return cls(len(comp.vertices), edges, tuple(v.vclass for v in comp.vertices), comp.vertices)

    def sides(self, bitstring: str) -> Tuple[List[VertexId], List[VertexId]]:
        zero = [v for v, bit in zip(self.vertices, bitstring) if bit == '0']
        one = [v for v, bit in zip(self.vertices, bitstring) if bit == '1']
        return zero, one


@dataclass(frozen=True)
class QaoaParams:
    gammas: Tuple[float, ...]
    betas: Tuple[float, ...]

    def __post_init__(self):
        if len(self.gammas) != len(self.betas):
            raise ValueError(f"{len(self.gammas)} gammas but {len(self.betas)} betas")

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def initial(cls, config: QaoaConfig) -> QaoaParams:
        # one (gamma0, beta0) pair replicated across layers
        return cls((config.init_gamma,) * config.layers, (config.init_beta,) * config.layers)

    def to_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas, dtype=float)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> QaoaParams:
        p = len(x) // 2
        return cls(tuple(float(g) for g in x[:p]), tuple(float(b) for b in x[p:]))


@dataclass(frozen=True, eq=False)
class Statevector:
    amplitudes: np.ndarray

    @property
    def n(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(self.probabilities().sum()))


@dataclass(frozen=True)
class ShotCounts:
    counts: Mapping[str, int]
    shots: int


@dataclass(frozen=True)
class OptimizedParams:
    params: QaoaParams
    value: float
    trace: Tuple[float, ...]
    evaluations: int


@dataclass(frozen=True)
class QaoaOutcome:
    bitstring: str
    optimized: OptimizedParams
    counts: ShotCounts


def _qubit_bits(n: int) -> List[np.ndarray]:
    index = np.arange(1 << n, dtype=np.int64)
    return [((index >> (n - 1 - q)) & 1).astype(np.uint8) for q in range(n)]


@lru_cache(maxsize=16)
def _cut_vector(problem: CutProblem) -> np.ndarray:
    """Cut size of every basis state"""
    bits = _qubit_bits(problem.n)
    cuts = np.zeros(1 << problem.n, dtype=np.int32)
    for u, v in problem.cost_edges:
        cuts += bits[u] ^ bits[v]
    return cuts


@lru_cache(maxsize=16)
def _valid_mask(problem: CutProblem) -> np.ndarray:
    """Basis states whose two sides satisfy the sub-graph constraints"""
    bits = _qubit_bits(problem.n)

    def ones(vclass: VertexClass) -> Tuple[np.ndarray, int]:
        qubits = [q for q, c in enumerate(problem.class_of_qubit) if c == vclass]
        total = np.zeros(1 << problem.n, dtype=np.int32)
        for q in qubits:
            total += bits[q]
        return total, len(qubits)

    apps1, n_apps = ones(VertexClass.APPLICATION)
    cfg1, n_cfg = ones(VertexClass.CONFIGURATION)
    node1, n_node = ones(VertexClass.COMPUTE_NODE)
    apps0, cfg0, node0 = n_apps - apps1, n_cfg - cfg1, n_node - node1

    mask = (apps1 >= 1) & (apps0 >= 1)
    mask &= (apps1 != 1) | ((cfg1 >= 1) & (node1 >= 1))
    mask &= (apps0 != 1) | ((cfg0 >= 1) & (node0 >= 1))
    return mask


def is_valid_split(bitstring: str, problem: CutProblem) -> bool:
    """Both sides hold an application; a single-application side also needs a configuration and a node"""
    for side in '01':
        classes = [c for c, bit in zip(problem.class_of_qubit, bitstring) if bit == side]
        apps = classes.count(VertexClass.APPLICATION)
        if apps == 0:
            return False
        if apps == 1 and (VertexClass.CONFIGURATION not in classes or VertexClass.COMPUTE_NODE not in classes):
            return False
    return True


def _canonical(bitstring: str) -> str:
    if bitstring.startswith('1'):
        return bitstring.translate(str.maketrans('01', '10'))
    return bitstring


def cut_value(bitstring: str, problem: CutProblem) -> int:
    if len(bitstring) != problem.n:
        raise ValueError(f"Bitstring of length {len(bitstring)} for a {problem.n}-qubit problem")
    return sum(1 for u, v in problem.cost_edges if bitstring[u] != bitstring[v])


def simulate(problem: CutProblem, params: QaoaParams, qubit_budget: int = QaoaConfig.qubit_budget) -> Statevector:
    """Hadamard wall, then p rounds of cost phase exp(-i gamma C) and mixer RX(2 beta) on every qubit"""
    n = problem.n
    if n > qubit_budget:
        raise QubitBudgetError(n, qubit_budget)

    dim = 1 << n
    state = np.full(dim, 1 / math.sqrt(dim), dtype=np.complex128)
    cuts = _cut_vector(problem)
    for gamma, beta in zip(params.gammas, params.betas):
        state *= np.exp(-1j * gamma * cuts)
        _apply_mixer(state, n, beta)
    return Statevector(state)


def _apply_mixer(state: np.ndarray, n: int, beta: float) -> None:
    """RX(2 beta) on every qubit, updating `state` in place"""
    c, s = math.cos(beta), -1j * math.sin(beta)
    for q in range(n):
        # view the amplitude pairs that differ only in qubit q
        pairs = state.reshape(1 << q, 2, 1 << (n - 1 - q))
        low, high = pairs[:, 0, :], pairs[:, 1, :]
        spare = low.copy()
        low *= c
        low += s * high
        high *= c
        high += s * spare


def expectation(statevector: Statevector, problem: CutProblem) -> float:
    """Expected value of the minimisation objective, i.e. minus the expected cut"""
    return -float(np.dot(statevector.probabilities(), _cut_vector(problem)))


def optimize_params(problem: CutProblem, config: QaoaConfig = QaoaConfig()) -> OptimizedParams:
    """Nelder-Mead over the 2p angles starting from the replicated (gamma0, beta0)"""
    if problem.n > config.qubit_budget:
        raise QubitBudgetError(problem.n, config.qubit_budget)

    initial = QaoaParams.initial(config)
    if initial.p == 0:
        value = expectation(simulate(problem, initial, config.qubit_budget), problem)
        return OptimizedParams(initial, value, (value,), 1)

    best = {'value': math.inf, 'x': initial.to_vector(), 'evaluations': 0}
    trace: List[float] = []

    def objective(x: np.ndarray) -> float:
        value = expectation(simulate(problem, QaoaParams.from_vector(x), config.qubit_budget), problem)
        best['evaluations'] += 1
        if value < best['value']:
            best['value'], best['x'] = value, np.array(x, copy=True)
        return value

    def callback(xk):
        trace.append(best['value'])
        # plateau: less than `tolerance` gained over the last `patience` iterations
        if len(trace) > config.patience and trace[-config.patience - 1] - trace[-1] < config.tolerance:
            raise StopIteration

    x0 = initial.to_vector()
    simplex = np.vstack([x0] + [x0 + config.initial_step * np.eye(len(x0))[i] for i in range(len(x0))])
    minimize(
        objective, x0,
        method='Nelder-Mead',
        callback=callback,
        options={'maxiter': config.max_iters, 'initial_simplex': simplex,
                 'xatol': config.tolerance, 'fatol': config.tolerance},
    )
    if not trace:
        trace.append(best['value'])

    logger.debug(f"QAOA optimizer: {best['evaluations']} evaluations, objective {best['value']:.6f}")
    return OptimizedParams(QaoaParams.from_vector(best['x']), best['value'], tuple(trace), best['evaluations'])


def sample(statevector: Statevector, shots: int = 100, seed: Optional[int] = None) -> ShotCounts:
    if shots <= 0:
        raise ValueError(f"shots must be positive, got {shots}")
    rng = np.random.default_rng(seed)
    probabilities = statevector.probabilities()
    draws = rng.multinomial(shots, probabilities / probabilities.sum())
    n = statevector.n
    counts = {format(int(i), f'0{n}b'): int(draws[i]) for i in np.flatnonzero(draws)}
    return ShotCounts(counts, shots)


def distribution(statevector: Statevector) -> dict:
    """Exact measurement distribution, zero-probability states omitted"""
    probabilities = statevector.probabilities()
    n = statevector.n
    return {format(int(i), f'0{n}b'): float(probabilities[i]) for i in np.flatnonzero(probabilities > 0)}


def rank_valid_states(counts: Mapping[str, float], problem: CutProblem) -> List[str]:
    """Constraint-satisfying partitions, most frequent first (ties: larger cut, then lexicographic)"""
    if isinstance(counts, ShotCounts):
        counts = counts.counts

    folded = defaultdict(float)
    for bitstring, count in counts.items():
        if len(bitstring) != problem.n:
            raise ValueError(f"Bitstring of length {len(bitstring)} for a {problem.n}-qubit problem")
        if count > 0 and is_valid_split(bitstring, problem):
            folded[_canonical(bitstring)] += count
    return sorted(folded, key=lambda b: (-folded[b], -cut_value(b, problem), b))


def best_valid_state(counts: Mapping[str, float], problem: CutProblem, exact_limit: int = 20) -> str:
    """Most frequent constraint-satisfying partition, or the best valid cut when no sample qualifies"""
    ranked = rank_valid_states(counts, problem)
    if ranked:
        return ranked[0]

    logger.info("No sampled state satisfies the sub-graph constraints, searching all states")
    if problem.n > exact_limit:
        raise PartitionError(f"No valid sampled state and {problem.n} qubits is too many to enumerate")
    return _best_valid_exhaustive(problem)


def _best_valid_exhaustive(problem: CutProblem) -> str:
    mask = _valid_mask(problem)
    if not mask.any():
        raise PartitionError(f"No bitstring over {problem.n} vertices satisfies the sub-graph constraints")
    cuts = _cut_vector(problem)
    best_cut = cuts[mask].max()
    # lowest index = lexicographically smallest, and its first qubit is 0
    index = int(np.flatnonzero(mask & (cuts == best_cut))[0])
    return format(index, f'0{problem.n}b')


def classical_maxcut(problem: CutProblem, config: QaoaConfig = QaoaConfig(), seed: int = 0) -> str:
    """Exact search up to `exact_limit` vertices, seeded single-flip local search beyond"""
    if problem.n <= config.exact_limit:
        return _best_valid_exhaustive(problem)

    n = problem.n
    adjacency = np.zeros((n, n), dtype=np.int32)
    for u, v in problem.cost_edges:
        adjacency[u, v] = adjacency[v, u] = 1
    degree = adjacency.sum(axis=1)

    rng = np.random.default_rng(seed)
    best: Optional[Tuple[int, str]] = None
    for _ in range(config.restarts):
        x = rng.integers(0, 2, size=n)
        while True:
            same = (adjacency * (x[:, None] == x[None, :])).sum(axis=1)
            gain = 2 * same - degree
            i = int(np.argmax(gain))
            if gain[i] <= 0:
                break
            x[i] ^= 1
        bitstring = _canonical(''.join(str(int(bit)) for bit in x))
        if not is_valid_split(bitstring, problem):
            continue
        candidate = (-cut_value(bitstring, problem), bitstring)
        if best is None or candidate < best:
            best = candidate

    if best is None:
        raise PartitionError(f"Local search found no valid partition in {config.restarts} restarts")
    return best[1]


def run_qaoa(problem: CutProblem,
             config: QaoaConfig = QaoaConfig(),
             seed: Optional[int] = None,
             optimized: Optional[OptimizedParams] = None) -> QaoaOutcome:
    """Optimize (unless parameters are supplied), simulate, sample and pick the partition"""
    if optimized is None:
        optimized = optimize_params(problem, config)
    statevector = simulate(problem, optimized.params, config.qubit_budget)
    counts = sample(statevector, config.shots, seed)
    bitstring = best_valid_state(counts, problem, config.exact_limit)
    return QaoaOutcome(bitstring, optimized, counts)
