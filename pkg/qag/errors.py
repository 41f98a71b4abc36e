"""
Exception hierarchy for qag
"""


class QagError(Exception):
    """Base class for every error raised by qag"""


class ScenarioValidationError(QagError, ValueError):
    """A scenario violates one of its invariants"""


class SchemaVersionError(ScenarioValidationError):
    """Scenario file declares a schema_version we cannot read"""


class ScenarioParseError(QagError, ValueError):
    """Scenario file is not well-formed"""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})" if line else message)
        self.line = line
        self.column = column


class GraphError(QagError, ValueError):
    """Invalid operation on a tripartite graph"""


class CostModelError(QagError, ValueError):
    """Invalid input to the latency/energy model"""


class QubitBudgetError(QagError):
    """Circuit is wider than the statevector simulator allows"""

    def __init__(self, n: int, budget: int):
        super().__init__(
            f"{n} qubits exceeds the qubit budget of {budget}; "
            f"use classical_maxcut for graphs this large"
        )
        self.n = n
        self.budget = budget


class PartitionError(QagError):
    """No bitstring satisfies the sub-graph constraints"""


class OracleBudgetError(QagError):
    """Exhaustive search space is larger than the configured budget"""
