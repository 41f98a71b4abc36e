"""
Configuration management for qag
"""

import os
from dotenv import load_dotenv
from typing import Any, Dict, Optional

from .qaoa_engine import QaoaConfig

# Load environment variables
load_dotenv()


class Config:
    """Configuration class with environment variable handling"""

    def __init__(self):
        # QAOA parameters (defaults follow the parameter-settings table: p=2, 100 shots, 100 iterations)
        self.qubit_budget = os.getenv('QAG_QUBIT_BUDGET', '12')
        self.layers = os.getenv('QAG_LAYERS', '2')
        self.shots = os.getenv('QAG_SHOTS', '100')
        self.qaoa_iters = os.getenv('QAG_QAOA_ITERS', '100')

        # Experiment configuration
        self.seed = os.getenv('QAG_SEED', '0')
        self.iterations = os.getenv('QAG_ITERATIONS', '200')
        self.oracle_budget = os.getenv('QAG_ORACLE_BUDGET', '10000000')

        # Logging
        self.log_file = os.getenv('QAG_LOG_FILE', 'qag.log')
        self.log_level = os.getenv('QAG_LOG_LEVEL', 'INFO').upper()

        # Database
        self.cache_db_path = os.getenv('QAG_CACHE_DB', 'qag_cache.db')

        # Notifications
        self.ntfy_topic = os.getenv('NTFY_TOPIC')  # Optional - no notification if not set

    def validate(self) -> None:
        """Validate numeric settings, reporting every bad variable at once"""
        positive = {
            'QAG_QUBIT_BUDGET': self.qubit_budget,
            'QAG_SHOTS': self.shots,
            'QAG_QAOA_ITERS': self.qaoa_iters,
            'QAG_ITERATIONS': self.iterations,
            'QAG_ORACLE_BUDGET': self.oracle_budget,
        }
        non_negative = {
            'QAG_LAYERS': self.layers,
            'QAG_SEED': self.seed,
        }

        bad = []
        for var, value in positive.items():
            if not _is_int(value, minimum=1):
                bad.append(f"{var}={value!r}")
        for var, value in non_negative.items():
            if not _is_int(value, minimum=0):
                bad.append(f"{var}={value!r}")
        if self.log_level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            bad.append(f"QAG_LOG_LEVEL={self.log_level!r}")

        if bad:
            raise ValueError(f"Invalid environment variables: {', '.join(bad)}")

    def qaoa_config(self, overrides: Optional[Dict[str, Any]] = None) -> QaoaConfig:
        """Build the engine configuration; non-None overrides (CLI flags) win over the environment"""
        settings = {
            'layers': int(self.layers),
            'shots': int(self.shots),
            'max_iters': int(self.qaoa_iters),
            'qubit_budget': int(self.qubit_budget),
        }
        for key, value in (overrides or {}).items():
            if value is not None:
                settings[key] = value
        return QaoaConfig(**settings)


def _is_int(value: Optional[str], minimum: int) -> bool:
    try:
        return int(value) >= minimum
    except (TypeError, ValueError):
        return False
