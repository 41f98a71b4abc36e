"""
SQLite cache for optimized QAOA parameters and run history
"""

import hashlib
import json
import logging
import sqlite3
from datetime import datetime, timedelta
from pathlib import Path
from typing import Dict, List, Optional

from .qaoa_engine import CutProblem, OptimizedParams, QaoaConfig, QaoaParams

logger = logging.getLogger(__name__)


def problem_signature(problem: CutProblem, config: QaoaConfig) -> str:
    """Key for everything the optimizer's result depends on"""
    payload = json.dumps({
        'n': problem.n,
        'edges': sorted(list(e) for e in problem.cost_edges),
        'layers': config.layers,
        'init': [config.init_gamma, config.init_beta],
        'max_iters': config.max_iters,
        'step': config.initial_step,
        'stop': [config.tolerance, config.patience],
    }, sort_keys=True)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


class CacheManager:
    """Manages SQLite cache for QAOA parameters and run history"""

    def __init__(self, db_path: str = 'qag_cache.db'):
        self.db_path = Path(db_path)
        self._init_database()

    def _init_database(self):
        """Initialize the SQLite database with required tables"""
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()

            # Optimized angles per cut problem
            cursor.execute('''
                CREATE TABLE IF NOT EXISTS qaoa_params (
                    signature TEXT PRIMARY KEY,
                    gammas TEXT NOT NULL,   -- JSON list
                    betas TEXT NOT NULL,    -- JSON list
                    objective REAL NOT NULL,
                    trace TEXT NOT NULL,    -- JSON list, best-so-far per iteration
                    evaluations INTEGER NOT NULL,
                    hits INTEGER DEFAULT 0,
                    created_at DATETIME DEFAULT CURRENT_TIMESTAMP
                )
            ''')

            # CLI runs
            cursor.execute('''
                CREATE TABLE IF NOT EXISTS run_history (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    command TEXT NOT NULL,
                    scenario TEXT,
                    seed INTEGER,
                    success BOOLEAN DEFAULT TRUE,
                    summary TEXT,   -- JSON
                    created_at DATETIME DEFAULT CURRENT_TIMESTAMP
                )
            ''')

            cursor.execute('''
                CREATE INDEX IF NOT EXISTS idx_run_created_at ON run_history (created_at)
            ''')

            conn.commit()

    def get_params(self, signature: str) -> Optional[OptimizedParams]:
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()
            cursor.execute('''
                SELECT gammas, betas, objective, trace, evaluations
                FROM qaoa_params WHERE signature = ?
            ''', (signature,))
            row = cursor.fetchone()
            if row is None:
                return None
            cursor.execute('UPDATE qaoa_params SET hits = hits + 1 WHERE signature = ?', (signature,))
            conn.commit()

        gammas, betas, objective, trace, evaluations = row
        return OptimizedParams(
            QaoaParams(tuple(json.loads(gammas)), tuple(json.loads(betas))),
            objective,
            tuple(json.loads(trace)),
            evaluations,
        )

    def store_params(self, signature: str, optimized: OptimizedParams) -> None:
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()
            cursor.execute('''
                INSERT OR REPLACE INTO qaoa_params
                (signature, gammas, betas, objective, trace, evaluations, created_at)
                VALUES (?, ?, ?, ?, ?, ?, ?)
            ''', (
                signature,
                json.dumps(list(optimized.params.gammas)),
                json.dumps(list(optimized.params.betas)),
                optimized.value,
                json.dumps(list(optimized.trace)),
                optimized.evaluations,
                datetime.now(),
            ))
            conn.commit()

    def log_run(self, command: str, scenario: str, seed: int,
                success: bool = True, summary: Optional[Dict] = None) -> None:
        """Log a CLI run to the database"""
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()
            cursor.execute('''
                INSERT INTO run_history (command, scenario, seed, success, summary, created_at)
                VALUES (?, ?, ?, ?, ?, ?)
            ''', (command, scenario, seed, success, json.dumps(summary or {}), datetime.now()))
            conn.commit()

    def get_recent_runs(self, limit: int = 5) -> List[Dict]:
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()
            cursor.execute('''
                SELECT command, scenario, seed, success, created_at
                FROM run_history ORDER BY id DESC LIMIT ?
            ''', (limit,))
            return [
                {'command': row[0], 'scenario': row[1], 'seed': row[2],
                 'success': bool(row[3]), 'created_at': row[4]}
                for row in cursor.fetchall()
            ]

    def get_stats(self) -> Dict:
        """Get cache statistics"""
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()

            cursor.execute('SELECT COUNT(*), COALESCE(SUM(hits), 0) FROM qaoa_params')
            cached_problems, cache_hits = cursor.fetchone()

            cursor.execute('SELECT COUNT(*) FROM run_history')
            total_runs = cursor.fetchone()[0]

            # Recent activity (last 7 days)
            week_ago = datetime.now() - timedelta(days=7)
            cursor.execute('SELECT COUNT(*) FROM run_history WHERE created_at >= ?', (week_ago,))
            recent_runs = cursor.fetchone()[0]

            return {
                'cached_problems': cached_problems,
                'cache_hits': cache_hits,
                'total_runs': total_runs,
                'runs_last_7_days': recent_runs,
            }

    def cleanup_old_data(self, days_to_keep: int = 365) -> int:
        """Clean up old run history (cached parameters stay valid forever)"""
        cutoff_date = datetime.now() - timedelta(days=days_to_keep)

        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()
            cursor.execute('DELETE FROM run_history WHERE created_at < ?', (cutoff_date,))
            deleted = cursor.rowcount
            conn.commit()

            return deleted
