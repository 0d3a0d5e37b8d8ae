"""Sharded-blockchain economy simulator with exact committee security math."""

from .config import ConfigError, SimConfig, load_config, parse_config
from .ledger import Ledger, LedgerError
from .policy import split_rewards, update_price
from .security import ShardConfig, hypergeom_tail, jury_failure, jury_failure_approx, max_shards
from .simulator import COLUMNS, IntervalRecord, Simulation, run

__version__ = "0.1.0"

__all__ = [
    "COLUMNS", "ConfigError", "IntervalRecord", "Ledger", "LedgerError", "ShardConfig",
    "SimConfig", "Simulation", "hypergeom_tail", "jury_failure", "jury_failure_approx",
    "load_config", "max_shards", "parse_config", "run", "split_rewards", "update_price",
]
