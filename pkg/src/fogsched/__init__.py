"""Trace-driven fog scheduling co-simulator with gradient-on-input schedulers."""

from fogsched.model import (
    Decision,
    Host,
    QoSRecord,
    TaskSpec,
    TaskState,
    UtilizationSample,
    advance_sets,
    feasible_subset,
)
from fogsched.simulator import SimState, lookahead, migration_time, step

__all__ = [
    "Decision",
    "Host",
    "QoSRecord",
    "SimState",
    "TaskSpec",
    "TaskState",
    "UtilizationSample",
    "advance_sets",
    "feasible_subset",
    "lookahead",
    "migration_time",
    "step",
]

__version__ = "0.1.0"
