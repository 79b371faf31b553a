"""Time-window task scheduling with variance balancing, plus a comparison harness."""

from .balancing import Assignment, balance_allocate, brute_force_oracle, variance
from .baselines import Policy, assign_fifo, assign_greedy, assign_random
from .errors import (
    ConfigurationError,
    ConsistencyError,
    IncompatibleSystemError,
    OracleCapacityError,
    SchedulingError,
    SystemUnsuitableError,
)
from .grid import Grid, GridSlot, build_grid, mask
from .scheduler import ScheduleState, allocate_task, finishing_times, time_frame
from .simulator import (
    ExperimentConfig,
    FixedArrivals,
    MetricsRecord,
    PoissonArrivals,
    run_experiment,
    run_replication,
    sample_poisson,
    sample_task_batch,
)
from .task_graph import ExecutionProfile, Task, TaskGraph, parse_tasks
from .time_windows import OrientedRelation, RelationKind, TimeWindow, classify, relation_partition

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "balance_allocate",
    "brute_force_oracle",
    "variance",
    "Policy",
    "assign_fifo",
    "assign_greedy",
    "assign_random",
    "ConfigurationError",
    "ConsistencyError",
    "IncompatibleSystemError",
    "OracleCapacityError",
    "SchedulingError",
    "SystemUnsuitableError",
    "Grid",
    "GridSlot",
    "build_grid",
    "mask",
    "ScheduleState",
    "allocate_task",
    "finishing_times",
    "time_frame",
    "ExperimentConfig",
    "FixedArrivals",
    "MetricsRecord",
    "PoissonArrivals",
    "run_experiment",
    "run_replication",
    "sample_poisson",
    "sample_task_batch",
    "ExecutionProfile",
    "Task",
    "TaskGraph",
    "parse_tasks",
    "OrientedRelation",
    "RelationKind",
    "TimeWindow",
    "classify",
    "relation_partition",
]
