"""Deterministic fixed-priority scheduling simulator for block-dataflow runnables.

Simulates the same application under two semantics: an idealized zero
execution time reference and a timed fixed-priority schedule with
runnable-atomic dispatch, lookahead deferral, jitter, and soft deadlines.
Comparing the two exposes behavior that only appears once execution takes
time: deferred starts, deadline misses, and shared-store races.  A
fine-grain transformation splits runnables into per-block units to move
the preemption points.
"""

from .engine import NullExecutor, fits_before, release_times, simulate
from .executor import DataflowExecutor, eval_block, timed_run, zero_time_run
from .model import (
    Block,
    Connection,
    Diagnostic,
    Model,
    ModelError,
    PlantDecl,
    Runnable,
    SimConfig,
    Task,
    TimeTick,
    hyperperiod,
    load_model,
    model_from_dict,
    model_to_dict,
    parse_model,
    serialize_model,
    utilization,
    validate,
)
from .plants import PidParams, PidState, PlantSim, pid_eval, plant_step
from .report import deadline_report, diff_signals, gantt
from .sorting import AlgebraicLoopError, SortedOrder, feedthrough_edges, sorted_order
from .trace import EventKind, Segment, SignalLog, Trace, TraceEvent
from .transform import (
    ConnectivityRecord,
    exec_time_split,
    split_model,
    split_runnable,
)

__all__ = [
    "AlgebraicLoopError",
    "Block",
    "Connection",
    "ConnectivityRecord",
    "DataflowExecutor",
    "Diagnostic",
    "EventKind",
    "Model",
    "ModelError",
    "NullExecutor",
    "PidParams",
    "PidState",
    "PlantDecl",
    "PlantSim",
    "Runnable",
    "Segment",
    "SignalLog",
    "SimConfig",
    "SortedOrder",
    "Task",
    "TimeTick",
    "Trace",
    "TraceEvent",
    "deadline_report",
    "diff_signals",
    "eval_block",
    "exec_time_split",
    "feedthrough_edges",
    "fits_before",
    "gantt",
    "hyperperiod",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "parse_model",
    "pid_eval",
    "plant_step",
    "release_times",
    "serialize_model",
    "simulate",
    "sorted_order",
    "split_model",
    "split_runnable",
    "timed_run",
    "utilization",
    "validate",
    "zero_time_run",
]
