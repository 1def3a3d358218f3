#!/usr/bin/env python3
"""Overloaded three-servo control demo.

Three PID loops on one processor at utilization 1.23: the two
higher-priority loops hold their deadlines and track the reference, the
lowest-priority loop starves under runnable-atomic deferral, misses every
deadline, and leaves its plant uncontrolled.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from schedflow import fixtures  # noqa: E402
from schedflow.engine import simulate  # noqa: E402
from schedflow.executor import DataflowExecutor  # noqa: E402
from schedflow.model import utilization  # noqa: E402
from schedflow.plants import mean_abs_tracking_error  # noqa: E402
from schedflow.report import deadline_report  # noqa: E402

HORIZON_US = 90_000


def main() -> None:
    servo = fixtures.model_servo()
    print(f"utilization: {utilization(servo):.4f}")
    ex = DataflowExecutor(servo)
    trace = simulate(servo, HORIZON_US, executor=ex)
    for report in deadline_report(trace).values():
        print(report.line())
    print()
    for task, plant_id in (("T1", "servo1"), ("T2", "servo2"), ("T3", "servo3")):
        err = mean_abs_tracking_error(ex.plants[plant_id], HORIZON_US)
        print(f"{task} ({plant_id}) mean |reference - position| = {err:.4f}")


if __name__ == "__main__":
    main()
