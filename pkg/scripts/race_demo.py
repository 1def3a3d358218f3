#!/usr/bin/env python3
"""Shared-store race walkthrough.

Runs the race fixture under three semantics and prints the logged output
of the differentiating runnable plus the divergence report:

* zero-time (idealized): the value grows steadily;
* timed: the low-priority reader gets deferred past the writer's next
  period and reads a freshly overwritten store, flattening the output;
* timed after the fine-grain split: preemption moves to block boundaries
  and the zero-time values come back.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from schedflow import fixtures  # noqa: E402
from schedflow.executor import timed_run, zero_time_run  # noqa: E402
from schedflow.report import diff_signals, gantt  # noqa: E402
from schedflow.transform import split_model  # noqa: E402


def main() -> None:
    race = fixtures.model_race()
    _, zero = zero_time_run(race)
    timed_trace, timed = timed_run(race)
    split = split_model(race)
    _, split_timed = timed_run(split)

    print("R3.out zero-time:  ", zero["R3.out"].values())
    print("R3.out timed:      ", timed["R3.out"].values())
    print("R3.out split+timed:", split_timed["R3.out"].values())
    print()
    for label, other in (("timed", timed), ("split+timed", split_timed)):
        hit = diff_signals(zero, other, ["R3.out"])["R3.out"]
        print(f"zero-time vs {label}: " + ("identical" if hit is None else hit.line()))
    print()
    print(gantt(timed_trace, mode="runnable", tick=1000))


if __name__ == "__main__":
    main()
