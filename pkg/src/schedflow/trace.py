"""Execution traces: timestamped scheduler events, segments, signal logs."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum

from .model import Model, TimeTick


class EventKind(Enum):
    RELEASE = "Release"
    START = "Start"
    PREEMPT = "Preempt"
    RESUME = "Resume"
    FINISH = "Finish"
    DEADLINE_MISS = "DeadlineMiss"
    IDLE_START = "IdleStart"
    IDLE_END = "IdleEnd"


@dataclass(frozen=True)
class TraceEvent:
    time: TimeTick
    kind: EventKind
    task: str | None = None
    runnable: str | None = None
    release_index: int | None = None


@dataclass(frozen=True)
class Segment:
    """One uninterrupted execution of a runnable on the processor."""

    task: str
    runnable: str
    release_index: int
    start: TimeTick
    end: TimeTick

    @property
    def length(self) -> TimeTick:
        return self.end - self.start


@dataclass(frozen=True)
class TaskInfo:
    """Task attributes a report needs without the full model."""

    id: str
    period: TimeTick
    offset: TimeTick
    priority: int
    decl_index: int
    runnables: tuple[str, ...]


@dataclass
class Trace:
    horizon: TimeTick
    tasks: tuple[TaskInfo, ...]
    events: list[TraceEvent] = field(default_factory=list)
    segments: list[Segment] = field(default_factory=list)

    def events_of_kind(self, kind: EventKind) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == kind]

    def segments_of(self, task: str | None = None, runnable: str | None = None) -> list[Segment]:
        out = self.segments
        if task is not None:
            out = [s for s in out if s.task == task]
        if runnable is not None:
            out = [s for s in out if s.runnable == runnable]
        return list(out)

    def execution_order(self) -> list[str]:
        """Runnable ids in segment start order, zero-length segments included."""
        return [s.runnable for s in self.segments]

    def idle_intervals(self) -> list[tuple[TimeTick, TimeTick]]:
        out: list[tuple[TimeTick, TimeTick]] = []
        open_at: TimeTick | None = None
        for e in self.events:
            if e.kind == EventKind.IDLE_START:
                open_at = e.time
            elif e.kind == EventKind.IDLE_END and open_at is not None:
                out.append((open_at, e.time))
                open_at = None
        if open_at is not None:
            out.append((open_at, self.horizon))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time_us,kind,task,runnable,release_index\n")
        for e in self.events:
            task = e.task or ""
            runnable = e.runnable or ""
            idx = "" if e.release_index is None else str(e.release_index)
            buf.write(f"{e.time},{e.kind.value},{task},{runnable},{idx}\n")
        return buf.getvalue()


def task_infos(model: Model) -> tuple[TaskInfo, ...]:
    return tuple(
        TaskInfo(
            id=t.id,
            period=t.period,
            offset=t.offset,
            priority=t.priority,
            decl_index=i,
            runnables=t.runnables,
        )
        for i, t in enumerate(model.tasks)
    )


@dataclass
class SignalLog:
    """Committed (time, value) samples of one signal, strictly time-ordered.

    A commit at an already-logged instant replaces the logged value: the
    log records the signal's value as of the end of each instant.
    """

    name: str
    samples: list[tuple[TimeTick, float]] = field(default_factory=list)

    def append(self, time: TimeTick, value: float) -> None:
        if self.samples and self.samples[-1][0] == time:
            self.samples[-1] = (time, value)
            return
        if self.samples and self.samples[-1][0] > time:
            raise ValueError(f"signal {self.name}: non-monotonic commit at {time}")
        self.samples.append((time, value))

    def times(self) -> list[TimeTick]:
        return [t for t, _ in self.samples]

    def values(self) -> list[float]:
        return [v for _, v in self.samples]

    def value_at(self, time: TimeTick) -> float | None:
        """Zero-order-hold value at ``time``; None before the first commit."""
        held: float | None = None
        for t, v in self.samples:
            if t > time:
                break
            held = v
        return held


SignalLogs = dict[str, SignalLog]


def signals_to_csv(logs: SignalLogs) -> str:
    rows: list[tuple[TimeTick, str, float]] = []
    for name, log in logs.items():
        rows.extend((t, name, v) for t, v in log.samples)
    rows.sort(key=lambda r: (r[0], r[1]))
    buf = io.StringIO()
    buf.write("time_us,signal,value\n")
    for t, name, v in rows:
        buf.write(f"{t},{name},{v!r}\n")
    return buf.getvalue()
