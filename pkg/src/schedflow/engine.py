"""Timed fixed-priority scheduler over runnable-atomic tasks.

Jobs are released periodically (offset plus optional seeded jitter) and
queued by static priority, FIFO among equals.  The dispatch unit is the
runnable: once a runnable segment starts it runs to completion, so task
preemption happens only at runnable boundaries.

A runnable that cannot finish before the next release of a strictly
higher-priority task is deferred and the processor idles until that
release ("lookahead deferral"): starting it would push the higher-priority
work past its release, and interrupting it mid-flight is forbidden.
While a deferred job waits, no lower-priority job may slip in front of it;
the deferral window stays idle.

Deadlines are soft and implicit (release + period).  A miss is recorded
at the deadline instant and execution continues; later jobs of the same
task queue behind the overrunning one.

The engine is a single-threaded deterministic state machine.  It talks to
the dataflow executor through two synchronous hooks: ``sample`` at segment
start and ``commit`` at segment end.
"""

from __future__ import annotations

import bisect
import hashlib
import random
from dataclasses import dataclass, field
from typing import Any, Protocol

from .model import Model, Task, TimeTick
from .trace import EventKind, Segment, Trace, TraceEvent, task_infos


class Executor(Protocol):
    """Hook contract between scheduler and dataflow evaluation."""

    def sample(self, runnable_id: str, time: TimeTick) -> Any: ...

    def commit(self, runnable_id: str, token: Any, start: TimeTick, end: TimeTick) -> None: ...

    def finalize(self, horizon: TimeTick) -> None: ...


class NullExecutor:
    """Pure scheduling: segments have no dataflow effect."""

    def sample(self, runnable_id: str, time: TimeTick) -> None:
        return None

    def commit(self, runnable_id: str, token: None, start: TimeTick, end: TimeTick) -> None:
        return None

    def finalize(self, horizon: TimeTick) -> None:
        return None


def _jitter_draw(seed: int, task_id: str, index: int, bound: TimeTick) -> TimeTick:
    """Deterministic uniform draw from [0, bound], independent per (task, k)."""
    if bound == 0:
        return 0
    digest = hashlib.sha256(f"{seed}:{task_id}:{index}".encode()).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    return rng.randint(0, bound)


def release_times(task: Task, horizon: TimeTick, seed: int = 0) -> list[TimeTick]:
    """Release instants k*period + offset + jitter_k for k*period + offset < horizon."""
    out: list[TimeTick] = []
    k = 0
    while k * task.period + task.offset < horizon:
        out.append(k * task.period + task.offset + _jitter_draw(seed, task.id, k, task.jitter))
        k += 1
    return out


def _lookahead_times(task: Task, horizon: TimeTick, seed: int) -> list[TimeTick]:
    """Sorted release instants extended safely past the horizon.

    The fit check needs the earliest release after any instant inside the
    horizon; generating two extra period-plus-jitter spans guarantees that
    query never falls off the end, so deferral decisions near the horizon
    do not depend on where the horizon happens to sit.
    """
    return sorted(release_times(task, horizon + 2 * (task.period + task.jitter) + 1, seed))


def fits_before(now: TimeTick, remaining: TimeTick,
                next_higher_release: TimeTick | None) -> bool:
    """True when a segment [now, now+remaining) ends by the next release of
    strictly higher-priority work.  Finishing exactly at the release instant
    is allowed.  None means no such release is pending."""
    if next_higher_release is None:
        return True
    return now + remaining <= next_higher_release


@dataclass
class Job:
    """One released instance of a task."""

    task: Task
    decl_index: int
    index: int
    release: TimeTick
    deadline: TimeTick
    remaining: list[TimeTick]
    cursor: int = 0
    displaced: bool = False
    finish: TimeTick | None = None
    missed: bool = False

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.task.runnables)

    def next_runnable(self) -> str:
        return self.task.runnables[self.cursor]

    def sort_key(self) -> tuple[int, TimeTick, int, int]:
        return (-self.task.priority, self.release, self.decl_index, self.index)


@dataclass
class SchedulerState:
    """Queue and bookkeeping shared by the dispatch predicates."""

    model: Model
    horizon: TimeTick
    seed: int
    releases_sorted: dict[str, list[TimeTick]]
    ready: list[Job] = field(default_factory=list)
    completed: dict[str, int] = field(default_factory=dict)
    clock: TimeTick = 0

    def next_higher_release(self, priority: int, now: TimeTick) -> TimeTick | None:
        """Earliest release strictly after ``now`` of a strictly
        higher-priority task."""
        best: TimeTick | None = None
        for t in self.model.tasks:
            if t.priority <= priority:
                continue
            times = self.releases_sorted[t.id]
            i = bisect.bisect_right(times, now)
            if i < len(times) and (best is None or times[i] < best):
                best = times[i]
        return best


def eligible(job: Job, state: SchedulerState) -> bool:
    """Same-index predecessor gating plus in-order dispatch within a task.

    Instance k of a task may start only after instance k of every
    predecessor task completed, and after all earlier instances of its own
    task completed.
    """
    for pred in job.task.prect:
        if state.completed.get(pred, 0) < job.index + 1:
            return False
    for other in state.ready:
        if other.task.id == job.task.id and other.index < job.index and not other.done:
            return False
    return True


def dispatch(state: SchedulerState) -> Job | None:
    """Pick the job that may start a segment now, or None to idle.

    The ready queue is ordered by priority (descending), release time,
    then task declaration order.  Ineligible jobs are skipped; the first
    eligible job is the only candidate.  If its next runnable does not fit
    before the next strictly-higher-priority release the processor idles:
    deferral never lets lower-priority work overtake.
    """
    candidates = sorted((j for j in state.ready if not j.done), key=Job.sort_key)
    for job in candidates:
        if not eligible(job, state):
            continue
        rem = job.remaining[job.cursor]
        limit = state.next_higher_release(job.task.priority, state.clock)
        if fits_before(state.clock, rem, limit):
            return job
        return None
    return None


@dataclass
class _ReleasePlan:
    """All release instants in the horizon, in processing order."""

    entries: list[tuple[TimeTick, int, Task, int]]  # (time, decl, task, k)
    pos: int = 0

    def peek_time(self) -> TimeTick | None:
        if self.pos < len(self.entries):
            return self.entries[self.pos][0]
        return None

    def pop_at(self, time: TimeTick) -> list[tuple[TimeTick, int, Task, int]]:
        out = []
        while self.pos < len(self.entries) and self.entries[self.pos][0] == time:
            out.append(self.entries[self.pos])
            self.pos += 1
        return out


def simulate(
    model: Model,
    horizon: TimeTick | None = None,
    seed: int | None = None,
    executor: Executor | None = None,
) -> Trace:
    """Run the timed schedule over [0, horizon) and return the full trace.

    Decision instants are job releases and segment completions.  Segments
    started before the horizon run to completion even if they end past it.
    """
    horizon = model.horizon_or_default(horizon)
    seed = model.sim.seed if seed is None else seed
    executor = executor or NullExecutor()
    rmap = model.runnable_map()

    releases = {t.id: release_times(t, horizon, seed) for t in model.tasks}
    state = SchedulerState(
        model=model,
        horizon=horizon,
        seed=seed,
        releases_sorted={t.id: _lookahead_times(t, horizon, seed) for t in model.tasks},
    )
    trace = Trace(horizon=horizon, tasks=task_infos(model))

    plan_entries: list[tuple[TimeTick, int, Task, int]] = []
    for decl, task in enumerate(model.tasks):
        for k, t_rel in enumerate(releases[task.id]):
            if t_rel < horizon:
                plan_entries.append((t_rel, decl, task, k))
    plan_entries.sort(key=lambda e: (e[0], e[1], e[3]))
    plan = _ReleasePlan(plan_entries)

    deadline_checks: list[tuple[TimeTick, Job]] = []  # kept sorted by time

    def emit(kind: EventKind, time: TimeTick, job: Job | None = None) -> None:
        trace.events.append(
            TraceEvent(
                time=time,
                kind=kind,
                task=job.task.id if job else None,
                runnable=job.task.runnables[min(job.cursor, len(job.task.runnables) - 1)]
                if job and job.task.runnables and kind in (EventKind.PREEMPT, EventKind.RESUME)
                else None,
                release_index=job.index if job else None,
            )
        )

    def process_releases_at(time: TimeTick) -> None:
        for t_rel, decl, task, k in plan.pop_at(time):
            job = Job(
                task=task,
                decl_index=decl,
                index=k,
                release=t_rel,
                deadline=t_rel + task.period,
                remaining=[rmap[rid].budget for rid in task.runnables],
            )
            state.ready.append(job)
            bisect.insort(deadline_checks, (job.deadline, job), key=lambda e: e[0])
            trace.events.append(
                TraceEvent(time=t_rel, kind=EventKind.RELEASE, task=task.id, release_index=k)
            )

    def process_deadlines_through(time: TimeTick) -> None:
        """Emit a miss at each deadline instant <= time for unfinished jobs.

        Deadline instants at or past the horizon are dropped here; a job
        with such a deadline that still finishes late gets its miss event
        at the completion instant instead, so events and the response-time
        report agree on every miss.
        """
        while deadline_checks and deadline_checks[0][0] <= time:
            d, job = deadline_checks.pop(0)
            if d >= horizon:
                deadline_checks.clear()
                return
            if job.finish is None or job.finish > d:
                job.missed = True
                trace.events.append(
                    TraceEvent(
                        time=d,
                        kind=EventKind.DEADLINE_MISS,
                        task=job.task.id,
                        release_index=job.index,
                    )
                )

    def advance_through(time: TimeTick) -> None:
        """Replay releases and deadline checks chronologically up to ``time``."""
        while True:
            next_rel = plan.peek_time()
            next_dl = deadline_checks[0][0] if deadline_checks else None
            instants = [t for t in (next_rel, next_dl) if t is not None and t <= time]
            if not instants:
                return
            t = min(instants)
            process_releases_at(t)
            process_deadlines_through(t)

    idling_from: TimeTick | None = None
    boundary_job: Job | None = None

    advance_through(0)

    # Segments may only start inside [0, horizon); one started before the
    # horizon runs to completion even if it ends past it.
    while state.clock < horizon:
        job = dispatch(state)
        if job is not None:
            start = state.clock
            end = start + job.remaining[job.cursor]
            runnable_id = job.next_runnable()
            if idling_from is not None:
                trace.events.append(TraceEvent(time=start, kind=EventKind.IDLE_END))
                idling_from = None
            if boundary_job is not None and boundary_job is not job:
                boundary_job.displaced = True
                emit(EventKind.PREEMPT, start, boundary_job)
            boundary_job = None
            if job.displaced:
                job.displaced = False
                emit(EventKind.RESUME, start, job)
            else:
                trace.events.append(
                    TraceEvent(
                        time=start,
                        kind=EventKind.START,
                        task=job.task.id,
                        runnable=runnable_id,
                        release_index=job.index,
                    )
                )
            token = executor.sample(runnable_id, start)

            # The segment is non-preemptible: replay instants strictly
            # inside it, then commit its dataflow effects at the end.
            # Instants exactly at the end are processed after completion
            # bookkeeping so a job finishing at its deadline is not a miss.
            advance_through(end - 1)
            state.clock = end
            executor.commit(runnable_id, token, start, end)
            trace.segments.append(
                Segment(
                    task=job.task.id,
                    runnable=runnable_id,
                    release_index=job.index,
                    start=start,
                    end=end,
                )
            )
            job.remaining[job.cursor] = 0
            job.cursor += 1
            if job.done:
                job.finish = end
                state.completed[job.task.id] = state.completed.get(job.task.id, 0) + 1
                state.ready.remove(job)
                trace.events.append(
                    TraceEvent(
                        time=end,
                        kind=EventKind.FINISH,
                        task=job.task.id,
                        release_index=job.index,
                    )
                )
                if end > job.deadline and not job.missed:
                    # Deadline instant fell at or past the horizon.
                    job.missed = True
                    trace.events.append(
                        TraceEvent(
                            time=end,
                            kind=EventKind.DEADLINE_MISS,
                            task=job.task.id,
                            release_index=job.index,
                        )
                    )
            else:
                boundary_job = job
            # A release or deadline exactly at the end instant is processed
            # after the completion bookkeeping.
            process_releases_at(end)
            process_deadlines_through(end)
            continue

        # Nothing dispatchable: idle until the next release, if any.
        next_rel = plan.peek_time()
        if boundary_job is not None:
            boundary_job.displaced = True
            emit(EventKind.PREEMPT, state.clock, boundary_job)
            boundary_job = None
        if next_rel is None or next_rel >= horizon:
            if state.clock < horizon:
                if idling_from is None:
                    trace.events.append(
                        TraceEvent(time=state.clock, kind=EventKind.IDLE_START)
                    )
                    idling_from = state.clock
                advance_through(horizon)
                state.clock = horizon
                trace.events.append(TraceEvent(time=horizon, kind=EventKind.IDLE_END))
                idling_from = None
            break
        if idling_from is None:
            trace.events.append(TraceEvent(time=state.clock, kind=EventKind.IDLE_START))
            idling_from = state.clock
        advance_through(next_rel)
        state.clock = next_rel

    executor.finalize(horizon)
    return trace
