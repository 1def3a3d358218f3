"""Randomized property suites: transformation preservation, scheduler
invariants, hyperperiod periodicity, determinism.

The invariant checkers replay the produced trace against independently
recomputed release tables and budgets; they never consult scheduler
internals.
"""

from __future__ import annotations

import bisect
from collections import defaultdict

from hypothesis import assume, given, settings
from hypothesis import strategies as st

from genmodels import random_model, random_task_set

from schedflow.engine import release_times, simulate
from schedflow.executor import timed_run, zero_time_run
from schedflow.model import Model, hyperperiod, model_from_dict
from schedflow.trace import EventKind, Trace, signals_to_csv
from schedflow.transform import split_model
from schedflow import fixtures


# ---------------------------------------------------------------------------
# Trace-replay invariant checkers


def _job_tables(trace: Trace):
    releases: dict[tuple[str, int], int] = {}
    finishes: dict[tuple[str, int], int] = {}
    for e in trace.events:
        if e.kind == EventKind.RELEASE:
            releases[(e.task, e.release_index)] = e.time
        elif e.kind == EventKind.FINISH:
            finishes[(e.task, e.release_index)] = e.time
    return releases, finishes


def check_segment_exclusivity(trace: Trace) -> None:
    segs = sorted(trace.segments, key=lambda s: (s.start, s.end))
    for a, b in zip(segs, segs[1:]):
        assert a.end <= b.start, f"overlap: {a} vs {b}"


def check_budget_accounting(model: Model, trace: Trace) -> None:
    rmap = model.runnable_map()
    tasks = model.task_map()
    _releases, finishes = _job_tables(trace)
    by_job = defaultdict(list)
    for s in trace.segments:
        by_job[(s.task, s.release_index)].append(s)
    for job, fin in finishes.items():
        segs = sorted(by_job[job], key=lambda s: s.start)
        gamma = tasks[job[0]].runnables
        assert [s.runnable for s in segs] == list(gamma), job
        for seg in segs:
            assert seg.length == rmap[seg.runnable].budget, seg


def _extended_releases(model: Model, trace: Trace, seed: int) -> dict[str, list[int]]:
    return {
        t.id: sorted(
            release_times(t, trace.horizon + 2 * (t.period + t.jitter) + 1, seed)
        )
        for t in model.tasks
    }


def check_deferral_soundness(model: Model, trace: Trace, seed: int) -> None:
    """No segment's interior contains a strictly-higher-priority release."""
    ext = _extended_releases(model, trace, seed)
    prio = {t.id: t.priority for t in model.tasks}
    for s in trace.segments:
        for t in model.tasks:
            if t.priority <= prio[s.task]:
                continue
            i = bisect.bisect_right(ext[t.id], s.start)
            if i < len(ext[t.id]):
                assert ext[t.id][i] >= s.end, (
                    f"release of {t.id} at {ext[t.id][i]} inside {s}"
                )


def check_dispatch_maximality(model: Model, trace: Trace, seed: int) -> None:
    """At each segment start no eligible, fitting, strictly-higher-priority
    job was left waiting."""
    ext = _extended_releases(model, trace, seed)
    tasks = model.task_map()
    rmap = model.runnable_map()
    releases, finishes = _job_tables(trace)
    by_job = defaultdict(list)
    for s in trace.segments:
        by_job[(s.task, s.release_index)].append(s)

    def next_higher_release(priority: int, now: int):
        best = None
        for t in model.tasks:
            if t.priority <= priority:
                continue
            times = ext[t.id]
            i = bisect.bisect_right(times, now)
            if i < len(times) and (best is None or times[i] < best):
                best = times[i]
        return best

    for s in trace.segments:
        now = s.start
        own_prio = tasks[s.task].priority
        for (tid, k), rel in releases.items():
            task = tasks[tid]
            if task.priority <= own_prio or rel > now:
                continue
            fin = finishes.get((tid, k))
            if fin is not None and fin <= now:
                continue
            # prect gating at this instant
            eligible = True
            for pred in task.prect:
                done = sum(
                    1 for (pt, _pk), f in finishes.items() if pt == pred and f <= now
                )
                if done < k + 1:
                    eligible = False
            for (ot, ok), orel in releases.items():
                if ot == tid and ok < k and orel <= now:
                    ofin = finishes.get((tid, ok))
                    if ofin is None or ofin > now:
                        eligible = False
            if not eligible:
                continue
            done_segs = sum(1 for g in by_job[(tid, k)] if g.end <= now)
            rem = rmap[task.runnables[done_segs]].budget
            limit = next_higher_release(task.priority, now)
            fits = limit is None or now + rem <= limit
            assert not fits, (
                f"job ({tid},{k}) was dispatchable at {now} but {s} started instead"
            )


def check_miss_report_consistency(trace: Trace) -> None:
    from schedflow.report import deadline_report

    by_event = defaultdict(int)
    for e in trace.events_of_kind(EventKind.DEADLINE_MISS):
        by_event[e.task] += 1
    rep = deadline_report(trace)
    for tid, r in rep.items():
        assert r.misses == by_event.get(tid, 0), tid


# ---------------------------------------------------------------------------
# (a) Transformation preservation under zero-time semantics


@given(st.integers(0, 10**9))
@settings(max_examples=60, deadline=None, derandomize=True)
def test_split_preserves_zero_time_signals(seed):
    model = random_model(seed)
    split = split_model(model)
    _, before = zero_time_run(model, 40_000)
    _, after = zero_time_run(split, 40_000)
    assert set(before) == set(after)
    for name in before:
        assert before[name].samples == after[name].samples, name


import pytest


@pytest.mark.parametrize(
    "swap",
    [
        ("r2_read", "r2_delay"),   # two sources of the accumulator
        ("r3_read", "r3_delay"),   # two sources of the differentiator
        ("r2_write", "r2_out"),    # two independent consumers of the sum
    ],
)
def test_declaration_permutation_of_independent_blocks_is_neutral(swap):
    # Swapping two blocks with no feedthrough constraint between them must
    # not change any committed signal, in either run mode.
    first, second = swap
    base = fixtures.model_race_dict()
    permuted = fixtures.model_race_dict()
    blocks = permuted["blocks"]
    i = next(k for k, b in enumerate(blocks) if b["id"] == first)
    j = next(k for k, b in enumerate(blocks) if b["id"] == second)
    blocks[i], blocks[j] = blocks[j], blocks[i]
    owner = next(r for r in permuted["runnables"] if first in r["blocks"])
    members = list(owner["blocks"])
    a, b = members.index(first), members.index(second)
    members[a], members[b] = members[b], members[a]
    owner["blocks"] = members
    _, logs_base = zero_time_run(model_from_dict(base))
    _, logs_perm = zero_time_run(model_from_dict(permuted))
    assert {k: v.samples for k, v in logs_base.items()} == {
        k: v.samples for k, v in logs_perm.items()
    }
    _, timed_base = timed_run(model_from_dict(base))
    _, timed_perm = timed_run(model_from_dict(permuted))
    assert {k: v.samples for k, v in timed_base.items()} == {
        k: v.samples for k, v in timed_perm.items()
    }


# ---------------------------------------------------------------------------
# (b) Scheduler invariants on random task sets


@given(st.integers(0, 10**9))
@settings(max_examples=220, deadline=None, derandomize=True)
def test_scheduler_invariants_random_task_sets(seed):
    model = random_task_set(seed)
    horizon = 2 * hyperperiod(model)
    trace = simulate(model, horizon, seed=seed)
    check_segment_exclusivity(trace)
    check_budget_accounting(model, trace)
    check_deferral_soundness(model, trace, seed)
    check_dispatch_maximality(model, trace, seed)
    check_miss_report_consistency(trace)
    assert all(s.start < horizon for s in trace.segments)


# ---------------------------------------------------------------------------
# (c) Hyperperiod periodicity without jitter


def _periodicity_case(model: Model) -> bool | None:
    """True when checked, None when the idle-at-H precondition fails."""
    H = hyperperiod(model)
    trace = simulate(model, 2 * H, seed=0)
    releases, finishes = _job_tables(trace)
    window1 = [job for job, t in releases.items() if t < H]
    if any(job not in finishes or finishes[job] > H for job in window1):
        return None
    if any(s.start < H < s.end for s in trace.segments):
        return None
    first = sorted(
        (s.task, s.runnable, s.start, s.end) for s in trace.segments if s.start < H
    )
    second = sorted(
        (s.task, s.runnable, s.start - H, s.end - H)
        for s in trace.segments
        if s.start >= H
    )
    assert first == second
    return True


@given(st.integers(0, 10**9))
@settings(max_examples=150, deadline=None, derandomize=True)
def test_hyperperiod_periodicity_without_jitter(seed):
    model = random_task_set(seed, with_jitter=False, with_prect=False)
    assume(_periodicity_case(model) is True)


def test_hyperperiod_periodicity_fixture():
    assert _periodicity_case(fixtures.model_a()) is True


# ---------------------------------------------------------------------------
# (d) Determinism


@given(st.integers(0, 10**9))
@settings(max_examples=40, deadline=None, derandomize=True)
def test_repeated_runs_are_byte_identical(seed):
    model = random_model(seed, with_jitter=True)
    tr1, logs1 = timed_run(model, 40_000, seed=seed)
    tr2, logs2 = timed_run(model, 40_000, seed=seed)
    assert tr1.to_csv() == tr2.to_csv()
    assert signals_to_csv(logs1) == signals_to_csv(logs2)
