"""Trace renderings and analyses: Gantt charts, deadline stats, signal diffs."""

from __future__ import annotations

import io
from dataclasses import dataclass

from .trace import EventKind, SignalLogs, TimeTick, Trace


# ---------------------------------------------------------------------------
# Gantt rendering


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def gantt(trace: Trace, mode: str = "task", fmt: str = "ascii",
          tick: TimeTick = 1000) -> str:
    if mode not in ("task", "runnable"):
        raise ValueError(f"unknown gantt mode {mode!r}")
    if fmt == "ascii":
        return _gantt_ascii(trace, mode, tick)
    if fmt == "svg":
        return _gantt_svg(trace, mode)
    raise ValueError(f"unknown gantt format {fmt!r}")


def _rows(trace: Trace, mode: str) -> list[tuple[str, list]]:
    if mode == "task":
        return [(t.id, trace.segments_of(task=t.id)) for t in trace.tasks]
    rows = []
    for t in trace.tasks:
        for rid in t.runnables:
            rows.append((rid, trace.segments_of(runnable=rid)))
    return rows


def _pending_spans(trace: Trace, task_id: str,
                   runnable: str | None = None) -> list[tuple[TimeTick, TimeTick]]:
    """Intervals where released work is waiting.

    Task rows wait from a job's release to its finish; runnable rows wait
    from the job's release until that runnable's own segment starts.
    """
    releases: dict[int, TimeTick] = {}
    spans: list[tuple[TimeTick, TimeTick]] = []
    closed: set[int] = set()
    for e in trace.events:
        if e.task != task_id or e.release_index is None:
            continue
        if e.kind == EventKind.RELEASE:
            releases[e.release_index] = e.time
        elif e.kind == EventKind.FINISH and runnable is None:
            spans.append((releases[e.release_index], e.time))
            closed.add(e.release_index)
    if runnable is not None:
        for s in trace.segments:
            if s.task == task_id and s.runnable == runnable and s.release_index in releases:
                spans.append((releases[s.release_index], s.start))
                closed.add(s.release_index)
    for k, t_rel in releases.items():
        if k not in closed:
            spans.append((t_rel, trace.horizon))
    return spans


def _gantt_ascii(trace: Trace, mode: str, tick: TimeTick) -> str:
    n_cells = _ceil_div(trace.horizon, tick) if trace.horizon else 0
    rows = _rows(trace, mode)
    width = max((len(name) for name, _ in rows), default=4)
    out = io.StringIO()
    ruler = "".join("|" if (i * tick) % (10 * tick) == 0 else "." for i in range(n_cells))
    out.write(f"{'':<{width}}  {ruler}  (1 cell = {tick} us)\n")
    task_of_row: dict[str, tuple[str, str | None]] = {}
    if mode == "task":
        task_of_row = {t.id: (t.id, None) for t in trace.tasks}
    else:
        for t in trace.tasks:
            for rid in t.runnables:
                task_of_row[rid] = (t.id, rid)
    for name, segments in rows:
        task_id, runnable = task_of_row[name]
        pend = _pending_spans(trace, task_id, runnable)
        cells = []
        for i in range(n_cells):
            lo, hi = i * tick, (i + 1) * tick
            busy = any(s.start < hi and s.end > lo and s.end > s.start for s in segments)
            if busy:
                cells.append("#")
            elif any(p0 < hi and p1 > lo for p0, p1 in pend):
                cells.append("~")
            else:
                cells.append(".")
        out.write(f"{name:<{width}}  {''.join(cells)}\n")
    out.write(f"{'':<{width}}  ('#' running, '~' released but waiting)\n")
    return out.getvalue()


def _gantt_svg(trace: Trace, mode: str, width_px: int = 1000, row_px: int = 24) -> str:
    rows = _rows(trace, mode)
    horizon = max(trace.horizon, 1)
    scale = width_px / horizon
    label_px = 120
    height = row_px * (len(rows) + 1)
    out = io.StringIO()
    out.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{label_px + width_px}" '
        f'height="{height}" font-family="monospace" font-size="12">\n'
    )
    for i, (name, segments) in enumerate(rows):
        y = row_px * i
        out.write(
            f'<text x="4" y="{y + row_px - 8}">{name}</text>\n'
            f'<line x1="{label_px}" y1="{y + row_px}" x2="{label_px + width_px}" '
            f'y2="{y + row_px}" stroke="#ccc"/>\n'
        )
        for s in segments:
            x = label_px + s.start * scale
            w = max((s.end - s.start) * scale, 0.5)
            out.write(
                f'<rect x="{x:.3f}" y="{y + 4}" width="{w:.3f}" height="{row_px - 8}" '
                f'fill="#4682b4"><title>{s.runnable} [{s.start},{s.end})</title></rect>\n'
            )
    axis_y = row_px * len(rows) + 14
    for ms in range(0, horizon // 1000 + 1, max(1, horizon // 10000)):
        x = label_px + ms * 1000 * scale
        out.write(f'<text x="{x:.3f}" y="{axis_y}">{ms}</text>\n')
    out.write("</svg>\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# Deadline / response-time report


@dataclass(frozen=True)
class TaskReport:
    task: str
    jobs: int
    misses: int
    unfinished: int
    worst_response: TimeTick | None

    def line(self) -> str:
        worst = "-" if self.worst_response is None else f"{self.worst_response} us"
        return (
            f"{self.task}: jobs={self.jobs} misses={self.misses} "
            f"unfinished={self.unfinished} worst_response={worst}"
        )


def deadline_report(trace: Trace) -> dict[str, TaskReport]:
    """Response time per job is finish minus release; a miss is a response
    beyond the period, counting jobs still unfinished past their deadline
    inside the horizon."""
    periods = {t.id: t.period for t in trace.tasks}
    releases: dict[tuple[str, int], TimeTick] = {}
    finishes: dict[tuple[str, int], TimeTick] = {}
    for e in trace.events:
        if e.kind == EventKind.RELEASE:
            releases[(e.task, e.release_index)] = e.time
        elif e.kind == EventKind.FINISH:
            finishes[(e.task, e.release_index)] = e.time

    out: dict[str, TaskReport] = {}
    for t in trace.tasks:
        jobs = [(k, rel) for (tid, k), rel in releases.items() if tid == t.id]
        misses = 0
        unfinished = 0
        worst: TimeTick | None = None
        for k, rel in jobs:
            fin = finishes.get((t.id, k))
            if fin is None:
                unfinished += 1
                if rel + periods[t.id] < trace.horizon:
                    misses += 1
                continue
            response = fin - rel
            if worst is None or response > worst:
                worst = response
            if response > periods[t.id]:
                misses += 1
        out[t.id] = TaskReport(
            task=t.id, jobs=len(jobs), misses=misses,
            unfinished=unfinished, worst_response=worst,
        )
    return out


# ---------------------------------------------------------------------------
# Signal diff


class UnknownSignalError(KeyError):
    pass


@dataclass(frozen=True)
class Divergence:
    signal: str
    index: int
    time_a: TimeTick | None
    value_a: float | None
    time_b: TimeTick | None
    value_b: float | None

    def line(self) -> str:
        return (
            f"{self.signal}: diverges at commit #{self.index}: "
            f"{self.value_a} @ {self.time_a} us vs {self.value_b} @ {self.time_b} us"
        )


def diff_signals(a: SignalLogs, b: SignalLogs, signals: list[str] | None = None,
                 tolerance: float = 0.0) -> dict[str, Divergence | None]:
    """Compare the held-value sequences of each signal commit by commit.

    Both runs observe the same model over the same horizon, so the k-th
    committed value of a signal describes the same logical activation even
    when the two schedules place it at different instants.  The result
    maps each signal to its earliest divergence, or None when identical.
    """
    if signals is None:
        signals = sorted(set(a) | set(b))
    out: dict[str, Divergence | None] = {}
    for name in signals:
        if name not in a and name not in b:
            raise UnknownSignalError(name)
        sa = a[name].samples if name in a else []
        sb = b[name].samples if name in b else []
        found: Divergence | None = None
        for i in range(max(len(sa), len(sb))):
            ta, va = sa[i] if i < len(sa) else (None, None)
            tb, vb = sb[i] if i < len(sb) else (None, None)
            if va is None or vb is None or abs(va - vb) > tolerance:
                found = Divergence(name, i, ta, va, tb, vb)
                break
        out[name] = found
    return out


def diff_is_clean(result: dict[str, Divergence | None]) -> bool:
    return all(v is None for v in result.values())
