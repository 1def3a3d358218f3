"""Dataflow evaluation under zero-time and timed scheduling semantics.

Every block outport has a persistent committed value (a "wire").  A
runnable evaluation samples its environment when its segment starts and
publishes its effects when the segment ends:

* sample: snapshot of all store values and committed wires, plus plant
  probe readings taken at the sample instant;
* evaluate: the runnable's blocks run in sorted order; blocks read fresh
  in-pass values from sources inside the same runnable and snapshot values
  from everything else.  Store writes land in a pass-local overlay that
  later reads in the same pass observe;
* commit: overlay stores, fresh wires, outport records and actuator values
  become visible atomically at the commit instant.

A UnitDelay emits its configured initial value on its first evaluation and
afterwards simply emits its resolved input: the one-activation buffer
lives in the wire, not in the block.  When the delay's driver runs later
in the pass (every feedback loop sorts this way, since the delay's output
edge forces the delay earlier) the resolved input is the previous
activation's value -- the classic delay.  Because the resolution rule is
the same for every block, the per-block split reproduces the exact same
global sequence of evaluations, which is what makes the transformation
semantics-preserving under zero-time execution.

Zero-time semantics is the idealized reference: at every release instant
each released job runs instantaneously and completely (sample time equals
commit time), ordered by priority then declaration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from . import plants as plants_mod
from .engine import simulate
from .model import Block, Model, ModelError, TimeTick
from .sorting import sorted_order
from .trace import (
    EventKind,
    Segment,
    SignalLog,
    SignalLogs,
    Trace,
    TraceEvent,
    task_infos,
)


def eval_block(block: Block, inputs: list[float], state: Any = None) -> tuple[list[float], Any]:
    """Pure single-block semantics: (outputs, state').

    ``state`` is the block's carried value: the held sample of a
    UnitDelay, the current store value for a DataStoreRead, the controller
    state of a PidController, the (reference, position) pair of a
    PlantProbe.  Writers (DataStoreWrite, Outport, PlantActuate) return
    the value they emit as the new state.
    """
    if len(inputs) != block.n_in:
        raise ValueError(
            f"block '{block.id}' ({block.kind}) expects {block.n_in} inputs, got {len(inputs)}"
        )
    kind = block.kind
    if kind == "Constant":
        return [block.params["value"]], state
    if kind == "Gain":
        return [block.params["factor"] * inputs[0]], state
    if kind == "Sum":
        total = 0.0
        for sign, value in zip(block.params["signs"], inputs):
            total += value if sign == "+" else -value
        return [total], state
    if kind == "UnitDelay":
        held = block.params["initial"] if state is None else state
        return [held], inputs[0]
    if kind == "DataStoreRead":
        return [float(state)], state
    if kind == "DataStoreWrite":
        return [], inputs[0]
    if kind == "Inport":
        return [0.0 if state is None else float(state)], state
    if kind == "Outport":
        return [], inputs[0]
    if kind == "PidController":
        params = plants_mod.pid_params_from_block(block.params)
        pid_state = state if state is not None else plants_mod.PidState()
        u, new_state = plants_mod.pid_eval(params, inputs[0], pid_state)
        return [u], new_state
    if kind == "PlantProbe":
        ref, pos = state
        return [ref, pos], state
    if kind == "PlantActuate":
        return [], inputs[0]
    raise ValueError(f"unknown block kind {kind!r}")


@dataclass
class Snapshot:
    """Environment as of a segment's sample instant."""

    time: TimeTick
    stores: dict[str, float]
    wires: dict[tuple[str, int], float]
    probes: dict[str, tuple[float, float]]


class DataflowExecutor:
    """Owns all mutable evaluation state of one simulation run."""

    def __init__(self, model: Model):
        self.model = model
        self.blocks = model.block_map()
        self.stores = dict(model.stores)
        self.signals: SignalLogs = {}
        self.pid_states: dict[str, plants_mod.PidState] = {}
        self.plants: dict[str, plants_mod.PlantSim] = {}
        for decl in model.plants:
            sim = plants_mod.PlantSim(decl)
            self.plants[decl.id] = sim
            self.signals[sim.y_log.name] = sim.y_log
            self.signals[sim.r_log.name] = sim.r_log

        self.order: dict[str, tuple[str, ...]] = {}
        self.members: dict[str, frozenset[str]] = {}
        for r in model.runnables:
            self.order[r.id] = sorted_order(model, r.blocks).block_ids()
            self.members[r.id] = frozenset(r.blocks)

        self.inmap: dict[tuple[str, int], tuple[str, int]] = {}
        for c in model.connections:
            self.inmap[(c.dst_block, c.dst_port)] = (c.src_block, c.src_port)

        self.wires: dict[tuple[str, int], float] = {}
        self.primed: set[str] = set()
        for b in model.blocks:
            for port in range(b.n_out):
                self.wires[(b.id, port)] = 0.0
            if b.kind == "Constant":
                self.wires[(b.id, 0)] = b.params["value"]
            elif b.kind == "UnitDelay":
                self.wires[(b.id, 0)] = b.params["initial"]
            elif b.kind == "PidController":
                self.pid_states[b.id] = plants_mod.PidState()

    # -- scheduler hooks ----------------------------------------------------

    def sample(self, runnable_id: str, time: TimeTick) -> Snapshot:
        probes: dict[str, tuple[float, float]] = {}
        for bid in self.members[runnable_id]:
            b = self.blocks[bid]
            if b.kind == "PlantProbe":
                plant = self.plants[b.params["plant"]]
                plant.advance_to(time)
                probes[b.params["plant"]] = (plant.reference(time), plant.position)
        return Snapshot(
            time=time,
            stores=dict(self.stores),
            wires=dict(self.wires),
            probes=probes,
        )

    def commit(self, runnable_id: str, token: Snapshot, start: TimeTick, end: TimeTick) -> None:
        fresh, store_overlay, out_signals, actuations = self._evaluate(runnable_id, token)
        self.stores.update(store_overlay)
        for store, value in store_overlay.items():
            self._signal(store).append(end, value)
        self.wires.update(fresh)
        for name, value in out_signals:
            self._signal(name).append(end, value)
        for plant_id, u in actuations:
            plant = self.plants[plant_id]
            plant.advance_to(end)
            plant.set_input(u)

    def finalize(self, horizon: TimeTick) -> None:
        for plant in self.plants.values():
            plant.advance_to(horizon)

    # -- evaluation ----------------------------------------------------------

    def run_runnable_atomic(self, runnable_id: str, sample_time: TimeTick,
                            commit_time: TimeTick) -> None:
        token = self.sample(runnable_id, sample_time)
        self.commit(runnable_id, token, sample_time, commit_time)

    def _resolve_input(self, block: Block, port: int, members: frozenset[str],
                       fresh: dict[tuple[str, int], float], snap: Snapshot) -> float:
        src = self.inmap.get((block.id, port))
        if src is None:
            raise ModelError(f"inport {port} of block '{block.id}' is unconnected")
        if src[0] in members and src in fresh:
            return fresh[src]
        return snap.wires[src]

    def _evaluate(self, runnable_id: str, snap: Snapshot):
        members = self.members[runnable_id]
        fresh: dict[tuple[str, int], float] = {}
        store_overlay: dict[str, float] = {}
        out_signals: list[tuple[str, float]] = []
        actuations: list[tuple[str, float]] = []

        for bid in self.order[runnable_id]:
            b = self.blocks[bid]
            ins = [
                self._resolve_input(b, port, members, fresh, snap)
                for port in range(b.n_in)
            ]
            state: Any = None
            if b.kind == "UnitDelay":
                state = b.params["initial"] if bid not in self.primed else ins[0]
                self.primed.add(bid)
            elif b.kind == "DataStoreRead":
                store = b.params["store"]
                state = store_overlay.get(store, snap.stores[store])
            elif b.kind == "Inport":
                state = snap.wires[(bid, 0)]
            elif b.kind == "PidController":
                state = self.pid_states[bid]
            elif b.kind == "PlantProbe":
                state = snap.probes[b.params["plant"]]

            outs, new_state = eval_block(b, ins, state)

            if b.kind == "DataStoreWrite":
                store_overlay[b.params["store"]] = new_state
            elif b.kind == "Outport":
                out_signals.append((b.params["signal"], new_state))
            elif b.kind == "PlantActuate":
                actuations.append((b.params["plant"], new_state))
            elif b.kind == "PidController":
                self.pid_states[bid] = new_state

            for port, value in enumerate(outs):
                fresh[(bid, port)] = value
        return fresh, store_overlay, out_signals, actuations

    def _signal(self, name: str) -> SignalLog:
        if name not in self.signals:
            self.signals[name] = SignalLog(name=name)
        return self.signals[name]


# ---------------------------------------------------------------------------
# Run modes


def zero_time_run(model: Model, horizon: TimeTick | None = None) -> tuple[Trace, SignalLogs]:
    """Idealized execution: released work completes instantly at release.

    Jitter is forced to zero.  Coincident releases run ordered by priority
    (descending) then task declaration order; a job's runnables run in
    list order with sample time equal to commit time.
    """
    horizon = model.horizon_or_default(horizon)
    ex = DataflowExecutor(model)
    trace = Trace(horizon=horizon, tasks=task_infos(model))

    slots: list[tuple[TimeTick, int, int, int]] = []  # (time, -prio, decl, k)
    for decl, task in enumerate(model.tasks):
        k = 0
        while k * task.period + task.offset < horizon:
            slots.append((k * task.period + task.offset, -task.priority, decl, k))
            k += 1
    slots.sort()

    for time, _neg_prio, decl, k in slots:
        task = model.tasks[decl]
        trace.events.append(
            TraceEvent(time=time, kind=EventKind.RELEASE, task=task.id, release_index=k)
        )
        for rid in task.runnables:
            trace.events.append(
                TraceEvent(
                    time=time, kind=EventKind.START, task=task.id,
                    runnable=rid, release_index=k,
                )
            )
            ex.run_runnable_atomic(rid, time, time)
            trace.segments.append(
                Segment(task=task.id, runnable=rid, release_index=k, start=time, end=time)
            )
        trace.events.append(
            TraceEvent(time=time, kind=EventKind.FINISH, task=task.id, release_index=k)
        )
    ex.finalize(horizon)
    return trace, ex.signals


def timed_run(
    model: Model, horizon: TimeTick | None = None, seed: int | None = None
) -> tuple[Trace, SignalLogs]:
    """Timed execution: the fixed-priority engine drives the executor."""
    ex = DataflowExecutor(model)
    trace = simulate(model, horizon=horizon, seed=seed, executor=ex)
    return trace, ex.signals
