"""Domain model for scheduled block-dataflow applications.

A model bundles a flat block graph, named scalar data stores, runnables
(each owning a disjoint set of blocks plus an execution budget), periodic
tasks (ordered runnable lists with priority, offset and jitter bound), and
optional continuous plants for control co-simulation.

All times are exact integer microseconds. Periods, offsets, budgets and
jitter bounds never carry fractions, so schedules computed from them are
exact and reproducible.

Model values are immutable after parsing and safe to share between
simulation runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

# All times are integer microseconds.
TimeTick = int


class ModelError(Exception):
    """Raised for malformed model files or unresolved references."""


@dataclass(frozen=True)
class KindSpec:
    """Static shape of a block kind: port counts, feedthrough, params."""

    n_in: Callable[[Mapping[str, Any]], int]
    n_out: int
    # Inport indices whose value feeds through to the block's action at the
    # same instant. None means "all inports".
    feedthrough: frozenset[int] | None
    defaults: dict[str, Any]
    required: tuple[str, ...] = ()


def _fixed(n: int) -> Callable[[Mapping[str, Any]], int]:
    return lambda params: n


BLOCK_KINDS: dict[str, KindSpec] = {
    "Constant": KindSpec(_fixed(0), 1, frozenset(), {"value": 0.0}),
    "Gain": KindSpec(_fixed(1), 1, frozenset({0}), {"factor": 1.0}),
    "Sum": KindSpec(lambda p: len(p["signs"]), 1, None, {"signs": "++"}),
    "UnitDelay": KindSpec(_fixed(1), 1, frozenset(), {"initial": 0.0}),
    "DataStoreRead": KindSpec(_fixed(0), 1, frozenset(), {}, ("store",)),
    "DataStoreWrite": KindSpec(_fixed(1), 0, frozenset({0}), {}, ("store",)),
    "Inport": KindSpec(_fixed(0), 1, frozenset(), {"index": 1}),
    "Outport": KindSpec(_fixed(1), 0, frozenset({0}), {"index": 1, "signal": None}),
    "PidController": KindSpec(
        _fixed(1),
        1,
        frozenset({0}),
        {"k": 1.0, "ti": 1.0, "td": 0.0, "n_filter": 10.0, "h": 0.001},
    ),
    "PlantProbe": KindSpec(_fixed(0), 2, frozenset(), {}, ("plant",)),
    "PlantActuate": KindSpec(_fixed(1), 0, frozenset({0}), {}, ("plant",)),
}

# Kinds whose state or source decouples them from the instant's inputs.
NON_FEEDTHROUGH_SOURCES = frozenset(
    {"Constant", "UnitDelay", "DataStoreRead", "Inport", "PlantProbe"}
)
PORT_KINDS = frozenset({"Inport", "Outport"})


@dataclass(frozen=True)
class Block:
    id: str
    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def n_in(self) -> int:
        return BLOCK_KINDS[self.kind].n_in(self.params)

    @property
    def n_out(self) -> int:
        return BLOCK_KINDS[self.kind].n_out

    def feedthrough_inports(self) -> frozenset[int]:
        ft = BLOCK_KINDS[self.kind].feedthrough
        if ft is None:
            return frozenset(range(self.n_in))
        return ft

    @property
    def is_port(self) -> bool:
        return self.kind in PORT_KINDS


@dataclass(frozen=True)
class Connection:
    """Directed wire from a block outport to a block inport."""

    src_block: str
    src_port: int
    dst_block: str
    dst_port: int


@dataclass(frozen=True)
class Runnable:
    """Smallest dispatchable unit: a block sub-graph plus a budget.

    ``budget`` is the worst-case execution time in microseconds.  A
    runnable executes atomically: the scheduler never interrupts it
    mid-flight.  ``atomic`` stays True for single-shot dispatch units,
    including the per-block units produced by the fine-grain split.
    """

    id: str
    blocks: tuple[str, ...]
    budget: TimeTick
    atomic: bool = True


@dataclass(frozen=True)
class Task:
    """Periodic schedulable container of ordered runnables.

    Larger ``priority`` wins.  Every job's deadline is implicit: release
    time plus period.  ``prect`` lists predecessor tasks whose same-index
    instance must complete before this task's instance may start.
    """

    id: str
    period: TimeTick
    runnables: tuple[str, ...]
    priority: int
    offset: TimeTick = 0
    jitter: TimeTick = 0
    prect: tuple[str, ...] = ()


@dataclass(frozen=True)
class PlantDecl:
    """A DC-servo-style plant b/(s^2 + a*s) plus its square-wave reference."""

    id: str
    a: float = 1.0
    b: float = 1000.0
    ref_amplitude: float = 1.0
    ref_period: TimeTick = 30_000


@dataclass(frozen=True)
class SimConfig:
    horizon: TimeTick | None = None
    seed: int = 0


@dataclass(frozen=True)
class Model:
    blocks: tuple[Block, ...]
    connections: tuple[Connection, ...]
    stores: dict[str, float]
    runnables: tuple[Runnable, ...]
    tasks: tuple[Task, ...]
    plants: tuple[PlantDecl, ...] = ()
    sim: SimConfig = SimConfig()

    def block_map(self) -> dict[str, Block]:
        return {b.id: b for b in self.blocks}

    def runnable_map(self) -> dict[str, Runnable]:
        return {r.id: r for r in self.runnables}

    def task_map(self) -> dict[str, Task]:
        return {t.id: t for t in self.tasks}

    def task_of_runnable(self) -> dict[str, str]:
        owner: dict[str, str] = {}
        for t in self.tasks:
            for rid in t.runnables:
                owner[rid] = t.id
        return owner

    def runnable_of_block(self) -> dict[str, str]:
        owner: dict[str, str] = {}
        for r in self.runnables:
            for bid in r.blocks:
                owner[bid] = r.id
        return owner

    def task_wcet(self, task: Task) -> TimeTick:
        rmap = self.runnable_map()
        return sum(rmap[rid].budget for rid in task.runnables)

    def horizon_or_default(self, override: TimeTick | None = None) -> TimeTick:
        if override is not None:
            return override
        if self.sim.horizon is not None:
            return self.sim.horizon
        return hyperperiod(self)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "ERROR" | "WARNING"
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity} [{self.code}] {self.message}"


# ---------------------------------------------------------------------------
# Parsing


def _require_keys(obj: Mapping[str, Any], allowed: Iterable[str], where: str) -> None:
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ModelError(f"unknown key(s) {sorted(unknown)} in {where}")


def _get(obj: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in obj:
        raise ModelError(f"missing required key '{key}' in {where}")
    return obj[key]


def _as_time(value: Any, where: str, minimum: int = 0) -> TimeTick:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ModelError(f"{where} must be an integer microsecond count, got {value!r}")
    if value < minimum:
        raise ModelError(f"{where} must be >= {minimum}, got {value}")
    return value


def _as_number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(f"{where} must be a number, got {value!r}")
    return float(value)


def _parse_block(raw: Mapping[str, Any], stores: Mapping[str, float],
                 plant_ids: set[str]) -> Block:
    where = f"block {raw.get('id', '<unnamed>')!r}"
    _require_keys(raw, ("id", "kind", "params", "inports", "outports"), where)
    bid = _get(raw, "id", where)
    kind = _get(raw, "kind", where)
    if kind not in BLOCK_KINDS:
        raise ModelError(f"{where}: unknown block kind {kind!r}")
    spec = BLOCK_KINDS[kind]
    raw_params = dict(raw.get("params", {}))
    _require_keys(raw_params, list(spec.defaults) + list(spec.required), f"{where} params")
    params: dict[str, Any] = dict(spec.defaults)
    params.update(raw_params)
    for req in spec.required:
        if req not in params:
            raise ModelError(f"{where}: missing required param '{req}'")
    # Domain checks that are part of the block's type, not model semantics.
    if kind == "Sum":
        signs = params["signs"]
        if not isinstance(signs, str) or len(signs) < 2 or set(signs) - {"+", "-"}:
            raise ModelError(f"{where}: Sum signs must be a string of '+'/'-' with length >= 2")
    if kind in ("Constant", "Gain", "UnitDelay"):
        key = {"Constant": "value", "Gain": "factor", "UnitDelay": "initial"}[kind]
        params[key] = _as_number(params[key], f"{where} param '{key}'")
    if kind in ("DataStoreRead", "DataStoreWrite") and params["store"] not in stores:
        raise ModelError(f"{where}: unknown data store {params['store']!r}")
    if kind in ("PlantProbe", "PlantActuate") and params["plant"] not in plant_ids:
        raise ModelError(f"{where}: unknown plant {params['plant']!r}")
    if kind == "PidController":
        for key in ("k", "ti", "td", "n_filter", "h"):
            params[key] = _as_number(params[key], f"{where} param '{key}'")
    block = Block(id=bid, kind=kind, params=params)
    # Optional explicit port lists are validated against the kind's arity.
    for port_key, expect in (("inports", block.n_in), ("outports", block.n_out)):
        if port_key in raw and raw[port_key] is not None:
            names = raw[port_key]
            if not isinstance(names, list) or len(names) != expect:
                raise ModelError(
                    f"{where}: {port_key} must list exactly {expect} port name(s) for kind {kind}"
                )
    return block


def model_from_dict(doc: Mapping[str, Any]) -> Model:
    """Build a Model from a JSON-shaped dict, resolving all references."""
    _require_keys(
        doc,
        ("blocks", "connections", "stores", "runnables", "tasks", "plants", "sim"),
        "model",
    )

    stores_raw = doc.get("stores", {})
    if not isinstance(stores_raw, dict):
        raise ModelError("'stores' must be an object mapping name to initial value")
    stores = {name: _as_number(v, f"store {name!r} initial") for name, v in stores_raw.items()}

    plants = []
    plant_ids: set[str] = set()
    for raw in doc.get("plants", []):
        where = f"plant {raw.get('id', '<unnamed>')!r}"
        _require_keys(raw, ("id", "a", "b", "ref_amplitude", "ref_period_us"), where)
        pid = _get(raw, "id", where)
        if pid in plant_ids:
            raise ModelError(f"duplicate plant id {pid!r}")
        plant_ids.add(pid)
        plants.append(
            PlantDecl(
                id=pid,
                a=_as_number(raw.get("a", 1.0), f"{where} a"),
                b=_as_number(raw.get("b", 1000.0), f"{where} b"),
                ref_amplitude=_as_number(raw.get("ref_amplitude", 1.0), f"{where} ref_amplitude"),
                ref_period=_as_time(raw.get("ref_period_us", 30_000), f"{where} ref_period_us", 1),
            )
        )

    blocks: list[Block] = []
    seen_blocks: set[str] = set()
    for raw in _get(doc, "blocks", "model"):
        block = _parse_block(raw, stores, plant_ids)
        if block.id in seen_blocks:
            raise ModelError(f"duplicate block id {block.id!r}")
        seen_blocks.add(block.id)
        blocks.append(block)

    connections: list[Connection] = []
    for raw in doc.get("connections", []):
        _require_keys(raw, ("src", "dst"), "connection")
        src = _get(raw, "src", "connection")
        dst = _get(raw, "dst", "connection")
        for end, name in ((src, "src"), (dst, "dst")):
            if not (isinstance(end, list) and len(end) == 2 and isinstance(end[1], int)):
                raise ModelError(f"connection {name} must be [block_id, port_index]")
        if src[0] not in seen_blocks:
            raise ModelError(f"connection references unknown block {src[0]!r}")
        if dst[0] not in seen_blocks:
            raise ModelError(f"connection references unknown block {dst[0]!r}")
        connections.append(Connection(src[0], src[1], dst[0], dst[1]))

    runnables: list[Runnable] = []
    seen_runnables: set[str] = set()
    for raw in _get(doc, "runnables", "model"):
        where = f"runnable {raw.get('id', '<unnamed>')!r}"
        _require_keys(raw, ("id", "blocks", "budget_us"), where)
        rid = _get(raw, "id", where)
        if rid in seen_runnables:
            raise ModelError(f"duplicate runnable id {rid!r}")
        seen_runnables.add(rid)
        block_ids = _get(raw, "blocks", where)
        for bid in block_ids:
            if bid not in seen_blocks:
                raise ModelError(f"{where} references unknown block {bid!r}")
        if len(set(block_ids)) != len(block_ids):
            raise ModelError(f"{where} lists a block twice")
        budget = _as_time(_get(raw, "budget_us", where), f"{where} budget_us")
        runnables.append(Runnable(id=rid, blocks=tuple(block_ids), budget=budget))

    tasks: list[Task] = []
    seen_tasks: set[str] = set()
    for raw in _get(doc, "tasks", "model"):
        where = f"task {raw.get('id', '<unnamed>')!r}"
        _require_keys(
            raw,
            ("id", "period_us", "offset_us", "priority", "jitter_us", "runnables", "prect"),
            where,
        )
        tid = _get(raw, "id", where)
        if tid in seen_tasks:
            raise ModelError(f"duplicate task id {tid!r}")
        seen_tasks.add(tid)
        rids = _get(raw, "runnables", where)
        for rid in rids:
            if rid not in seen_runnables:
                raise ModelError(f"{where} references unknown runnable {rid!r}")
        prio = _get(raw, "priority", where)
        if isinstance(prio, bool) or not isinstance(prio, int):
            raise ModelError(f"{where}: priority must be an integer")
        tasks.append(
            Task(
                id=tid,
                period=_as_time(_get(raw, "period_us", where), f"{where} period_us", 1),
                offset=_as_time(raw.get("offset_us", 0), f"{where} offset_us"),
                priority=prio,
                jitter=_as_time(raw.get("jitter_us", 0), f"{where} jitter_us"),
                runnables=tuple(rids),
                prect=tuple(raw.get("prect", ())),
            )
        )
    for t in tasks:
        for pred in t.prect:
            if pred not in seen_tasks:
                raise ModelError(f"task {t.id!r} prect references unknown task {pred!r}")

    sim_raw = doc.get("sim", {})
    _require_keys(sim_raw, ("horizon_us", "seed"), "sim")
    horizon = sim_raw.get("horizon_us")
    if horizon is not None:
        horizon = _as_time(horizon, "sim horizon_us", 1)
    seed = sim_raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ModelError("sim seed must be an integer")

    model = Model(
        blocks=tuple(blocks),
        connections=tuple(connections),
        stores=stores,
        runnables=tuple(runnables),
        tasks=tuple(tasks),
        plants=tuple(plants),
        sim=SimConfig(horizon=horizon, seed=seed),
    )
    return _assign_signal_names(model)


def _assign_signal_names(model: Model) -> Model:
    """Give every Outport an explicit signal name.

    Defaults to ``<runnable>.out`` (or ``<runnable>.out<index>`` for
    secondary outports).  Explicit names survive transformations that move
    the block between runnables, so a logged signal keeps its identity.
    """
    owner = model.runnable_of_block()
    new_blocks = []
    for b in model.blocks:
        if b.kind == "Outport" and b.params.get("signal") is None:
            rid = owner.get(b.id, b.id)
            index = b.params.get("index", 1)
            name = f"{rid}.out" if index == 1 else f"{rid}.out{index}"
            params = dict(b.params)
            params["signal"] = name
            b = Block(id=b.id, kind=b.kind, params=params)
        new_blocks.append(b)
    return Model(
        blocks=tuple(new_blocks),
        connections=model.connections,
        stores=model.stores,
        runnables=model.runnables,
        tasks=model.tasks,
        plants=model.plants,
        sim=model.sim,
    )


def parse_model(text: str) -> Model:
    """Parse the JSON model format; report syntax errors with positions."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(
            f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ModelError("model file must contain a JSON object")
    return model_from_dict(doc)


def load_model(path: str) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


# ---------------------------------------------------------------------------
# Serialization


def model_to_dict(model: Model) -> dict[str, Any]:
    return {
        "blocks": [
            {"id": b.id, "kind": b.kind, "params": dict(b.params)} for b in model.blocks
        ],
        "connections": [
            {"src": [c.src_block, c.src_port], "dst": [c.dst_block, c.dst_port]}
            for c in model.connections
        ],
        "stores": dict(model.stores),
        "runnables": [
            {"id": r.id, "blocks": list(r.blocks), "budget_us": r.budget}
            for r in model.runnables
        ],
        "tasks": [
            {
                "id": t.id,
                "period_us": t.period,
                "offset_us": t.offset,
                "priority": t.priority,
                "jitter_us": t.jitter,
                "runnables": list(t.runnables),
                "prect": list(t.prect),
            }
            for t in model.tasks
        ],
        "plants": [
            {
                "id": p.id,
                "a": p.a,
                "b": p.b,
                "ref_amplitude": p.ref_amplitude,
                "ref_period_us": p.ref_period,
            }
            for p in model.plants
        ],
        "sim": {"horizon_us": model.sim.horizon, "seed": model.sim.seed},
    }


def serialize_model(model: Model) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Analysis


def utilization(model: Model) -> float:
    """Sum over tasks of summed-runnable-budget / period."""
    return sum(model.task_wcet(t) / t.period for t in model.tasks)


def hyperperiod(model: Model) -> TimeTick:
    """Least common multiple of all task periods."""
    periods = [t.period for t in model.tasks]
    if not periods:
        return 0
    return math.lcm(*periods)


def _prect_cycle(tasks: Iterable[Task]) -> list[str] | None:
    """Return task ids forming a predecessor cycle, or None."""
    graph = {t.id: list(t.prect) for t in tasks}
    color: dict[str, int] = {}
    stack: list[str] = []

    def visit(node: str) -> list[str] | None:
        color[node] = 1
        stack.append(node)
        for pred in graph.get(node, ()):
            if color.get(pred, 0) == 1:
                return stack[stack.index(pred):]
            if color.get(pred, 0) == 0:
                found = visit(pred)
                if found:
                    return found
        stack.pop()
        color[node] = 2
        return None

    for tid in graph:
        if color.get(tid, 0) == 0:
            found = visit(tid)
            if found:
                return found
    return None


def validate(model: Model) -> list[Diagnostic]:
    """Structural and schedulability diagnostics.

    Structural violations are ERRORs; utilization above 1 and per-task
    budgets exceeding the period are WARNINGs.
    """
    out: list[Diagnostic] = []
    blocks = model.block_map()

    # Connection port ranges and inport coverage.
    incoming: dict[tuple[str, int], int] = {}
    for c in model.connections:
        src = blocks[c.src_block]
        dst = blocks[c.dst_block]
        if not (0 <= c.src_port < src.n_out):
            out.append(
                Diagnostic(
                    "ERROR",
                    "dangling-port",
                    f"connection taps outport {c.src_port} of block '{src.id}' which has {src.n_out}",
                )
            )
        if not (0 <= c.dst_port < dst.n_in):
            out.append(
                Diagnostic(
                    "ERROR",
                    "dangling-port",
                    f"connection drives inport {c.dst_port} of block '{dst.id}' which has {dst.n_in}",
                )
            )
        else:
            incoming[(c.dst_block, c.dst_port)] = incoming.get((c.dst_block, c.dst_port), 0) + 1
    for b in model.blocks:
        for port in range(b.n_in):
            count = incoming.get((b.id, port), 0)
            if count == 0:
                out.append(
                    Diagnostic(
                        "ERROR",
                        "dangling-port",
                        f"inport {port} of block '{b.id}' has no incoming connection",
                    )
                )
            elif count > 1:
                out.append(
                    Diagnostic(
                        "ERROR",
                        "dangling-port",
                        f"inport {port} of block '{b.id}' has {count} incoming connections",
                    )
                )

    # Runnable block ownership must be disjoint.
    seen_owner: dict[str, str] = {}
    for r in model.runnables:
        for bid in r.blocks:
            if bid in seen_owner:
                out.append(
                    Diagnostic(
                        "ERROR",
                        "block-overlap",
                        f"block '{bid}' belongs to runnables '{seen_owner[bid]}' and '{r.id}'",
                    )
                )
            else:
                seen_owner[bid] = r.id

    # Budgets must be positive.
    for r in model.runnables:
        if r.budget <= 0:
            out.append(
                Diagnostic("ERROR", "zero-budget", f"runnable '{r.id}' has budget {r.budget} us")
            )

    # Runnable-to-task mapping: exactly one task each, tasks non-empty.
    owner_count: dict[str, int] = {r.id: 0 for r in model.runnables}
    for t in model.tasks:
        if not t.runnables:
            out.append(Diagnostic("ERROR", "empty-task", f"task '{t.id}' maps no runnables"))
        for rid in t.runnables:
            owner_count[rid] = owner_count.get(rid, 0) + 1
    for rid, n in owner_count.items():
        if n != 1:
            out.append(
                Diagnostic(
                    "ERROR",
                    "task-mapping",
                    f"runnable '{rid}' is mapped to {n} tasks (expected exactly 1)",
                )
            )

    cycle = _prect_cycle(model.tasks)
    if cycle:
        out.append(
            Diagnostic("ERROR", "prect-cycle", "task precedence cycle: " + " -> ".join(cycle))
        )

    # Feedthrough cycles inside runnables.
    from . import sorting  # local import to avoid a module cycle

    for r in model.runnables:
        try:
            sorting.sorted_order(model, r.blocks)
        except sorting.AlgebraicLoopError as exc:
            out.append(Diagnostic("ERROR", "algebraic-loop", f"runnable '{r.id}': {exc}"))

    if not any(d.severity == "ERROR" for d in out):
        u = utilization(model)
        if u > 1.0:
            out.append(
                Diagnostic("WARNING", "overload", f"total utilization {u:.4f} exceeds 1")
            )
        for t in model.tasks:
            c = model.task_wcet(t)
            if c > t.period:
                out.append(
                    Diagnostic(
                        "WARNING",
                        "budget-exceeds-period",
                        f"task '{t.id}' budget {c} us exceeds its period {t.period} us",
                    )
                )
    return out
