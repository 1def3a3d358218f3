"""Fine-grain transformation: one dispatchable unit per block.

Splitting relocates preemption points from runnable boundaries to block
boundaries without changing the dataflow: every non-port block of a
runnable becomes its own sub-runnable, named ``<runnable>_<k>`` with k the
block's 1-based sorted-order position, and the task's runnable list gets
the sub-runnables in that order.

Boundary ports are elided.  An Outport travels with the block that feeds
it (it must log at that block's commits to keep signal identity); an
Inport is dropped from dispatch entirely, since its committed wire already
holds its value.  The original budget is divided into equal integer shares
with the remainder on the last share, so task budgets are conserved
exactly.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from .model import Model, ModelError, Runnable, Task, TimeTick
from .sorting import sorted_order


@dataclass(frozen=True)
class ConnectivityRecord:
    """Wiring of one elevated block: mirrors the original connections."""

    block: str
    handle: str
    inbound: tuple[str, ...]  # one "src.out<k>" per inport ("" when none)
    outbound: tuple[str, ...]  # one "dst.in<k>" per outgoing connection


def exec_time_split(budget: TimeTick, count: int) -> list[TimeTick]:
    """Equal integer shares of ``budget``; the remainder goes to the last."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    if count < 1:
        raise ValueError("count must be >= 1")
    share = budget // count
    shares = [share] * count
    shares[-1] += budget % count
    return shares


def split_runnable(model: Model, runnable: Runnable) -> tuple[list[Runnable], list[ConnectivityRecord]]:
    """Split one runnable into per-block sub-runnables plus wiring records."""
    order = sorted_order(model, runnable.blocks)
    blocks = model.block_map()
    members = set(runnable.blocks)

    core_ids = [bid for bid in order.block_ids() if not blocks[bid].is_port]
    if not core_ids:
        raise ModelError(f"runnable '{runnable.id}' has no non-port blocks to split")

    # Outports ride along with their feeding block.
    folded: dict[str, list[str]] = {bid: [] for bid in core_ids}
    inmap = {(c.dst_block, c.dst_port): (c.src_block, c.src_port) for c in model.connections}
    for bid in order.block_ids():
        b = blocks[bid]
        if b.kind != "Outport":
            continue
        src = inmap.get((bid, 0))
        if src is None or src[0] not in members or blocks[src[0]].is_port:
            raise ModelError(
                f"Outport '{bid}' of runnable '{runnable.id}' is not fed by a block "
                "of the same runnable; it cannot be split"
            )
        folded[src[0]].append(bid)

    budgets = exec_time_split(runnable.budget, len(core_ids))
    subs = [
        Runnable(
            id=f"{runnable.id}_{k}",
            blocks=tuple([bid] + folded[bid]),
            budget=budgets[k - 1],
            atomic=True,
        )
        for k, bid in enumerate(core_ids, start=1)
    ]

    records = []
    for k, bid in enumerate(core_ids, start=1):
        b = blocks[bid]
        inbound = []
        for port in range(b.n_in):
            src = inmap.get((bid, port))
            if src is not None and src[0] in members:
                inbound.append(f"{src[0]}.out{src[1]}")
            else:
                inbound.append("")
        outbound = [
            f"{c.dst_block}.in{c.dst_port}"
            for c in model.connections
            if c.src_block == bid and c.dst_block in members
        ]
        records.append(
            ConnectivityRecord(
                block=bid,
                handle=f"{runnable.id}_{k}",
                inbound=tuple(inbound),
                outbound=tuple(outbound),
            )
        )
    return subs, records


def split_model(model: Model) -> Model:
    """Replace every runnable by its sub-runnables, preserving order.

    Task-level attributes (period, offset, priority, jitter, prect) are
    untouched; within each task's runnable list the sub-runnables appear
    in sorted order at the position of their parent, so relative execution
    order is exactly preserved.
    """
    new_runnables: list[Runnable] = []
    expansion: dict[str, list[str]] = {}
    for r in model.runnables:
        subs, _records = split_runnable(model, r)
        expansion[r.id] = [s.id for s in subs]
        new_runnables.extend(subs)

    ids = [r.id for r in new_runnables]
    if len(set(ids)) != len(ids):
        raise ModelError("fine-grain split produced colliding runnable ids")

    new_tasks = []
    for t in model.tasks:
        gamma: list[str] = []
        for rid in t.runnables:
            gamma.extend(expansion[rid])
        new_tasks.append(
            Task(
                id=t.id,
                period=t.period,
                offset=t.offset,
                priority=t.priority,
                jitter=t.jitter,
                runnables=tuple(gamma),
                prect=t.prect,
            )
        )

    return Model(
        blocks=model.blocks,
        connections=model.connections,
        stores=dict(model.stores),
        runnables=tuple(new_runnables),
        tasks=tuple(new_tasks),
        plants=model.plants,
        sim=model.sim,
    )


def connectivity_records(model: Model) -> list[ConnectivityRecord]:
    records: list[ConnectivityRecord] = []
    for r in model.runnables:
        records.extend(split_runnable(model, r)[1])
    return records


def connectivity_table_csv(records: list[ConnectivityRecord]) -> str:
    """CSV rendering of the wiring records, one row per link pair."""
    buf = io.StringIO()
    buf.write("block,handle,inport,outport\n")
    for rec in records:
        rows = max(len(rec.inbound), len(rec.outbound), 1)
        for i in range(rows):
            inp = rec.inbound[i] if i < len(rec.inbound) else ""
            out = rec.outbound[i] if i < len(rec.outbound) else ""
            buf.write(f"{rec.block},{rec.handle},{inp},{out}\n")
    return buf.getvalue()
