"""Deterministic block execution order from feedthrough dependencies.

A block must run before any block whose direct-feedthrough inport it
drives.  Inputs of UnitDelay blocks do not constrain the order (the state
decouples producer and consumer), and data stores couple blocks through
names rather than wires, so they contribute no edges either.

Among blocks that are simultaneously eligible the earliest-declared one is
placed first.  Declaration order is the order of the model file, which
makes the result a pure function of the model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import Model


class AlgebraicLoopError(Exception):
    """A cycle of direct-feedthrough connections; names the blocks on it."""

    def __init__(self, blocks: Sequence[str]):
        self.blocks = tuple(blocks)
        super().__init__("algebraic loop through blocks: " + " -> ".join(self.blocks))


@dataclass(frozen=True)
class SortedOrder:
    """Total execution order for the blocks of one context.

    ``context`` 0 is the model root; context k is the k-th runnable
    sub-graph.  Labels render as ``ctx:pos``.
    """

    context: int
    entries: tuple[tuple[str, int], ...]

    def position(self, block_id: str) -> int:
        for bid, pos in self.entries:
            if bid == block_id:
                return pos
        raise KeyError(block_id)

    def block_ids(self) -> tuple[str, ...]:
        return tuple(bid for bid, _ in self.entries)

    def labels(self) -> list[str]:
        return [f"{self.context}:{pos}" for _, pos in self.entries]


def feedthrough_edges(model: Model, block_ids: Iterable[str]) -> set[tuple[str, str]]:
    """Directed edges (a, b) where a's output feeds a feedthrough inport of b.

    Only connections with both endpoints inside ``block_ids`` count;
    cross-runnable wiring is sequenced by the scheduler, not the sort.
    """
    members = set(block_ids)
    blocks = model.block_map()
    edges: set[tuple[str, str]] = set()
    for c in model.connections:
        if c.src_block not in members or c.dst_block not in members:
            continue
        dst = blocks[c.dst_block]
        if c.dst_port in dst.feedthrough_inports():
            edges.add((c.src_block, c.dst_block))
    return edges


def sorted_order(model: Model, block_ids: Sequence[str], context: int = 0) -> SortedOrder:
    """Topological order over feedthrough edges, declaration order breaking ties.

    ``block_ids`` gives the declaration order of the context.  Raises
    AlgebraicLoopError when the feedthrough graph has a cycle.
    """
    members = list(block_ids)
    edges = feedthrough_edges(model, members)
    indegree = {bid: 0 for bid in members}
    successors: dict[str, list[str]] = {bid: [] for bid in members}
    for a, b in sorted(edges):
        indegree[b] += 1
        successors[a].append(b)

    placed: list[tuple[str, int]] = []
    remaining = dict(indegree)
    done: set[str] = set()
    while len(placed) < len(members):
        pick = next((bid for bid in members if bid not in done and remaining[bid] == 0), None)
        if pick is None:
            raise AlgebraicLoopError(_find_cycle(members, edges, done))
        done.add(pick)
        placed.append((pick, len(placed)))
        for succ in successors[pick]:
            remaining[succ] -= 1
    return SortedOrder(context=context, entries=tuple(placed))


def _find_cycle(members: Sequence[str], edges: set[tuple[str, str]],
                done: set[str]) -> list[str]:
    """Walk predecessors through the unplaced remainder until a node repeats.

    Every unplaced node kept a positive remaining indegree, i.e. it has an
    unplaced predecessor, so the walk must close a loop.
    """
    predecessors: dict[str, list[str]] = {bid: [] for bid in members}
    for a, b in sorted(edges):
        predecessors[b].append(a)
    node = next(bid for bid in members if bid not in done)
    seen: list[str] = []
    while node not in seen:
        seen.append(node)
        node = next(p for p in predecessors[node] if p not in done)
    cycle = seen[seen.index(node):]
    cycle.reverse()  # report in data-flow direction
    return cycle


def model_sorted_orders(model: Model) -> list[SortedOrder]:
    """Sorted order per context: root strays first, then each runnable.

    Context numbering follows the declaration order of runnables starting
    at 1; blocks outside every runnable form context 0.
    """
    owned = set()
    for r in model.runnables:
        owned.update(r.blocks)
    root = [b.id for b in model.blocks if b.id not in owned]
    out = []
    if root:
        out.append(sorted_order(model, root, context=0))
    for k, r in enumerate(model.runnables, start=1):
        out.append(sorted_order(model, r.blocks, context=k))
    return out
