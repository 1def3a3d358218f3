import pytest

from schedflow.model import model_from_dict
from schedflow.sorting import (
    AlgebraicLoopError,
    feedthrough_edges,
    model_sorted_orders,
    sorted_order,
)


def _accumulator_model():
    """Store read, delay, sum, store write: the accumulator sub-graph."""
    return model_from_dict(
        {
            "blocks": [
                {"id": "read", "kind": "DataStoreRead", "params": {"store": "A"}},
                {"id": "delay", "kind": "UnitDelay"},
                {"id": "sum", "kind": "Sum", "params": {"signs": "++"}},
                {"id": "write", "kind": "DataStoreWrite", "params": {"store": "A"}},
            ],
            "connections": [
                {"src": ["read", 0], "dst": ["sum", 0]},
                {"src": ["delay", 0], "dst": ["sum", 1]},
                {"src": ["sum", 0], "dst": ["write", 0]},
                {"src": ["sum", 0], "dst": ["delay", 0]},
            ],
            "stores": {"A": 0.0},
            "runnables": [],
            "tasks": [],
        }
    )


def test_feedthrough_edges_accumulator():
    m = _accumulator_model()
    ids = ["read", "delay", "sum", "write"]
    edges = feedthrough_edges(m, ids)
    assert edges == {("read", "sum"), ("delay", "sum"), ("sum", "write")}
    assert ("sum", "delay") not in edges


def test_feedthrough_single_edge():
    m = model_from_dict(
        {
            "blocks": [
                {"id": "c", "kind": "Constant"},
                {"id": "o", "kind": "Outport"},
            ],
            "connections": [{"src": ["c", 0], "dst": ["o", 0]}],
            "runnables": [],
            "tasks": [],
        }
    )
    assert feedthrough_edges(m, ["c", "o"]) == {("c", "o")}


def test_delay_chain_has_no_edges():
    m = model_from_dict(
        {
            "blocks": [
                {"id": "d1", "kind": "UnitDelay"},
                {"id": "d2", "kind": "UnitDelay"},
            ],
            "connections": [
                {"src": ["d1", 0], "dst": ["d2", 0]},
                {"src": ["d2", 0], "dst": ["d1", 0]},
            ],
            "runnables": [],
            "tasks": [],
        }
    )
    assert feedthrough_edges(m, ["d1", "d2"]) == set()


def test_sorted_order_accumulator_labels():
    m = _accumulator_model()
    order = sorted_order(m, ["read", "delay", "sum", "write"], context=3)
    assert order.entries == (("read", 0), ("delay", 1), ("sum", 2), ("write", 3))
    assert order.labels() == ["3:0", "3:1", "3:2", "3:3"]


def test_sorted_order_respects_every_edge():
    m = _accumulator_model()
    ids = ["read", "delay", "sum", "write"]
    order = sorted_order(m, ids)
    pos = {bid: p for bid, p in order.entries}
    for a, b in feedthrough_edges(m, ids):
        assert pos[a] < pos[b]
    assert sorted(pos.values()) == list(range(len(ids)))


def test_sorted_order_is_pure():
    m = _accumulator_model()
    ids = ["read", "delay", "sum", "write"]
    assert sorted_order(m, ids) == sorted_order(m, ids)


def test_algebraic_loop_names_blocks():
    m = model_from_dict(
        {
            "blocks": [
                {"id": "g1", "kind": "Gain"},
                {"id": "g2", "kind": "Gain"},
            ],
            "connections": [
                {"src": ["g1", 0], "dst": ["g2", 0]},
                {"src": ["g2", 0], "dst": ["g1", 0]},
            ],
            "runnables": [],
            "tasks": [],
        }
    )
    with pytest.raises(AlgebraicLoopError) as exc:
        sorted_order(m, ["g1", "g2"])
    assert set(exc.value.blocks) == {"g1", "g2"}


def test_tie_break_follows_declaration_order():
    m = model_from_dict(
        {
            "blocks": [
                {"id": "c2", "kind": "Constant"},
                {"id": "c1", "kind": "Constant"},
            ],
            "connections": [],
            "runnables": [],
            "tasks": [],
        }
    )
    order = sorted_order(m, ["c2", "c1"])
    assert order.block_ids() == ("c2", "c1")


def test_model_contexts_number_runnables_from_one():
    from schedflow import fixtures

    orders = model_sorted_orders(fixtures.model_race())
    contexts = [o.context for o in orders]
    assert contexts == [1, 2, 3]
    by_ctx = {o.context: o for o in orders}
    assert by_ctx[2].block_ids()[0] == "r2_read"
    assert by_ctx[2].position("r2_sum") == 2


def test_root_context_for_unowned_blocks():
    m = model_from_dict(
        {
            "blocks": [
                {"id": "stray", "kind": "Constant"},
                {"id": "c", "kind": "Constant"},
            ],
            "connections": [],
            "runnables": [{"id": "R", "blocks": ["c"], "budget_us": 100}],
            "tasks": [{"id": "T", "period_us": 1000, "priority": 1, "runnables": ["R"]}],
        }
    )
    orders = model_sorted_orders(m)
    assert [(o.context, o.block_ids()) for o in orders] == [
        (0, ("stray",)),
        (1, ("c",)),
    ]
