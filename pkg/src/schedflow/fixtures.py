"""Canonical fixture models used by tests, demos, and the shipped files.

Constants that the scenarios leave open (R1's written constant, store and
delay initial values, plant dynamics, PID gains, reference wave) are repo
choices, documented here, not facts of the scenarios themselves.
"""

from __future__ import annotations

from .model import Model, model_from_dict
from .plants import PidParams, controller_runnable_binding

# Shared plant benchmark constants: the classic position servo b/(s^2+a*s).
SERVO_A = 1.0
SERVO_B = 1000.0
REF_AMPLITUDE = 1.0
# Half a reference period must exceed the loop's ~50 ms settle time, which
# the 4-6 ms sample periods bound from below; 240 ms leaves clean margin.
REF_PERIOD_US = 240_000

# Controller gains tuned once against the timed simulator (seconds).
PID_K = 3.0
PID_TI = 2.0
PID_TD = 0.03
PID_N = 30.0


def _const_runnable(rid: str, value: float, budget: int) -> dict:
    p = rid.lower()
    return {
        "blocks": [
            {"id": f"{p}_src", "kind": "Constant", "params": {"value": value}},
            {"id": f"{p}_out", "kind": "Outport", "params": {}},
        ],
        "connections": [{"src": [f"{p}_src", 0], "dst": [f"{p}_out", 0]}],
        "runnable": {"id": rid, "blocks": [f"{p}_src", f"{p}_out"], "budget_us": budget},
    }


def _assemble(parts: list[dict], tasks: list[dict], stores: dict | None = None,
              plants: list[dict] | None = None, horizon: int = 0, seed: int = 0) -> dict:
    doc: dict = {
        "blocks": [],
        "connections": [],
        "stores": stores or {},
        "runnables": [],
        "tasks": tasks,
        "sim": {"horizon_us": horizon, "seed": seed},
    }
    if plants:
        doc["plants"] = plants
    for part in parts:
        doc["blocks"].extend(part["blocks"])
        doc["connections"].extend(part["connections"])
        doc["runnables"].append(part["runnable"])
    return doc


def model_a_dict() -> dict:
    """Two tasks, three runnables: the basic deferral-free schedule."""
    parts = [
        _const_runnable("R1", 1.0, 3000),
        _const_runnable("R2", 2.0, 3000),
        _const_runnable("R3", 3.0, 3000),
    ]
    tasks = [
        {"id": "T1", "period_us": 10_000, "priority": 2, "runnables": ["R1"]},
        {"id": "T2", "period_us": 20_000, "priority": 1, "runnables": ["R2", "R3"]},
    ]
    return _assemble(parts, tasks, horizon=20_000)


def model_b_dict() -> dict:
    """Four runnables on three tasks: exercises lookahead deferral."""
    parts = [
        _const_runnable("R1", 1.0, 3000),
        _const_runnable("R2", 2.0, 3000),
        _const_runnable("R3", 3.0, 5000),
        _const_runnable("R4", 4.0, 2000),
    ]
    tasks = [
        {"id": "T1", "period_us": 10_000, "priority": 3, "runnables": ["R1"]},
        {"id": "T2", "period_us": 20_000, "priority": 2, "runnables": ["R2", "R3"]},
        {"id": "T3", "period_us": 30_000, "priority": 1, "runnables": ["R4"]},
    ]
    return _assemble(parts, tasks, horizon=60_000)


def model_race_dict() -> dict:
    """Shared-store model whose timed schedule exposes a data race.

    R1 writes the constant 1 to store A.  R2 accumulates: it reads A and
    writes back A plus its previous sum.  R3 differentiates: it outputs A
    minus its previous output.  Store and delay initials are 0.
    """
    r1 = {
        "blocks": [
            {"id": "r1_k", "kind": "Constant", "params": {"value": 1.0}},
            {"id": "r1_write", "kind": "DataStoreWrite", "params": {"store": "A"}},
            {"id": "r1_out", "kind": "Outport", "params": {}},
        ],
        "connections": [
            {"src": ["r1_k", 0], "dst": ["r1_write", 0]},
            {"src": ["r1_k", 0], "dst": ["r1_out", 0]},
        ],
        "runnable": {"id": "R1", "blocks": ["r1_k", "r1_write", "r1_out"], "budget_us": 3000},
    }
    r2 = {
        "blocks": [
            {"id": "r2_read", "kind": "DataStoreRead", "params": {"store": "A"}},
            {"id": "r2_delay", "kind": "UnitDelay", "params": {}},
            {"id": "r2_sum", "kind": "Sum", "params": {"signs": "++"}},
            {"id": "r2_write", "kind": "DataStoreWrite", "params": {"store": "A"}},
            {"id": "r2_out", "kind": "Outport", "params": {}},
        ],
        "connections": [
            {"src": ["r2_read", 0], "dst": ["r2_sum", 0]},
            {"src": ["r2_delay", 0], "dst": ["r2_sum", 1]},
            {"src": ["r2_sum", 0], "dst": ["r2_write", 0]},
            {"src": ["r2_sum", 0], "dst": ["r2_delay", 0]},
            {"src": ["r2_sum", 0], "dst": ["r2_out", 0]},
        ],
        "runnable": {
            "id": "R2",
            "blocks": ["r2_read", "r2_delay", "r2_sum", "r2_write", "r2_out"],
            "budget_us": 3000,
        },
    }
    r3 = {
        "blocks": [
            {"id": "r3_read", "kind": "DataStoreRead", "params": {"store": "A"}},
            {"id": "r3_delay", "kind": "UnitDelay", "params": {}},
            {"id": "r3_sub", "kind": "Sum", "params": {"signs": "+-"}},
            {"id": "r3_out", "kind": "Outport", "params": {}},
        ],
        "connections": [
            {"src": ["r3_read", 0], "dst": ["r3_sub", 0]},
            {"src": ["r3_delay", 0], "dst": ["r3_sub", 1]},
            {"src": ["r3_sub", 0], "dst": ["r3_out", 0]},
            {"src": ["r3_sub", 0], "dst": ["r3_delay", 0]},
        ],
        "runnable": {
            "id": "R3",
            "blocks": ["r3_read", "r3_delay", "r3_sub", "r3_out"],
            "budget_us": 5000,
        },
    }
    tasks = [
        {"id": "T1", "period_us": 10_000, "priority": 2, "runnables": ["R1"]},
        {"id": "T2", "period_us": 20_000, "priority": 1, "runnables": ["R2", "R3"]},
    ]
    return _assemble([r1, r2, r3], tasks, stores={"A": 0.0}, horizon=120_000)


def model_servo_dict() -> dict:
    """Three PID servo loops on three overloaded tasks."""
    parts = []
    plants = []
    periods = {"R1": 4000, "R2": 5000, "R3": 6000}
    for i, rid in enumerate(("R1", "R2", "R3"), start=1):
        plant_id = f"servo{i}"
        plants.append(
            {
                "id": plant_id,
                "a": SERVO_A,
                "b": SERVO_B,
                "ref_amplitude": REF_AMPLITUDE,
                "ref_period_us": REF_PERIOD_US,
            }
        )
        pid = PidParams(k=PID_K, ti=PID_TI, td=PID_TD, n_filter=PID_N,
                        h=periods[rid] / 1e6)
        parts.append(controller_runnable_binding(rid, plant_id, pid, budget=2000))
    tasks = [
        {"id": "T1", "period_us": 4000, "priority": 3, "runnables": ["R1"]},
        {"id": "T2", "period_us": 5000, "priority": 2, "runnables": ["R2"]},
        {"id": "T3", "period_us": 6000, "priority": 1, "runnables": ["R3"]},
    ]
    return _assemble(parts, tasks, plants=plants, horizon=60_000)


def model_a() -> Model:
    return model_from_dict(model_a_dict())


def model_b() -> Model:
    return model_from_dict(model_b_dict())


def model_race() -> Model:
    return model_from_dict(model_race_dict())


def model_servo() -> Model:
    return model_from_dict(model_servo_dict())


FIXTURES = {
    "model_a": model_a_dict,
    "model_b": model_b_dict,
    "model_race": model_race_dict,
    "model_servo": model_servo_dict,
}
