"""Continuous-plant co-simulation: DC servo dynamics and discrete PID.

Plants follow b/(s^2 + a*s) with two states (position, velocity) and a
zero-order-hold actuator input.  Integration uses fixed-micro-step RK4 at
100 us; the actuator value changes only at commit instants, so the
trajectory is determined by the committed actuation history (probe
instants merely split integration steps, which perturbs nothing beyond
RK4's truncation error).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .model import PlantDecl, TimeTick
from .trace import SignalLog

MICRO_STEP_US = 100


@dataclass(frozen=True)
class PidParams:
    """Discrete PID with filtered derivative.

    ``ti``/``td`` are in seconds; ``h`` is the nominal sample period in
    seconds (the owning task's period).  ``ti = math.inf`` switches the
    integral term off.
    """

    k: float
    ti: float
    td: float = 0.0
    n_filter: float = 10.0
    h: float = 0.001


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    derivative: float = 0.0
    prev_error: float = 0.0


def pid_eval(params: PidParams, error: float, state: PidState) -> tuple[float, PidState]:
    """One controller evaluation: u = k*(e + I + D), then update I and D."""
    td, h, n = params.td, params.h, params.n_filter
    if td > 0.0:
        alpha = td / (td + n * h)
        derivative = alpha * state.derivative + alpha * n * (error - state.prev_error)
    else:
        derivative = 0.0
    u = params.k * (error + state.integral + derivative)
    integral = state.integral + (h / params.ti) * error if math.isfinite(params.ti) else state.integral
    return u, PidState(integral=integral, derivative=derivative, prev_error=error)


@dataclass
class PlantSim:
    """Dynamic plant state plus its logged trajectory.

    ``y_log``/``r_log`` record position and reference at every integration
    micro-step, so tracking-error statistics do not depend on when the
    scheduler happens to probe the plant.
    """

    decl: PlantDecl
    position: float = 0.0
    velocity: float = 0.0
    u: float = 0.0
    now: TimeTick = 0

    def __post_init__(self) -> None:
        self.y_log = SignalLog(name=f"{self.decl.id}.y")
        self.r_log = SignalLog(name=f"{self.decl.id}.r")
        self.y_log.append(0, self.position)
        self.r_log.append(0, self.reference(0))

    def reference(self, t: TimeTick) -> float:
        half = self.decl.ref_period // 2
        return self.decl.ref_amplitude if (t % self.decl.ref_period) < half else -self.decl.ref_amplitude

    def _rk4(self, h: float) -> None:
        a, b, u = self.decl.a, self.decl.b, self.u

        def f(x: float, v: float) -> tuple[float, float]:
            return v, b * u - a * v

        x, v = self.position, self.velocity
        k1x, k1v = f(x, v)
        k2x, k2v = f(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
        k3x, k3v = f(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
        k4x, k4v = f(x + h * k3x, v + h * k3v)
        self.position = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        self.velocity = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)

    def advance_to(self, t: TimeTick, micro_step: TimeTick = MICRO_STEP_US) -> None:
        """Integrate with the held input up to instant ``t``."""
        while self.now < t:
            dt = min(micro_step, t - self.now)
            self._rk4(dt * 1e-6)
            self.now += dt
            self.y_log.append(self.now, self.position)
            self.r_log.append(self.now, self.reference(self.now))

    def set_input(self, u: float) -> None:
        self.u = u


def plant_step(plant: PlantSim, dt: TimeTick, micro_step: TimeTick = MICRO_STEP_US) -> PlantSim:
    """Advance ``plant`` by ``dt`` microseconds and return it."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    plant.advance_to(plant.now + dt, micro_step)
    return plant


def mean_abs_tracking_error(plant: PlantSim, upto: TimeTick | None = None) -> float:
    """Mean |reference - position| over the logged trajectory."""
    pairs = [
        (r, y)
        for (t, r), (_, y) in zip(plant.r_log.samples, plant.y_log.samples)
        if upto is None or t <= upto
    ]
    if not pairs:
        return 0.0
    return sum(abs(r - y) for r, y in pairs) / len(pairs)


def pid_params_from_block(params: dict) -> PidParams:
    return PidParams(
        k=params["k"], ti=params["ti"], td=params["td"],
        n_filter=params["n_filter"], h=params["h"],
    )


def controller_runnable_binding(
    runnable_id: str,
    plant_id: str,
    pid: PidParams,
    budget: TimeTick,
) -> dict:
    """Model-dict fragment for one control loop runnable.

    The probe reads reference and position when the runnable's segment
    starts; the actuator commits the new drive value when it ends, so
    sensing-to-actuation latency equals the runnable's response time.
    Returns {"blocks": [...], "connections": [...], "runnable": {...}}.
    """
    p = runnable_id.lower()
    blocks = [
        {"id": f"{p}_probe", "kind": "PlantProbe", "params": {"plant": plant_id}},
        {"id": f"{p}_err", "kind": "Sum", "params": {"signs": "+-"}},
        {
            "id": f"{p}_pid",
            "kind": "PidController",
            "params": {"k": pid.k, "ti": pid.ti, "td": pid.td,
                       "n_filter": pid.n_filter, "h": pid.h},
        },
        {"id": f"{p}_act", "kind": "PlantActuate", "params": {"plant": plant_id}},
    ]
    connections = [
        {"src": [f"{p}_probe", 0], "dst": [f"{p}_err", 0]},
        {"src": [f"{p}_probe", 1], "dst": [f"{p}_err", 1]},
        {"src": [f"{p}_err", 0], "dst": [f"{p}_pid", 0]},
        {"src": [f"{p}_pid", 0], "dst": [f"{p}_act", 0]},
    ]
    runnable = {
        "id": runnable_id,
        "blocks": [b["id"] for b in blocks],
        "budget_us": budget,
    }
    return {"blocks": blocks, "connections": connections, "runnable": runnable}
