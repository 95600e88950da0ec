"""Discrete-event run of a production line while the hierarchical loop replans.

The line clock is virtual.  Each planning round is launched at the previous
round's recompute instant ``eps_hat`` on the state projected to ``eps``; its
measured runtime (seconds, one tick per second) is injected into the virtual
timeline.  A round that finishes after ``eps`` stalls the line, and the stall
is what ``waiting_time`` accumulates.  Events become visible to the planner
at the first launch instant at or after their timestamp.

Scenario files are JSON::

    {"format": "hoistplan-scenario/1",
     "events": [{"at": 120, "kind": "product_arrival", "product": 7},
                {"at": 400, "kind": "tank_down", "tank": 3}, ...]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

from .core.model import PICKUP, PUTDOWN, Instance, Plan, TankKind
from .core.state import WorldState, replay
from .core.validate import validate_plan
from .hierarchy import HitConfig, HitSession

ARRIVAL = "product_arrival"
TANK_DOWN = "tank_down"
TANK_UP = "tank_up"
EVENT_KINDS = (ARRIVAL, TANK_DOWN, TANK_UP)
SCENARIO_FORMAT = "hoistplan-scenario/1"
CSV_HEADER = "seed,NT,NH,Nrho,success,makespan,cpu_s,wait_s"


class ScenarioEvent(NamedTuple):
    at: int
    kind: str
    target: int

    def check(self) -> None:
        if self.at < 0:
            raise ValueError("event time must be >= 0")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")

    def to_dict(self) -> dict:
        key = "product" if self.kind == ARRIVAL else "tank"
        return {"at": self.at, "kind": self.kind, key: self.target}


def dump_scenario(events: Iterable[ScenarioEvent], path) -> None:
    doc = {"format": SCENARIO_FORMAT, "events": [e.to_dict() for e in events]}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_scenario(path) -> list[ScenarioEvent]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format", SCENARIO_FORMAT) != SCENARIO_FORMAT:
        raise ValueError(f"unsupported scenario format {doc.get('format')!r}")
    out = []
    for d in doc.get("events", []):
        kind = d["kind"]
        target = d["product"] if kind == ARRIVAL else d["tank"]
        ev = ScenarioEvent(int(d["at"]), kind, int(target))
        ev.check()
        out.append(ev)
    return sorted(out, key=lambda e: (e.at, e.kind, e.target))


@dataclass
class Metrics:
    success: bool
    makespan: int
    cpu_time: float
    waiting_time: int
    per_product_makespan: list[int] = field(default_factory=list)
    plan: Plan = field(default_factory=Plan)
    reason: str = ""
    rounds: int = 0
    outages: list[tuple[int, int, int]] = field(default_factory=list)

    def csv_row(self, seed, n_tanks: int, n_hoists: int, n_products: int) -> str:
        return (f"{seed},{n_tanks},{n_hoists},{n_products},{int(self.success)},{self.makespan},"
                f"{self.cpu_time:.3f},{self.waiting_time:.2f}")


def project_state(state: WorldState, plan_suffix: Plan, to: int, inst: Instance) -> WorldState:
    """State at ``to`` after starting every suffix action that starts by then."""
    if to < state.clock:
        raise ValueError("cannot project into the past")
    acts = [a for a in plan_suffix.actions if a.start <= to]
    return replay(state, acts, inst, until=to)


def measured_ticks(k: int, seconds: float) -> int:
    """Default runtime model: wall-clock seconds rounded up to whole ticks."""
    return max(1, math.ceil(seconds))


def per_product_makespans(plan: Plan, inst: Instance) -> list[int]:
    loaded: dict[int, int] = {}
    out: dict[int, int] = {}
    for a in plan.actions:
        act = a.action
        kind = inst.tanks[act.tank].kind if act.name in (PICKUP, PUTDOWN) else None
        if act.name == PICKUP and kind is TankKind.LOADING and act.product not in loaded:
            loaded[act.product] = a.start
        elif act.name == PUTDOWN and kind is TankKind.UNLOADING and act.product in loaded:
            out[act.product] = a.end - loaded[act.product]
    return [out[p] for p in sorted(out)]


def run_simulation(
    inst: Instance,
    events: Sequence[ScenarioEvent] = (),
    cfg: Optional[HitConfig] = None,
    planner=None,
    runtime_model: Optional[Callable[[int, float], int]] = None,
) -> Metrics:
    """Execute the line under concurrent replanning and report the metrics.

    Products named by an arrival event are hidden until that event; every
    other product is known from the start.
    """
    cfg = cfg or HitConfig()
    events = sorted(events, key=lambda e: (e.at, e.kind, e.target))
    for e in events:
        e.check()
    hidden = {e.target for e in events if e.kind == ARRIVAL}
    known = [p for p in range(len(inst.products)) if p not in hidden]
    session = HitSession(inst, cfg, planner, known=known,
                         runtime_model=runtime_model or measured_ticks)
    outages: list[list[int]] = []
    down: dict[int, list[int]] = {}
    i = 0

    def apply(upto: int) -> None:
        nonlocal i
        while i < len(events) and events[i].at <= upto:
            ev = events[i]
            i += 1
            if ev.kind == ARRIVAL:
                session.reveal([ev.target])
            elif ev.kind == TANK_DOWN:
                session.set_tank(ev.target, False)
                if ev.target not in down:
                    rec = [ev.target, session.state.clock, 10**18]
                    down[ev.target] = rec
                    outages.append(rec)
            else:
                session.set_tank(ev.target, True)
                rec = down.pop(ev.target, None)
                if rec is not None:
                    rec[2] = session.state.clock

    apply(0)
    while True:
        if session.finished:
            if session.failed is not None or i >= len(events):
                break
            session.advance_to(events[i].at)
            apply(events[i].at)
            continue
        apply(session.eps_hat)
        session.step()
    res = session.result()
    plan = res.plan
    success = res.success
    reason = res.reason
    if success:
        report = validate_plan(inst, plan, outages=[tuple(o) for o in outages])
        if not report.ok:
            success, reason = False, report.summary()
        makespan = report.makespan
    else:
        makespan = plan.makespan if len(plan) else 0
    return Metrics(success, makespan, res.cpu_time, session.waiting, per_product_makespans(plan, inst),
                   plan, reason, len(res.rounds), [tuple(o) for o in outages])
