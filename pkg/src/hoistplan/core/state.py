"""Timestamped world snapshots and durative-action transition semantics.

Each action has three slots: conditions checked when it starts, conditions
that must hold while it runs, and effects applied at its end.  A state keeps
the actions still in flight in ``pending`` so that concurrent hoists can be
replayed event by event.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .model import (
    MOVE,
    PICKUP,
    PUTDOWN,
    Instance,
    Move,
    PickUp,
    Plan,
    PutDown,
    TankKind,
    TimedAction,
    transport_time,
)


class ActionError(ValueError):
    """An action cannot be started in the given state.

    ``reason`` is one of ``inapplicable``, ``range``, ``safety``, ``capacity``,
    ``window``, ``duration``, ``availability``, ``recipe``.
    """

    def __init__(self, reason: str, message: str):
        super().__init__(f"{reason}: {message}")
        self.reason = reason


def held(h: int) -> int:
    """Location code of a product gripped by hoist ``h``."""
    return -1 - h


def holder(loc: int) -> Optional[int]:
    return -1 - loc if loc < 0 else None


@dataclass(frozen=True)
class WorldState:
    clock: int
    hoist_pos: tuple[int, ...]
    hoist_load: tuple[Optional[int], ...]
    hoist_moving: tuple[bool, ...]
    product_loc: tuple[int, ...]
    product_step: tuple[int, ...]
    since: tuple[int, ...]
    tank_occupant: tuple[Optional[int], ...]
    tank_available: tuple[bool, ...]
    pending: tuple[TimedAction, ...] = ()

    def elapsed(self, inst: Instance, p: int) -> int:
        """Processing ticks of ``p`` in its current tank (0 outside processing tanks)."""
        loc = self.product_loc[p]
        if loc < 0 or inst.tanks[loc].kind is not TankKind.PROCESSING:
            return 0
        return self.clock - self.since[p]

    def iota(self, inst: Instance) -> dict[int, int]:
        return {p: self.elapsed(inst, p) for p in range(len(self.product_loc))}

    def busy(self, h: int) -> Optional[TimedAction]:
        for a in self.pending:
            if a.action.hoist == h:
                return a
        return None

    def is_done(self, inst: Instance, p: int) -> bool:
        loc = self.product_loc[p]
        return (loc >= 0 and inst.tanks[loc].kind is TankKind.UNLOADING
                and self.product_step[p] >= len(inst.products[p].recipe))

    def signed_location(self, h: int) -> str:
        # lifting is folded into pick/put durations, so an idle hoist is always up
        return f"+T{self.hoist_pos[h]}"


def initial_state(inst: Instance, clock: int = 0) -> WorldState:
    nh, nt = len(inst.hoists), len(inst.tanks)
    load: list[Optional[int]] = [None] * nh
    occupant: list[Optional[int]] = [None] * nt
    locs, since = [], []
    for p in inst.products:
        loc = p.initial_location
        if isinstance(loc, (tuple, list)):
            h = int(loc[1])
            if load[h] is not None:
                raise ValueError(f"hoist {h} starts holding two products")
            load[h] = p.id
            locs.append(held(h))
        else:
            loc = int(loc)
            if inst.tanks[loc].kind is TankKind.PROCESSING:
                if occupant[loc] is not None:
                    raise ValueError(f"tank {loc} starts with two products")
                occupant[loc] = p.id
            locs.append(loc)
        since.append(clock - p.initial_elapsed)
    return WorldState(
        clock=clock,
        hoist_pos=tuple(h.initial_position for h in inst.hoists),
        hoist_load=tuple(load),
        hoist_moving=(True,) * nh,
        product_loc=tuple(locs),
        product_step=tuple(p.initial_step for p in inst.products),
        since=tuple(since),
        tank_occupant=tuple(occupant),
        tank_available=tuple(t.available for t in inst.tanks),
    )


def required_duration(state: WorldState, action, inst: Instance) -> int:
    if action.name == MOVE:
        d = transport_time(inst, action.src, action.dst)
        if not state.hoist_moving[action.hoist]:
            d += inst.lift_time
        return d
    return inst.lift_time


def span(state: WorldState, h: int) -> tuple[int, int]:
    """Tank interval physically covered by hoist ``h`` right now."""
    for a in state.pending:
        act = a.action
        if act.hoist == h and act.name == MOVE:
            return (min(act.src, act.dst), max(act.src, act.dst))
    p = state.hoist_pos[h]
    return (p, p)


def _rank(inst: Instance, h: int) -> tuple[int, int]:
    return (inst.hoists[h].initial_position, h)


def spans_compatible(inst: Instance, h: int, sh: tuple[int, int], k: int, sk: tuple[int, int]) -> bool:
    """Safety distance plus no-passing between two hoist spans."""
    d = inst.safety_distance
    if _rank(inst, h) < _rank(inst, k):
        return sh[1] + d <= sk[0]
    return sk[1] + d <= sh[0]


def check_start(state: WorldState, ta: TimedAction, inst: Instance) -> None:
    """Raise :class:`ActionError` unless ``ta`` may start at ``state.clock``."""
    act = ta.action
    h = act.hoist
    if ta.start != state.clock:
        raise ActionError("inapplicable", f"start {ta.start} != clock {state.clock}")
    if not 0 <= h < len(inst.hoists):
        raise ActionError("inapplicable", f"unknown hoist {h}")
    if ta.duration <= 0:
        raise ActionError("duration", "non-positive duration")
    if state.busy(h) is not None:
        raise ActionError("inapplicable", f"hoist {h} is busy")
    hoist = inst.hoists[h]
    name = act.name
    if name == MOVE:
        if act.src == act.dst:
            raise ActionError("duration", "zero-length move")
        if state.hoist_pos[h] != act.src:
            raise ActionError("inapplicable", f"hoist {h} is not at tank {act.src}")
        if not hoist.covers(act.dst):
            raise ActionError("range", f"tank {act.dst} outside hoist {h} range")
        if ta.duration < required_duration(state, act, inst):
            raise ActionError("duration", "move shorter than transport time")
        mine = (min(act.src, act.dst), max(act.src, act.dst))
        for k in range(len(inst.hoists)):
            if k != h and not spans_compatible(inst, h, mine, k, span(state, k)):
                raise ActionError("safety", f"hoist {h} would approach hoist {k}")
        return
    t, p = act.tank, act.product
    if not 0 <= t < len(inst.tanks) or not 0 <= p < len(inst.products):
        raise ActionError("inapplicable", "unknown tank or product")
    if state.hoist_pos[h] != t:
        raise ActionError("inapplicable", f"hoist {h} is not at tank {t}")
    if ta.duration < inst.lift_time:
        raise ActionError("duration", "lift shorter than lift_time")
    kind = inst.tanks[t].kind
    if name == PICKUP:
        if state.hoist_load[h] is not None:
            raise ActionError("inapplicable", f"hoist {h} is not empty")
        if state.product_loc[p] != t or state.is_done(inst, p):
            raise ActionError("inapplicable", f"product {p} is not waiting at tank {t}")
        if state.clock < inst.products[p].arrival_time:
            raise ActionError("inapplicable", f"product {p} has not arrived")
        if kind is TankKind.PROCESSING:
            step = state.product_step[p]
            recipe = inst.products[p].recipe
            e = state.clock - state.since[p]
            if not recipe.lo[step] <= e <= recipe.hi[step]:
                raise ActionError("window", f"product {p} elapsed {e} outside "
                                  f"[{recipe.lo[step]}, {recipe.hi[step]}]")
        return
    if name == PUTDOWN:
        if state.hoist_load[h] != p or state.product_loc[p] != held(h):
            raise ActionError("inapplicable", f"hoist {h} does not hold product {p}")
        if t not in inst.targets(p, state.product_step[p]):
            raise ActionError("recipe", f"tank {t} does not perform product {p}'s next operation")
        if not state.tank_available[t]:
            raise ActionError("availability", f"tank {t} is unavailable")
        if kind is TankKind.PROCESSING and state.tank_occupant[t] is not None:
            raise ActionError("capacity", f"tank {t} is occupied")
        return
    raise ActionError("inapplicable", f"unknown action {name}")


def start_action(state: WorldState, ta: TimedAction, inst: Instance) -> WorldState:
    """Advance to ``ta.start``, check it and apply its at-start effects."""
    if ta.start > state.clock:
        state = advance(state, ta.start, inst)
    check_start(state, ta, inst)
    act = ta.action
    h = act.hoist
    pending = tuple(sorted(state.pending + (ta,), key=_pending_key))
    if act.name == MOVE:
        pos = list(state.hoist_pos)
        pos[h] = act.dst
        return _with(state, hoist_pos=tuple(pos), pending=pending)
    p, t = act.product, act.tank
    if act.name == PICKUP:
        loc = list(state.product_loc)
        loc[p] = held(h)
        load = list(state.hoist_load)
        load[h] = p
        kw = dict(product_loc=tuple(loc), hoist_load=tuple(load), pending=pending)
        if inst.tanks[t].kind is TankKind.PROCESSING:
            step = list(state.product_step)
            step[p] += 1
            kw["product_step"] = tuple(step)
        return _with(state, **kw)
    # PutDown: reserve the tank now, release the product at the end
    kw = dict(pending=pending)
    if inst.tanks[t].kind is TankKind.PROCESSING:
        occ = list(state.tank_occupant)
        occ[t] = p
        kw["tank_occupant"] = tuple(occ)
    return _with(state, **kw)


def _pending_key(a: TimedAction):
    return (a.end, a.sort_key())


def _finish(state: WorldState, ta: TimedAction, inst: Instance, **kw) -> dict:
    act = ta.action
    name = act.name
    if name == MOVE:
        moving = list(kw.get("hoist_moving", state.hoist_moving))
        moving[act.hoist] = True
        kw["hoist_moving"] = tuple(moving)
    elif name == PICKUP:
        if inst.tanks[act.tank].kind is TankKind.PROCESSING:
            occ = list(kw.get("tank_occupant", state.tank_occupant))
            if occ[act.tank] == act.product:
                occ[act.tank] = None
            kw["tank_occupant"] = tuple(occ)
    else:
        loc = list(kw.get("product_loc", state.product_loc))
        loc[act.product] = act.tank
        load = list(kw.get("hoist_load", state.hoist_load))
        load[act.hoist] = None
        since = list(kw.get("since", state.since))
        since[act.product] = ta.end
        kw.update(product_loc=tuple(loc), hoist_load=tuple(load), since=tuple(since))
    return kw


def advance(state: WorldState, t: int, inst: Instance) -> WorldState:
    """Let time pass to ``t``, completing every in-flight action ending by then."""
    if t < state.clock:
        raise ValueError(f"cannot advance backwards from {state.clock} to {t}")
    kw: dict = {}
    rest = []
    for a in state.pending:
        if a.end <= t:
            kw = _finish(state, a, inst, **kw)
        else:
            rest.append(a)
    if len(rest) != len(state.pending):
        kw["pending"] = tuple(rest)
    kw["clock"] = t
    return _with(state, **kw)


def apply_action(state: WorldState, ta: TimedAction, inst: Instance) -> WorldState:
    """State at ``ta.end`` after starting ``ta`` (other in-flight actions also progress)."""
    return advance(start_action(state, ta, inst), ta.end, inst)


def replay(
    state: WorldState,
    plan: Iterable[TimedAction],
    inst: Instance,
    until: Optional[int] = None,
    on_start: Optional[Callable[[WorldState, TimedAction], None]] = None,
) -> WorldState:
    """Start every action in order; finish at ``until`` (default: last end)."""
    actions = list(plan.actions if isinstance(plan, Plan) else plan)
    actions.sort(key=TimedAction.sort_key)
    for ta in actions:
        if ta.start > state.clock:
            state = advance(state, ta.start, inst)
        if on_start is not None:
            on_start(state, ta)
        state = start_action(state, ta, inst)
    end = until if until is not None else max([state.clock] + [a.end for a in state.pending])
    return advance(state, max(end, state.clock), inst)


def set_moving(state: WorldState, h: int, moving: bool) -> WorldState:
    flags = list(state.hoist_moving)
    flags[h] = moving
    return _with(state, hoist_moving=tuple(flags))


def set_tank_available(state: WorldState, t: int, available: bool) -> WorldState:
    flags = list(state.tank_available)
    flags[t] = available
    return _with(state, tank_available=tuple(flags))


def overall_ok(state: WorldState, inst: Instance) -> bool:
    """Over-all conditions of every in-flight action hold in ``state``."""
    seen = set()
    for a in state.pending:
        act = a.action
        if act.hoist in seen:
            return False
        seen.add(act.hoist)
        if act.name == MOVE:
            if state.hoist_pos[act.hoist] != act.dst:
                return False
            continue
        if state.hoist_pos[act.hoist] != act.tank:
            return False
        if act.name == PICKUP:
            if state.hoist_load[act.hoist] != act.product:
                return False
        else:
            if state.hoist_load[act.hoist] != act.product:
                return False
            if inst.tanks[act.tank].kind is TankKind.PROCESSING and state.tank_occupant[act.tank] != act.product:
                return False
    return True


def state_violations(state: WorldState, inst: Instance) -> list[str]:
    """Structural invariants of a snapshot; empty when consistent."""
    out = []
    nh = len(inst.hoists)
    for h in range(nh):
        hoist = inst.hoists[h]
        lo, hi = span(state, h)
        if not (hoist.covers(lo) and hoist.covers(hi)):
            out.append(f"hoist {h} outside range")
        p = state.hoist_load[h]
        if p is not None and state.product_loc[p] != held(h):
            out.append(f"hoist {h} load inconsistent")
        for k in range(h + 1, nh):
            if not spans_compatible(inst, h, (lo, hi), k, span(state, k)):
                out.append(f"hoists {h},{k} too close")
    for p, loc in enumerate(state.product_loc):
        h = holder(loc)
        if h is not None and state.hoist_load[h] != p:
            out.append(f"product {p} location inconsistent")
    counts: dict[int, int] = {}
    for p, loc in enumerate(state.product_loc):
        if loc >= 0 and inst.tanks[loc].kind is TankKind.PROCESSING:
            counts[loc] = counts.get(loc, 0) + 1
    for t, c in counts.items():
        if c > 1:
            out.append(f"tank {t} holds {c} products")
    return out


def _with(state: WorldState, **kw) -> WorldState:
    d = dict(state.__dict__)
    d.update(kw)
    return WorldState(**d)


def timed(action, start: int, state: WorldState, inst: Instance) -> TimedAction:
    """Attach the canonical duration of ``action`` in ``state``."""
    return TimedAction(action, start, required_duration(state, action, inst))


__all__ = [
    "ActionError", "WorldState", "initial_state", "check_start", "start_action",
    "advance", "apply_action", "replay", "overall_ok", "state_violations", "held",
    "holder", "span", "spans_compatible", "required_duration", "set_moving",
    "set_tank_available", "timed", "Move", "PickUp", "PutDown",
]
