"""Plan validation by interval replay.

This checker works on per-hoist, per-product and per-tank timelines built
directly from the plan; it deliberately does not reuse the transition code in
:mod:`hoistplan.core.state`, so the two can be used as oracles for each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .model import MOVE, PICKUP, PUTDOWN, Instance, Plan, Recipe, TankKind, transport_time

# ordering used to break ties between violations found at the same tick
REASONS = (
    "applicability",
    "duration",
    "overlap",
    "range",
    "safety",
    "capacity",
    "availability",
    "recipe_order",
    "window_short",
    "window_exceeded",
    "incomplete",
)


@dataclass(frozen=True)
class Violation:
    time: int
    reason: str
    detail: str

    def key(self):
        return (self.time, REASONS.index(self.reason), self.detail)


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)
    makespan: int = 0
    hoist_pos: dict = field(default_factory=dict)
    product_loc: dict = field(default_factory=dict)
    product_step: dict = field(default_factory=dict)
    unload_times: dict = field(default_factory=dict)
    load_times: dict = field(default_factory=dict)

    @property
    def reason(self) -> Optional[str]:
        return self.violations[0].reason if self.violations else None

    @property
    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None

    def __bool__(self) -> bool:
        return self.ok

    def summary(self) -> str:
        if self.ok:
            return f"valid, makespan {self.makespan}"
        v = self.first
        return f"invalid at t={v.time}: {v.reason} ({v.detail})"


def validate_plan(
    inst: Instance,
    plan: Plan,
    initial=None,
    require_complete: bool = True,
    outages: Sequence[tuple[int, int, int]] = (),
) -> ValidationReport:
    """Check ``plan`` against every line constraint.

    ``initial`` is an optional :class:`WorldState` without in-flight actions
    (default: the instance's own initial configuration at t=0).  ``outages``
    lists ``(tank, down_at, up_at)`` periods during which no product may be put
    into the tank.
    """
    nh, nt, npr = len(inst.hoists), len(inst.tanks), len(inst.products)
    if initial is None:
        clock0 = 0
        pos0 = [h.initial_position for h in inst.hoists]
        load0: list = [None] * nh
        loc0: list = []
        step0 = [p.initial_step for p in inst.products]
        entered0 = [-p.initial_elapsed for p in inst.products]
        for p in inst.products:
            loc = p.initial_location
            if isinstance(loc, (tuple, list)):
                loc0.append(("hoist", int(loc[1])))
                load0[int(loc[1])] = p.id
            else:
                loc0.append(("tank", int(loc)))
        available = [t.available for t in inst.tanks]
    else:
        if initial.pending:
            raise ValueError("initial state must not have in-flight actions")
        clock0 = initial.clock
        pos0 = list(initial.hoist_pos)
        load0 = list(initial.hoist_load)
        loc0 = [("hoist", -1 - l) if l < 0 else ("tank", l) for l in initial.product_loc]
        step0 = list(initial.product_step)
        entered0 = list(initial.since)
        available = list(initial.tank_available)

    bad: list[Violation] = []

    def fail(t, reason, detail):
        bad.append(Violation(int(t), reason, detail))

    acts = list(plan.actions)
    sane = []
    for a in acts:
        act = a.action
        if a.duration <= 0:
            fail(a.start, "duration", f"{act} has non-positive duration")
            continue
        if a.start < clock0:
            fail(a.start, "applicability", f"{act} starts before t={clock0}")
            continue
        if not 0 <= act.hoist < nh:
            fail(a.start, "applicability", f"unknown hoist in {act}")
            continue
        tanks = (act.src, act.dst) if act.name == MOVE else (act.tank,)
        if any(not 0 <= t < nt for t in tanks):
            fail(a.start, "applicability", f"unknown tank in {act}")
            continue
        if act.name != MOVE and not 0 <= act.product < npr:
            fail(a.start, "applicability", f"unknown product in {act}")
            continue
        sane.append(a)

    # hoist timelines
    moves_of: dict[int, list] = {h: [] for h in range(nh)}
    final_pos = {}
    for h in range(nh):
        pos, load, free_at = pos0[h], load0[h], clock0
        hoist = inst.hoists[h]
        for a in sorted((a for a in sane if a.action.hoist == h), key=lambda a: a.start):
            act = a.action
            if a.start < free_at:
                fail(a.start, "overlap", f"hoist {h} starts {act.name} while busy")
            free_at = max(free_at, a.end)
            if act.name == MOVE:
                if act.src != pos:
                    fail(a.start, "applicability", f"hoist {h} moves from {act.src} but is at {pos}")
                if not (hoist.covers(act.src) and hoist.covers(act.dst)):
                    fail(a.start, "range", f"hoist {h} leaves its range to tank {act.dst}")
                if act.src == act.dst:
                    fail(a.start, "duration", f"hoist {h} zero-length move")
                elif a.duration < transport_time(inst, act.src, act.dst):
                    fail(a.start, "duration", f"hoist {h} moves faster than allowed")
                moves_of[h].append((a.start, a.end, min(act.src, act.dst), max(act.src, act.dst), act.dst))
                pos = act.dst
                continue
            if a.duration < inst.lift_time:
                fail(a.start, "duration", f"hoist {h} lifts faster than allowed")
            if act.tank != pos:
                fail(a.start, "applicability", f"hoist {h} lifts at {act.tank} but is at {pos}")
            if act.name == PICKUP:
                if load is not None:
                    fail(a.start, "applicability", f"hoist {h} picks while holding {load}")
                load = act.product
            else:
                if load != act.product:
                    fail(a.start, "applicability", f"hoist {h} puts {act.product} it does not hold")
                load = None
        final_pos[h] = pos

    # product timelines and tank occupancy
    visits: dict[int, list] = {t: [] for t in range(nt)}
    final_loc, final_step, unload_times, load_times = {}, {}, {}, {}
    horizon = max([clock0] + [a.end for a in sane])
    for p in range(npr):
        prod = inst.products[p]
        recipe: Recipe = prod.recipe
        loc, step, entered = loc0[p], step0[p], entered0[p]
        occupied_from = -10**18 if loc[0] == "tank" else None
        for a in sorted((a for a in sane if a.action.name != MOVE and a.action.product == p),
                        key=lambda a: a.start):
            act = a.action
            t = act.tank
            kind = inst.tanks[t].kind
            if act.name == PICKUP:
                if loc != ("tank", t):
                    fail(a.start, "applicability", f"product {p} picked at {t} but is at {loc}")
                if a.start < prod.arrival_time:
                    fail(a.start, "applicability", f"product {p} picked before arrival")
                if kind is TankKind.UNLOADING and step >= len(recipe):
                    fail(a.start, "applicability", f"finished product {p} picked again")
                if kind is TankKind.LOADING:
                    load_times.setdefault(p, a.start)
                if kind is TankKind.PROCESSING and step < len(recipe):
                    e = a.start - entered
                    if e < recipe.lo[step]:
                        fail(a.start, "window_short", f"product {p} left tank {t} after {e} < {recipe.lo[step]}")
                    elif e > recipe.hi[step]:
                        fail(entered + recipe.hi[step] + 1, "window_exceeded",
                             f"product {p} left tank {t} after {e} > {recipe.hi[step]}")
                    step += 1
                if kind is TankKind.PROCESSING and occupied_from is not None:
                    visits[t].append((occupied_from, a.end, p))
                occupied_from = None
                loc = ("hoist", act.hoist)
            else:
                if loc != ("hoist", act.hoist):
                    fail(a.start, "applicability", f"product {p} put from hoist {act.hoist} that lacks it")
                if step < len(recipe):
                    if kind is not TankKind.PROCESSING or inst.tanks[t].operation != recipe.ops[step]:
                        fail(a.start, "recipe_order", f"product {p} put into tank {t}, needs {recipe.ops[step]}")
                elif kind is not TankKind.UNLOADING:
                    fail(a.start, "recipe_order", f"finished product {p} put into non-unloading tank {t}")
                if not available[t] or any(tt == t and lo <= a.start < hi for tt, lo, hi in outages):
                    fail(a.start, "availability", f"product {p} put into unavailable tank {t}")
                if kind is TankKind.UNLOADING and step >= len(recipe):
                    unload_times[p] = a.end
                loc = ("tank", t)
                entered = a.end
                occupied_from = a.start
        if loc[0] == "tank":
            t = loc[1]
            kind = inst.tanks[t].kind
            if kind is TankKind.PROCESSING:
                visits[t].append((occupied_from, 10**18, p))
                if step < len(recipe) and horizon - entered > recipe.hi[step]:
                    fail(entered + recipe.hi[step] + 1, "window_exceeded",
                         f"product {p} still in tank {t} past its window")
        done = loc[0] == "tank" and inst.tanks[loc[1]].kind is TankKind.UNLOADING and step >= len(recipe)
        if require_complete and not done:
            fail(horizon, "incomplete", f"product {p} unfinished at {loc}")
        final_loc[p] = loc
        final_step[p] = step

    for t, vs in visits.items():
        vs.sort()
        for (s1, e1, p1), (s2, e2, p2) in zip(vs, vs[1:]):
            if s2 < e1:
                fail(max(s2, clock0), "capacity", f"tank {t} holds products {p1} and {p2}")

    # safety distance and no-passing, checked on every elementary time segment
    if nh > 1:
        cuts = sorted({clock0} | {a.start for a in sane} | {a.end for a in sane})
        order = sorted(range(nh), key=lambda h: (inst.hoists[h].initial_position, h))
        d = inst.safety_distance

        def span_at(h, t):
            pos = pos0[h]
            for s, e, lo, hi, dst in moves_of[h]:
                if s <= t < e:
                    return lo, hi
                if e <= t:
                    pos = dst
            return pos, pos

        for t in cuts:
            spans = {h: span_at(h, t) for h in range(nh)}
            for i, h in enumerate(order):
                for k in order[i + 1:]:
                    if spans[h][1] + d > spans[k][0]:
                        fail(t, "safety", f"hoists {h} and {k} closer than {d} tanks at t={t}")

    bad.sort(key=Violation.key)
    if unload_times:
        makespan = max(unload_times.values())
    else:
        makespan = max([0] + [a.end for a in sane])
    return ValidationReport(
        ok=not bad,
        violations=bad,
        makespan=makespan,
        hoist_pos=final_pos,
        product_loc=final_loc,
        product_step=final_step,
        unload_times=unload_times,
        load_times=load_times,
    )


def validate_processing(
    iota: Mapping[int, int],
    recipes: Mapping[int, Recipe] | Sequence[Recipe],
    steps: Mapping[int, int],
) -> bool:
    """True iff every product's processing time lies inside its current window."""
    for p, value in iota.items():
        recipe = recipes[p]
        j = steps[p]
        if not 0 <= j < len(recipe):
            raise IndexError(f"product {p}: step {j} outside its recipe")
        if not recipe.lo[j] <= value <= recipe.hi[j]:
            return False
    return True
