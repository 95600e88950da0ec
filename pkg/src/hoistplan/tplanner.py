"""Embedded temporal planner for hoist sub-problems.

Forward best-first search over decision epochs: a node either starts one more
action for an idle hoist at the current instant, or lets time run to the next
event (an action ending, a product becoming pickable, a release or an
arrival).  States that can no longer meet some product's processing deadline
are pruned.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .core.model import MOVE, PICKUP, PUTDOWN, Instance, Move, PickUp, Plan, PutDown, TankKind, TimedAction
from .core.model import transport_time as _m
from .core.state import (
    ActionError,
    WorldState,
    advance,
    check_start,
    held,
    overall_ok,
    span,
    spans_compatible,
    start_action,
    timed,
)
from .goals import HOIST_AT, HOIST_HAVE, PRODUCT_AT, SubGoal, holds

SOLVED = "solved"
UNSOLVABLE = "unsolvable"
TIMEOUT = "timeout"

INF = float("inf")


@dataclass
class PlannerConfig:
    cutoff: float = 180.0
    max_expansions: int = 200_000
    # uniform-cost search (no heuristic); used as a reference mode in tests
    exhaustive: bool = False
    # only move hoists to tanks where something can happen, or just clear of them
    prune_moves: bool = True
    # drop a state when the same line was already reached at an earlier tick
    time_dominance: bool = True


@dataclass(frozen=True)
class SubProblem:
    """Planner-neutral request: start state, goals and optional timing hints.

    ``release`` maps a product to the earliest tick at which it may be picked
    up; ``dispatch`` names the products allowed to leave a loading tank (by
    default, the ones mentioned in the goals).
    """

    state: WorldState
    goals: tuple[SubGoal, ...]
    cutoff: float = 180.0
    release: Mapping[int, int] = field(default_factory=dict)
    dispatch: Optional[frozenset] = None


@dataclass
class PlannerResult:
    plan: Plan
    runtime: float
    status: str
    expansions: int = 0

    @property
    def solved(self) -> bool:
        return self.status == SOLVED

    @property
    def runtime_ticks(self) -> int:
        return int(math.ceil(self.runtime))


# -- grounding -------------------------------------------------------------------

def ground_actions(
    state: WorldState,
    inst: Instance,
    dispatch: Optional[Iterable[int]] = None,
    release: Optional[Mapping[int, int]] = None,
    hoists: Optional[Iterable[int]] = None,
    stops: Optional[Mapping[int, Iterable[int]]] = None,
) -> list[TimedAction]:
    """Every action some idle hoist could start at ``state.clock``.

    ``stops`` maps a hoist to its allowed move destinations; by default
    every tank in range.
    """
    out: list[TimedAction] = []
    nh = len(inst.hoists)
    busy = {a.action.hoist for a in state.pending}
    dispatch = None if dispatch is None else frozenset(dispatch)
    release = release or {}
    clock = state.clock
    spans = [span(state, k) for k in range(nh)]
    for h in (range(nh) if hoists is None else hoists):
        if h in busy:
            continue
        hoist = inst.hoists[h]
        pos = state.hoist_pos[h]
        load = state.hoist_load[h]
        lo, hi = hoist.range
        for dst in range(lo, hi + 1):
            if dst == pos or (stops is not None and dst not in stops[h]):
                continue
            sweep = (min(pos, dst), max(pos, dst))
            if all(k == h or spans_compatible(inst, h, sweep, k, spans[k]) for k in range(nh)):
                out.append(timed(Move(h, pos, dst), clock, state, inst))
        tank = inst.tanks[pos]
        if load is None:
            for p, loc in enumerate(state.product_loc):
                if loc != pos:
                    continue
                prod = inst.products[p]
                if clock < prod.arrival_time or clock < release.get(p, 0):
                    continue
                if tank.kind is TankKind.LOADING:
                    if dispatch is not None and p not in dispatch:
                        continue
                elif tank.kind is TankKind.PROCESSING:
                    step = state.product_step[p]
                    if step >= len(prod.recipe):
                        continue
                    e = clock - state.since[p]
                    if not prod.recipe.lo[step] <= e <= prod.recipe.hi[step]:
                        continue
                else:
                    continue
                out.append(TimedAction(PickUp(h, pos, p), clock, inst.lift_time))
        else:
            if state.product_loc[load] == held(h) and pos in inst.targets(load, state.product_step[load]):
                if state.tank_available[pos] and (
                    tank.kind is not TankKind.PROCESSING or state.tank_occupant[pos] is None
                ):
                    out.append(TimedAction(PutDown(h, pos, load), clock, inst.lift_time))
    return out


def _useful(state: WorldState, inst: Instance, h: int, goals, dispatch) -> set[int]:
    """Tanks where hoist ``h`` could do something next."""
    out = {g.second for g in goals if g.predicate == HOIST_AT and g.first == h}
    load = state.hoist_load[h]
    if load is not None:
        out.update(inst.targets(load, state.product_step[load]))
    else:
        for p, loc in enumerate(state.product_loc):
            prod = inst.products[p]
            step = state.product_step[p]
            if loc < 0:
                if -1 - loc != h:
                    out.update(inst.targets(p, step))
                continue
            kind = inst.tanks[loc].kind
            if kind is TankKind.PROCESSING and step < len(prod.recipe):
                out.add(loc)
            elif kind is TankKind.LOADING and (dispatch is None or p in dispatch):
                out.add(loc)
    hoist = inst.hoists[h]
    return {t for t in out if hoist.covers(t)}


def move_stops(state: WorldState, inst: Instance, goals: Iterable[SubGoal], dispatch=None) -> dict[int, set[int]]:
    """Move destinations worth trying per hoist.

    A hoist heads for a tank where it could pick up or put down, or for a
    goal tank. It steps aside only while it stands in the way of another
    hoist heading for such a tank, and only to a spot that clears that path.
    """
    goals = tuple(goals)
    nh = len(inst.hoists)
    useful = [_useful(state, inst, h, goals, dispatch) for h in range(nh)]
    out = {}
    for h in range(nh):
        dests = set(useful[h])
        pos = state.hoist_pos[h]
        lo, hi = inst.hoists[h].range
        for k in range(nh):
            if k == h:
                continue
            pk = state.hoist_pos[k]
            for u in useful[k]:
                sweep = (min(pk, u), max(pk, u))
                if spans_compatible(inst, h, (pos, pos), k, sweep):
                    continue
                for t in range(lo, hi + 1):
                    if spans_compatible(inst, h, (t, t), k, sweep):
                        # the nearest clear spot on either side is enough
                        if t < pos and not spans_compatible(inst, h, (t + 1, t + 1), k, sweep):
                            dests.add(t)
                        elif t > pos and not spans_compatible(inst, h, (t - 1, t - 1), k, sweep):
                            dests.add(t)
        dests.discard(pos)
        out[h] = dests
    return out


# -- heuristic and pruning -------------------------------------------------------------

def _outlook(state: WorldState, h: int):
    """(free_at, position, load) of hoist ``h`` once its current action ends."""
    pos = state.hoist_pos[h]
    load = state.hoist_load[h]
    for a in state.pending:
        if a.action.hoist == h:
            if a.action.name == PUTDOWN:
                load = None
            return a.end, pos, load
    return state.clock, pos, load


def _ready(state: WorldState, inst: Instance, p: int, release: Mapping[int, int]) -> int:
    """Earliest tick at which product ``p`` may be picked where it sits."""
    prod = inst.products[p]
    t = max(prod.arrival_time, release.get(p, 0))
    loc = state.product_loc[p]
    if loc >= 0 and inst.tanks[loc].kind is TankKind.PROCESSING:
        step = state.product_step[p]
        if step < len(prod.recipe):
            t = max(t, state.since[p] + prod.recipe.lo[step])
    return t


def heuristic(state: WorldState, goals: Sequence[SubGoal], inst: Instance,
              release: Optional[Mapping[int, int]] = None) -> int:
    """Lower bound on the ticks still needed to make every goal true."""
    return _heuristic(state, goals, inst, release or {})[0]


def _cleared(state, inst, t, p, h, release):
    """Earliest tick a put-down of ``p`` into tank ``t`` may start, or None if free.

    ``h`` is the hoist holding ``p`` (-1 when nobody does). Another hoist that
    empties the tank must then back off by the safety distance before ``h``
    can enter; ``h`` emptying it itself must drop the occupant elsewhere and
    fetch ``p`` back.
    """
    q = state.tank_occupant[t]
    if q is None or q == p or inst.tanks[t].kind is not TankKind.PROCESSING:
        return None
    lift, base, d = inst.lift_time, inst.transport_base, inst.safety_distance
    refetch = 2 * (base + 1) + 2 * lift
    # the emptying hoist may also be the one that later delivers p
    backoff = min(base + d + base + 1, refetch) if h >= 0 and d > 0 else 0
    for x in state.pending:
        if x.action.name == PICKUP and x.action.product == q:
            return x.end + backoff
    ready = _ready(state, inst, q, release)
    best = INF
    for k, hoist in enumerate(inst.hoists):
        if not hoist.covers(t):
            continue
        free, pos, load = _outlook(state, k)
        extra = lift if load is not None else 0
        done = max(free + extra + _m(inst, pos, t), ready) + lift
        if h < 0:
            best = min(best, done)
        elif k == h:
            best = min(best, done + refetch)
        else:
            best = min(best, done + backoff)
    return best


def _heuristic(state, goals, inst, release):
    clock = state.clock
    lift = inst.lift_time
    best_t, best_d = 0, 0
    for g in goals:
        if holds(g, state):
            continue
        kind, a, b = g
        if kind == HOIST_AT:
            free, pos, _ = _outlook(state, a)
            d = _m(inst, pos, b)
            t = free - clock + d
        elif kind == HOIST_HAVE:
            free, pos, load = _outlook(state, a)
            loc = state.product_loc[b]
            if load == b:
                t, d = free - clock, 0
            elif loc < 0:
                # held elsewhere: it must be put down and picked again
                t, d = 2 * lift, 0
            else:
                d = _m(inst, pos, loc)
                extra = lift if load is not None else 0
                start = max(free + extra + d, _ready(state, inst, b, release))
                t = start - clock + lift
        else:
            loc = state.product_loc[a]
            if loc < 0:
                h = -1 - loc
                free, pos, _ = _outlook(state, h)
                d = _m(inst, pos, b)
                t = free - clock + d + lift
                done = False
                for x in state.pending:
                    if x.action.name == PUTDOWN and x.action.product == a and x.action.tank == b:
                        t, d, done = x.end - clock, 0, True
                if not done:
                    clear = _cleared(state, inst, b, a, h, release)
                    if clear is not None:
                        t = max(t, clear - clock + lift)
            else:
                t, d = INF, INF
                ready = _ready(state, inst, a, release)
                leg = _m(inst, loc, b)
                cleared = _cleared(state, inst, b, a, -1, release) or 0
                # any hoist that can reach the product bounds the first leg; a
                # handover through another tank only adds time
                for h, hoist in enumerate(inst.hoists):
                    if not hoist.covers(loc):
                        continue
                    free, pos, load = _outlook(state, h)
                    extra = lift if load is not None else 0
                    reach = _m(inst, pos, loc)
                    start = max(free + extra + reach, ready)
                    cand = max(start + lift + leg, cleared) - clock + lift
                    if cand < t:
                        t, d = cand, reach + leg
        if t > best_t:
            best_t = t
        if d > best_d:
            best_d = d
    return best_t, best_d


def _usable_targets(state: WorldState, inst: Instance, h: int, q: int):
    hoist = inst.hoists[h]
    out = []
    for tt in inst.targets(q, state.product_step[q]):
        if not hoist.covers(tt) or not state.tank_available[tt]:
            continue
        if inst.tanks[tt].kind is not TankKind.PROCESSING or state.tank_occupant[tt] in (None, q):
            out.append(tt)
        elif any(k != h and inst.hoists[k].covers(tt) for k in range(len(inst.hoists))):
            out.append(tt)
    return out


def dead_end(state: WorldState, inst: Instance) -> bool:
    """Cheap sufficient test that no continuation can respect every window."""
    if not overall_ok(state, inst):
        return True
    lift = inst.lift_time
    outlooks = [_outlook(state, h) for h in range(len(inst.hoists))]
    drop: list = []
    for h, (free, pos, load) in enumerate(outlooks):
        if load is None:
            drop.append((free, pos, ()))
            continue
        targets = _usable_targets(state, inst, h, load)
        if not targets:
            return True
        drop.append((free + lift, pos, tuple(targets)))
    clock = state.clock
    for p, loc in enumerate(state.product_loc):
        if loc < 0 or inst.tanks[loc].kind is not TankKind.PROCESSING:
            continue
        prod = inst.products[p]
        step = state.product_step[p]
        if step >= len(prod.recipe):
            continue
        deadline = state.since[p] + prod.recipe.hi[step]
        if clock > deadline:
            return True
        best = INF
        onward = inst.targets(p, step + 1)
        for h, (free, pos, targets) in enumerate(drop):
            # whoever lifts the product must also reach its next tank
            hoist = inst.hoists[h]
            if not hoist.covers(loc) or not any(hoist.covers(t) for t in onward):
                continue
            if targets:
                arrive = free + min(_m(inst, pos, tt) + _m(inst, tt, loc) for tt in targets)
            else:
                arrive = free + _m(inst, pos, loc)
            if arrive < best:
                best = arrive
        if best > deadline:
            return True
    return False


def _next_event(state: WorldState, inst: Instance, dispatch, release) -> Optional[int]:
    clock = state.clock
    best = None
    for a in state.pending:
        if best is None or a.end < best:
            best = a.end
    for p, loc in enumerate(state.product_loc):
        if loc < 0:
            continue
        kind = inst.tanks[loc].kind
        t = None
        if kind is TankKind.PROCESSING:
            step = state.product_step[p]
            prod = inst.products[p]
            if step < len(prod.recipe):
                t = state.since[p] + prod.recipe.lo[step]
            if p in release:
                t = max(t or 0, release[p])
        elif kind is TankKind.LOADING and (dispatch is None or p in dispatch):
            t = max(inst.products[p].arrival_time, release.get(p, 0))
        if t is not None and t > clock and (best is None or t < best):
            best = t
    return best


def _key(state: WorldState, inst: Instance, release):
    clock = state.clock
    rel = []
    for p, loc in enumerate(state.product_loc):
        if loc >= 0 and inst.tanks[loc].kind is TankKind.PROCESSING:
            rel.append(clock - state.since[p])
        elif loc >= 0 and inst.tanks[loc].kind is TankKind.LOADING:
            rel.append(-max(0, inst.products[p].arrival_time - clock, release.get(p, 0) - clock))
        else:
            rel.append(0)
    return (
        state.hoist_pos, state.hoist_load, state.hoist_moving, state.product_loc,
        state.product_step, state.tank_occupant, state.tank_available, tuple(rel),
        tuple((a.action, a.end - clock) for a in state.pending),
    )


def _abs_key(state: WorldState, inst: Instance):
    since = tuple(state.since[p] if loc >= 0 and inst.tanks[loc].kind is TankKind.PROCESSING else 0
                  for p, loc in enumerate(state.product_loc))
    return (
        state.hoist_pos, state.hoist_load, state.hoist_moving, state.product_loc,
        state.product_step, state.tank_occupant, state.tank_available, since,
        tuple(sorted((a.action, a.start) for a in state.pending)),
    )


# -- search ----------------------------------------------------------------------

class _Node:
    __slots__ = ("state", "parent", "action", "nacts", "travel", "last")

    def __init__(self, state, parent, action, nacts, travel, last):
        self.state = state
        self.parent = parent
        self.action = action
        self.nacts = nacts
        self.travel = travel
        self.last = last

    def actions(self) -> list[TimedAction]:
        out = []
        node = self
        while node is not None:
            if node.action is not None:
                out.append(node.action)
            node = node.parent
        out.reverse()
        return out


def plan(
    state: WorldState,
    goals: Iterable[SubGoal],
    inst: Instance,
    cfg: Optional[PlannerConfig] = None,
    release: Optional[Mapping[int, int]] = None,
    dispatch: Optional[Iterable[int]] = None,
    cancel: Optional[Callable[[], bool]] = None,
) -> PlannerResult:
    """Search for a plan from ``state`` that makes every goal hold."""
    cfg = cfg or PlannerConfig()
    t0 = time.perf_counter()
    goals = tuple(dict.fromkeys(goals))
    for g in goals:
        g.check(inst)
    release = dict(release or {})
    if dispatch is None:
        dispatch = {g.second for g in goals if g.predicate == HOIST_HAVE}
        dispatch |= {g.first for g in goals if g.predicate == PRODUCT_AT}
    dispatch = frozenset(dispatch)

    def done(status, node=None, n=0):
        acts = node.actions() if node is not None else []
        return PlannerResult(Plan(tuple(acts)), time.perf_counter() - t0, status, n)

    if all(holds(g, state) for g in goals):
        return done(SOLVED)
    if dead_end(state, inst):
        return done(UNSOLVABLE)

    def score(node):
        if cfg.exhaustive:
            return (node.state.clock, node.nacts)
        ht, hd = _heuristic(node.state, goals, inst, release)
        return (node.state.clock + ht, ht, node.travel + hd, node.nacts)

    counter = itertools.count()
    root = _Node(state, None, None, 0, 0, -1)
    heap = [(score(root), next(counter), root)]
    seen = {_key(state, inst, release): state.clock}
    # the same line reached earlier can idle into the later copy
    reached = {_abs_key(state, inst): state.clock}
    expansions = 0
    while heap:
        _, _, node = heapq.heappop(heap)
        s = node.state
        if all(holds(g, s) for g in goals):
            return done(SOLVED, node, expansions)
        expansions += 1
        if expansions > cfg.max_expansions:
            return done(TIMEOUT, None, expansions)
        if (expansions & 127) == 0:
            if time.perf_counter() - t0 > cfg.cutoff or (cancel is not None and cancel()):
                return done(TIMEOUT, None, expansions)
        children = []
        parent_key = _abs_key(s, inst) if cfg.time_dominance else None
        stops = move_stops(s, inst, goals, dispatch) if cfg.prune_moves else None
        for ta in ground_actions(s, inst, dispatch, release, range(node.last + 1, len(inst.hoists)), stops):
            try:
                s2 = start_action(s, ta, inst)
            except ActionError:
                continue
            travel = node.travel + (ta.duration if ta.action.name == MOVE else 0)
            children.append(_Node(s2, node, ta, node.nacts + 1, travel, ta.action.hoist))
        t_next = _next_event(s, inst, dispatch, release)
        if t_next is not None:
            children.append(_Node(advance(s, t_next, inst), node, None, node.nacts, node.travel, -1))
        for child in children:
            cs = child.state
            k = _key(cs, inst, release)
            prev = seen.get(k)
            if prev is not None and prev <= cs.clock:
                continue
            if cfg.time_dominance:
                ak = _abs_key(cs, inst)
                prev = reached.get(ak)
                # plain waiting keeps the key; it is how the earlier copy idles
                idle = child.action is None and ak == parent_key
                if prev is not None and prev <= cs.clock and not idle:
                    continue
            if dead_end(cs, inst):
                continue
            seen[k] = cs.clock
            if cfg.time_dominance and (prev is None or cs.clock < prev):
                reached[ak] = cs.clock
            heapq.heappush(heap, (score(child), next(counter), child))
    return done(UNSOLVABLE, None, expansions)


class EmbeddedPlanner:
    """Callable planner interface: ``planner(problem, inst) -> PlannerResult``."""

    name = "embedded"

    def __init__(self, config: Optional[PlannerConfig] = None):
        self.config = config or PlannerConfig()

    def __call__(self, problem: SubProblem, inst: Instance, cancel=None) -> PlannerResult:
        cfg = PlannerConfig(min(self.config.cutoff, problem.cutoff), self.config.max_expansions,
                            self.config.exhaustive)
        return plan(problem.state, problem.goals, inst, cfg, problem.release, problem.dispatch, cancel)
