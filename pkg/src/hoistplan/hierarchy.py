"""The hierarchical planning loop.

Each round turns the earliest skeleton entries into a handful of goal
predicates, asks the temporal planner for a short plan, commits only the
prefix up to a regeneration instant ``eps`` and rolls the world forward to
that instant.  The next round is meant to be computed from ``eps_hat``
(slightly before ``eps``) on the projected state, so that a running line
never waits for the planner.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

from .core.model import MOVE, PICKUP, PUTDOWN, Instance, Plan, TankKind, TimedAction, transport_time
from .core.state import ActionError, WorldState, initial_state, replay, set_moving, set_tank_available
from .goals import HOIST_AT, HOIST_HAVE, PRODUCT_AT, SubGoal, achieves, holds
from .skeleton import (
    SkeletonEntry,
    SkeletonSchedule,
    is_hoist,
    res_id,
    schedule_new_products,
    update_schedule,
)
from .tplanner import EmbeddedPlanner, PlannerConfig, PlannerResult, SubProblem

log = logging.getLogger(__name__)

RULE_REACHED = "reached"      # hoist_at / product_at achieved
RULE_APPROACH = "approach"    # hoist_have: stop before the approach move
RULE_GAP = "gap"              # idle gap between two moves of one hoist
RULE_LAST = "last"            # the last product was unloaded
RULE_PROGRESS = "progress"    # pushed forward to guarantee progress

IOTA_ELAPSED = "elapsed"
IOTA_REMAINING = "remaining"


@dataclass
class HitConfig:
    alpha: int = 2
    max_horizon: int = 10**9
    planner_cutoff: float = 180.0
    # meaning of the processing time in the hoist_at/product_at choice
    iota_mode: str = IOTA_ELAPSED
    max_iterations: int = 100_000
    # on a planner failure, retry with the next transport of the most urgent
    # products one at a time before giving up
    fallback: bool = True
    # never cut closer than alpha to the start of the sub-plan, so the next
    # planner call always gets the full alpha of lead time
    full_lead: bool = True
    # waiting products whose skeleton chains are repaired each round (None: all)
    lookahead: Optional[int] = 4

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.max_horizon <= 0:
            raise ValueError("max_horizon must be > 0")
        if self.iota_mode not in (IOTA_ELAPSED, IOTA_REMAINING):
            raise ValueError(f"unknown iota_mode {self.iota_mode!r}")


class CutResult(NamedTuple):
    clipped: Plan
    epsilon: int
    epsilon_hat: int
    rule: str = RULE_REACHED
    hoist: Optional[int] = None


class HitFailure(RuntimeError):
    pass


# -- sub-goals -----------------------------------------------------------------------

def _iota(state: WorldState, inst: Instance, p: int, mode: str) -> int:
    e = state.elapsed(inst, p)
    if mode == IOTA_ELAPSED:
        return e
    loc = state.product_loc[p]
    step = state.product_step[p]
    recipe = inst.products[p].recipe
    if loc >= 0 and inst.tanks[loc].kind is TankKind.PROCESSING and step < len(recipe):
        return max(0, recipe.lo[step] - e)
    return 0


def _entry_goal(e: SkeletonEntry, sched: SkeletonSchedule, state: WorldState, inst: Instance,
                iota_mode: str) -> Optional[SubGoal]:
    p = e.product
    if is_hoist(e.resource):
        h = res_id(e.resource)
        g = SubGoal.hoist_have(h, p)
        if e.started or holds(g, state) or state.product_loc[p] < 0:
            return None
        return g
    t = res_id(e.resource)
    g = SubGoal.product_at(p, t)
    if holds(g, state):
        return None
    hs = sorted((x for x in sched.entries if x.product == p and is_hoist(x.resource)),
                key=lambda x: (x.start, x.chain_key()))
    if len(hs) >= 2:
        nxt = hs[1]
        h = res_id(nxt.resource)
        carrier = -1 - state.product_loc[p] if state.product_loc[p] < 0 else None
        iota = _iota(state, inst, p, iota_mode)
        if nxt.end < nxt.start + iota + transport_time(inst, state.hoist_pos[h], t) and carrier in (None, h):
            return SubGoal.hoist_at(h, t)
    return g


def generate_subgoals(sched: SkeletonSchedule, state: WorldState, inst: Instance,
                      iota_mode: str = IOTA_ELAPSED) -> list[SubGoal]:
    """Goals for the earliest-starting skeleton entries that are not yet achieved.

    Entries are scanned by start time; those whose goal already holds are
    skipped, and every entry sharing the first unsatisfied start contributes.
    At most one goal is produced per hoist and per product.
    """
    goals: list[SubGoal] = []
    first = None
    used_h: set[int] = set()
    used_p: set[int] = set()
    for e in sched.entries:
        if first is not None and e.start > first:
            break
        g = _entry_goal(e, sched, state, inst, iota_mode)
        if g is None:
            continue
        if g.predicate == HOIST_HAVE:
            hk, pk = g.first, g.second
        elif g.predicate == HOIST_AT:
            hk, pk = g.first, None
        else:
            hk, pk = None, g.first
        if (hk is not None and hk in used_h) or (pk is not None and pk in used_p):
            continue
        if hk is not None:
            used_h.add(hk)
        if pk is not None:
            used_p.add(pk)
        goals.append(g)
        first = e.start
    return goals


def release_times(goals: Sequence[SubGoal], sched: SkeletonSchedule, state: WorldState,
                  inst: Instance) -> dict[int, int]:
    """Earliest pickup instants that keep loading in step with the skeleton."""
    out: dict[int, int] = {}
    for g in goals:
        if g.predicate != HOIST_HAVE:
            continue
        p = g.second
        loc = state.product_loc[p]
        if loc < 0 or inst.tanks[loc].kind is not TankKind.LOADING:
            continue
        for e in sched.entries:
            if e.product == p and is_hoist(e.resource):
                out[p] = max(state.clock, e.start)
                break
    return out


# -- cutting -------------------------------------------------------------------------

def _achiever(goal: SubGoal, plan: Plan, state: WorldState) -> Optional[TimedAction]:
    best = None
    for ta in list(state.pending) + list(plan.actions):
        if achieves(goal, ta.action) and (best is None or ta.end >= best.end):
            best = ta
    return best


def cut_rule(plan: Plan, goals: Iterable[SubGoal], state: WorldState, inst: Instance,
             max_horizon: int = 10**9, last_products: Optional[Iterable[int]] = None):
    """``(eps, rule, hoist)`` for a solved sub-plan.

    ``last_products`` lists products whose unloading finishes the instance
    (default: every product not yet done).
    """
    goals = list(goals)
    found = []
    for i, g in enumerate(goals):
        ta = _achiever(g, plan, state)
        if ta is None:
            raise HitFailure(f"plan does not achieve {g}")
        found.append((ta.end, i, g, ta))
    if not found:
        return max_horizon, RULE_LAST, None
    _, _, g, ta = min(found)
    if g.predicate == PRODUCT_AT and inst.tanks[g.second].kind is TankKind.UNLOADING:
        remaining = set(p for p in range(len(inst.products)) if not state.is_done(inst, p))
        if last_products is not None:
            remaining &= set(last_products)
        if remaining <= {g.first}:
            return max_horizon, RULE_LAST, None
    gamma = ta.start
    # idle gap between two consecutive moves of one hoist before the achiever
    gap = None
    for h in range(len(inst.hoists)):
        seq = [a for a in plan.actions if a.action.hoist == h]
        for a1, a2 in zip(seq, seq[1:]):
            if a1.action.name == MOVE and a2.action.name == MOVE and a1.start < a2.start < gamma:
                if a2.start != a1.end:
                    cand = a1.end + inst.lift_time
                    if gap is None or cand < gap[0]:
                        gap = (cand, h)
    if gap is not None:
        return gap[0], RULE_GAP, gap[1]
    if g.predicate == HOIST_HAVE:
        h, p = g.first, g.second
        loc = state.product_loc[p]
        if loc < 0:
            return ta.end, RULE_REACHED, None
        pos = state.hoist_pos[h]
        return gamma - transport_time(inst, pos, loc), RULE_APPROACH, None
    return ta.end, RULE_REACHED, None


def compute_cut(plan: Plan, goals: Iterable[SubGoal], state: WorldState, inst: Instance,
                max_horizon: int = 10**9) -> int:
    return cut_rule(plan, goals, state, inst, max_horizon)[0]


def clip_plan(plan: Plan, eps: int) -> Plan:
    return Plan(tuple(a for a in plan.actions if a.start <= eps))


def compute_recompute_time(gamma0: int, eps: int, alpha: int) -> int:
    return max(gamma0, eps - alpha)


def shift_plan(plan: Plan, planner_runtime: int, alpha: int) -> tuple[Plan, int]:
    """Delay every action by the planner's overrun beyond its lead time."""
    delay = max(0, planner_runtime - alpha)
    return (plan.shifted(delay) if delay else plan), delay


def update_after_clip(state: WorldState, clipped: Plan, inst: Instance, eps: int,
                      rule: Optional[str] = None, hoist: Optional[int] = None,
                      on_start=None) -> WorldState:
    """World state at ``eps`` after the committed prefix (in-flight actions stay pending)."""
    s = replay(state, clipped, inst, until=max(eps, state.clock), on_start=on_start)
    if rule == RULE_GAP and hoist is not None:
        if not any(a.action.hoist == hoist and a.action.name == MOVE for a in s.pending):
            s = set_moving(s, hoist, False)
    return s


def validate_iota(state: WorldState, inst: Instance, picked: Sequence[tuple[int, int, int]]) -> bool:
    """Processing-time check on committed pickups plus products still soaking.

    ``picked`` holds ``(product, step, elapsed)`` observed when each pickup in
    the committed prefix started.
    """
    for p, step, e in picked:
        r = inst.products[p].recipe
        if not r.lo[step] <= e <= r.hi[step]:
            return False
    for p, loc in enumerate(state.product_loc):
        if loc >= 0 and inst.tanks[loc].kind is TankKind.PROCESSING:
            step = state.product_step[p]
            r = inst.products[p].recipe
            if step < len(r) and state.clock - state.since[p] > r.hi[step]:
                return False
    return True


def line_busy(state: WorldState, inst: Instance) -> bool:
    """True while something on the line would be stalled by a late plan."""
    if state.pending:
        return True
    for loc in state.product_loc:
        if loc < 0 or inst.tanks[loc].kind is TankKind.PROCESSING:
            return True
    return False


# -- the loop ------------------------------------------------------------------------

@dataclass
class Round:
    index: int
    gamma0: int
    eps: int
    eps_hat: int
    goals: tuple[SubGoal, ...]
    runtime: float
    rule: str
    clipped: Plan
    delay: int = 0

    def trace_line(self) -> str:
        goals = ",".join(str(g) for g in self.goals)
        return (f"iter={self.index} eps={self.eps} eps_hat={self.eps_hat} "
                f"goals={goals} planner_ms={self.runtime * 1000:.1f}")


@dataclass
class HitResult:
    success: bool
    plan: Plan
    rounds: list[Round] = field(default_factory=list)
    reason: str = ""
    cpu_time: float = 0.0
    final_state: Optional[WorldState] = None

    @property
    def trace(self) -> list[str]:
        return [r.trace_line() for r in self.rounds]

    def __bool__(self) -> bool:
        return self.success


RuntimeModel = Callable[[int, float], int]


class HitSession:
    """Stateful driver for the loop; :meth:`step` runs one round.

    ``known`` restricts planning to products already revealed (the
    simulator adds arrivals through :meth:`reveal`).  ``runtime_model`` maps
    ``(round index, measured seconds)`` to planner ticks; when given, rounds
    after the first are delayed by any overrun beyond their lead time.
    """

    def __init__(self, inst: Instance, cfg: Optional[HitConfig] = None, planner=None,
                 known: Optional[Iterable[int]] = None,
                 runtime_model: Optional[RuntimeModel] = None):
        self.inst = inst
        self.cfg = cfg or HitConfig()
        self.planner = planner or EmbeddedPlanner(PlannerConfig(cutoff=self.cfg.planner_cutoff))
        self.state = initial_state(inst)
        self.schedule = SkeletonSchedule()
        self.known = set(range(len(inst.products))) if known is None else set(known)
        self.scheduled: set[int] = set()
        self.plan = Plan()
        self.rounds: list[Round] = []
        self.eps = 0
        self.eps_hat = 0
        self.finished = False
        self.failed: Optional[str] = None
        self.runtime_model = runtime_model
        self.cpu_time = 0.0
        self.waiting = 0

    # -- external events ---------------------------------------------------------
    def reveal(self, products: Iterable[int]) -> None:
        self.known |= set(products)
        if self.finished and self.failed is None and self._open():
            self.finished = False
            self.eps = max(self.eps, self.state.clock)

    def set_tank(self, tank: int, available: bool) -> None:
        self.state = set_tank_available(self.state, tank, available)
        if not available:
            tr = f"T{tank}"
            hit = {e.product for e in self.schedule.entries
                   if e.resource == tr and self.state.product_loc[e.product] != tank}
            if hit:
                kept = tuple(e for e in self.schedule.entries if e.product not in hit)
                self.schedule = SkeletonSchedule(kept, (), self.schedule.unscheduled)
                self.scheduled -= hit
        else:
            self.scheduled -= set(self.schedule.unscheduled)
            self.schedule = SkeletonSchedule(self.schedule.entries, (), frozenset())

    def advance_to(self, t: int) -> None:
        """Idle the line until ``t`` (used when waiting for arrivals)."""
        if t > self.state.clock:
            self.state = replay(self.state, (), self.inst, until=t)
            self.eps = max(self.eps, t)

    def _open(self) -> bool:
        return any(not self.state.is_done(self.inst, p) for p in self.known)

    # -- one round -------------------------------------------------------------------
    def step(self) -> Optional[Round]:
        if self.finished:
            return None
        inst, cfg = self.inst, self.cfg
        state = self.state
        fresh = [p for p in self.known - self.scheduled if not state.is_done(inst, p)]
        if fresh:
            t0 = time.perf_counter()
            self.schedule = schedule_new_products(inst, self.schedule, fresh, now=state.clock, state=state)
            self.cpu_time += time.perf_counter() - t0
            self.scheduled |= set(fresh) - set(self.schedule.unscheduled)
        if not self._open() and not state.pending:
            self.finished = True
            return None
        t0 = time.perf_counter()
        goals = generate_subgoals(self.schedule, state, inst, cfg.iota_mode)
        if not goals:
            if self.schedule.unscheduled:
                return self._fail(f"products {sorted(self.schedule.unscheduled)} cannot be dispatched")
            if state.pending or self._open():
                # nothing left to decide: let in-flight actions finish
                end = max([a.end for a in state.pending] + [state.clock + 1])
                if cfg.full_lead:
                    end = max(end, state.clock + cfg.alpha)
                return self._commit(Plan(), (), end, RULE_PROGRESS, None, 0.0, 0)
            self.finished = True
            return None
        overhead = time.perf_counter() - t0
        result = self._solve(goals)
        if not result.solved and cfg.fallback:
            first = result
            for alt in self._fallback_goals(goals):
                result = self._solve(alt)
                if result.solved:
                    log.debug("fallback %s after %s failed", alt, goals)
                    goals = alt
                    break
            else:
                result = first
        self.cpu_time += overhead
        if not result.solved:
            return self._fail(f"planner {result.status} on {', '.join(map(str, goals))} at t={state.clock}")
        try:
            eps, rule, hoist = cut_rule(result.plan, goals, state, inst, cfg.max_horizon,
                                        last_products=self.known)
        except HitFailure as exc:
            return self._fail(str(exc))
        if eps <= state.clock and rule != RULE_LAST:
            eps, rule = state.clock + 1, RULE_PROGRESS
        if cfg.full_lead and rule != RULE_LAST:
            eps = max(eps, state.clock + cfg.alpha)
        delay = 0
        plan = result.plan
        if self.runtime_model is not None and self.rounds:
            ticks = self.runtime_model(len(self.rounds), result.runtime)
            lead = state.clock - self.eps_hat
            plan, delay = shift_plan(plan, ticks, lead)
            if delay:
                if line_busy(state, inst):
                    self.waiting += delay
                if eps < cfg.max_horizon:
                    eps += delay
        return self._commit(plan, tuple(goals), eps, rule, hoist, result.runtime, delay)

    def _solve(self, goals) -> PlannerResult:
        state, inst = self.state, self.inst
        release = release_times(goals, self.schedule, state, inst)
        dispatch = frozenset(g.second for g in goals if g.predicate == HOIST_HAVE) | frozenset(
            g.first for g in goals if g.predicate == PRODUCT_AT)
        problem = SubProblem(state, tuple(goals), self.cfg.planner_cutoff, release, dispatch)
        result: PlannerResult = self.planner(problem, inst)
        self.cpu_time += result.runtime
        return result

    def _fallback_goals(self, failed):
        """Single-goal alternatives, most pressing processing deadline first."""
        state, inst = self.state, self.inst
        urgent = []
        for p, loc in enumerate(state.product_loc):
            if loc < 0 or inst.tanks[loc].kind is not TankKind.PROCESSING:
                continue
            step = state.product_step[p]
            r = inst.products[p].recipe
            if step < len(r):
                urgent.append((state.since[p] + r.hi[step], p))
        tried = {tuple(failed)}
        for _, p in sorted(urgent):
            e = next((x for x in self.schedule.chain(p) if is_hoist(x.resource)), None)
            if e is None:
                continue
            for h in [res_id(e.resource)] + [k for k in range(len(inst.hoists)) if k != res_id(e.resource)]:
                if not inst.hoists[h].covers(state.product_loc[p]):
                    continue
                alt = (SubGoal.hoist_have(h, p),)
                if alt not in tried:
                    tried.add(alt)
                    yield list(alt)
                break

    def _commit(self, plan: Plan, goals, eps: int, rule: str, hoist, runtime: float, delay: int):
        inst, cfg = self.inst, self.cfg
        state = self.state
        gamma0 = state.clock
        clipped = plan if rule == RULE_LAST else clip_plan(plan, eps)
        picked: list[tuple[int, int, int]] = []

        def watch(s: WorldState, ta: TimedAction):
            a = ta.action
            if a.name == PICKUP and inst.tanks[a.tank].kind is TankKind.PROCESSING:
                picked.append((a.product, s.product_step[a.product], s.clock - s.since[a.product]))

        t0 = time.perf_counter()
        until = eps if rule != RULE_LAST else max([gamma0] + [a.end for a in clipped.actions]
                                                   + [a.end for a in state.pending])
        try:
            new_state = update_after_clip(state, clipped, inst, until, rule, hoist, on_start=watch)
        except ActionError as exc:
            return self._fail(f"committed prefix is not executable: {exc}")
        if not validate_iota(new_state, inst, picked):
            return self._fail(f"processing window violated by t={new_state.clock}")
        self.schedule = update_schedule(self.schedule, clipped, now=new_state.clock, inst=inst, state=new_state,
                                        lookahead=cfg.lookahead)
        self.cpu_time += time.perf_counter() - t0
        self.state = new_state
        self.plan = self.plan + clipped
        eps_hat = compute_recompute_time(gamma0, eps, cfg.alpha) if rule != RULE_LAST else gamma0
        rnd = Round(len(self.rounds), gamma0, eps, eps_hat, tuple(goals), runtime, rule, clipped, delay)
        self.rounds.append(rnd)
        log.debug(rnd.trace_line())
        self.eps, self.eps_hat = eps, eps_hat
        if rule == RULE_LAST:
            self.eps = cfg.max_horizon
            if not self._open():
                self.finished = True
        if len(self.rounds) >= cfg.max_iterations:
            return self._fail("iteration limit reached")
        return rnd

    def _fail(self, why: str):
        self.failed = why
        self.finished = True
        log.debug("HIT failure: %s", why)
        return None

    def run(self) -> HitResult:
        while not self.finished:
            self.step()
        return self.result()

    def result(self) -> HitResult:
        ok = self.failed is None and not self._open()
        return HitResult(ok, self.plan, list(self.rounds), self.failed or "", self.cpu_time, self.state)


def run_hit(inst: Instance, cfg: Optional[HitConfig] = None, planner=None) -> HitResult:
    """Solve ``inst`` with the hierarchical loop; ``result.plan`` is the full plan."""
    return HitSession(inst, cfg, planner).run()
