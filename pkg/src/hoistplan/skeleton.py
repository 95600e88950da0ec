"""Skeleton schedules: a coarse forecast of which hoist and tank serve each product when.

An entry ``<product, resource, start, end>`` says the resource is occupied by
the product over the closed interval ``[start, end]``.  Resources are written
``H<i>`` for hoists and ``T<i>`` for tanks.  A hoist entry covers the approach
to the product, one lift and the transport to the destination tank; the tank
entry that follows starts when the hoist entry ends.

Collisions, safety distance and exact lift counts are ignored here; the
temporal planner fills those in.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .core.model import PICKUP, PUTDOWN, MOVE, Instance, Plan, TankKind, transport_time
from .core.state import WorldState


def hoist_res(h: int) -> str:
    return f"H{h}"


def tank_res(t: int) -> str:
    return f"T{t}"


def is_hoist(resource: str) -> bool:
    return resource[0] == "H"


def res_id(resource: str) -> int:
    return int(resource[1:])


class SkeletonEntry(NamedTuple):
    product: int
    resource: str
    start: int
    end: int
    # recipe index served (len(recipe) for the final unload)
    step: int = -1
    # hoist entries: destination tank and forecast pickup instant
    target: int = -1
    pick: int = -1
    started: bool = False

    def chain_key(self):
        return (self.step, 1 if self.resource[0] == "T" else 0)

    def line(self) -> str:
        return f"p{self.product} {self.resource} {self.start} {self.end}"


def _order(e: SkeletonEntry):
    return (e.start, e.product, e.chain_key(), e.resource)


@dataclass(frozen=True)
class SkeletonSchedule:
    entries: tuple[SkeletonEntry, ...] = ()
    # pairs of entries that could not be separated
    conflicts: tuple[tuple[SkeletonEntry, SkeletonEntry], ...] = ()
    # products that could not be dispatched yet
    unscheduled: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=_order)))

    @property
    def psi(self) -> tuple[int, ...]:
        return tuple(sorted({e.start for e in self.entries}))

    def __len__(self) -> int:
        return len(self.entries)

    def products(self) -> frozenset:
        return frozenset(e.product for e in self.entries)

    def chain(self, p: int) -> list[SkeletonEntry]:
        return sorted((e for e in self.entries if e.product == p), key=SkeletonEntry.chain_key)

    def dump(self) -> str:
        return "".join(e.line() + "\n" for e in self.entries)


def parse_dump(text: str) -> list[tuple[int, str, int, int]]:
    out = []
    for line in text.splitlines():
        if line.strip():
            p, r, a, b = line.split()
            out.append((int(p.lstrip("p")), r, int(a), int(b)))
    return out


class CandidateCost(NamedTuple):
    omega: int
    feasible: bool
    reason: str = ""


def _closed(a0: int, a1: int, b0: int, b1: int) -> bool:
    return a0 <= b1 and b0 <= a1


def overlap(e1: SkeletonEntry, e2: SkeletonEntry) -> int:
    """1 when ``e1`` (the earlier-starting entry) runs past the start of ``e2``
    and the two share a product or a resource."""
    if e1.end - e2.start > 0 and (e1.product == e2.product or e1.resource == e2.resource):
        return 1
    return 0


def _m(inst: Instance, i: int, j: int) -> int:
    return transport_time(inst, i, j)


def _tank_lo(inst: Instance, p: int, step: int) -> int:
    recipe = inst.products[p].recipe
    return recipe.lo[step] if step < len(recipe) else 0


def candidate_cost(
    inst: Instance,
    hoist: int,
    product: int,
    tank: int,
    psi_i: int,
    schedule: SkeletonSchedule | Iterable[SkeletonEntry],
    *,
    step: Optional[int] = None,
    origin: Optional[int] = None,
    hoist_loc: Optional[int] = None,
    available: Optional[Sequence[bool]] = None,
) -> CandidateCost:
    """Transport-plus-lift cost of serving ``product`` with ``hoist`` into ``tank`` at ``psi_i``.

    ``origin`` is the product's tank (default: its initial tank) and
    ``hoist_loc`` the hoist's tank at ``psi_i`` (default: its initial
    position).  A candidate that breaks an operation, hoist or tank exclusion
    is reported infeasible; ``omega`` is always filled in.
    """
    prod = inst.products[product]
    if step is None:
        step = prod.initial_step
    if origin is None:
        loc = prod.initial_location
        origin = inst.hoists[int(loc[1])].initial_position if isinstance(loc, (tuple, list)) else int(loc)
    if hoist_loc is None:
        hoist_loc = inst.hoists[hoist].initial_position
    omega = _m(inst, hoist_loc, origin) + inst.lift_time + _m(inst, origin, tank)
    entries = schedule.entries if isinstance(schedule, SkeletonSchedule) else tuple(schedule)
    if tank not in inst.targets(product, step):
        return CandidateCost(omega, False, "operation")
    avail = available if available is not None else [t.available for t in inst.tanks]
    if not avail[tank]:
        return CandidateCost(omega, False, "availability")
    hz = inst.hoists[hoist]
    if not (hz.covers(origin) and hz.covers(tank) and hz.covers(hoist_loc)):
        return CandidateCost(omega, False, "range")
    hr, tr = hoist_res(hoist), tank_res(tank)
    put = psi_i + omega
    lo = _tank_lo(inst, product, step)
    processing = inst.tanks[tank].kind is TankKind.PROCESSING
    for e in entries:
        if e.product == product:
            continue
        if e.resource == hr and _closed(e.start, e.end, psi_i, put):
            return CandidateCost(omega, False, "hoist")
        if processing and e.resource == tr and _closed(e.start, e.end, put, put + lo):
            return CandidateCost(omega, False, "tank")
    return CandidateCost(omega, True, "")


# -- dispatch ------------------------------------------------------------------------

class _Where(NamedTuple):
    """Where a product stands when its remaining chain is planned."""

    loc: int            # tank, or the holder's tank when gripped
    step: int           # recipe index of the next tank to visit
    since: Optional[int]  # entry instant into a processing tank
    holder: Optional[int]
    earliest: int


def _where(inst: Instance, p: int, state: Optional[WorldState], now: int) -> Optional[_Where]:
    prod = inst.products[p]
    if state is None:
        loc = prod.initial_location
        if isinstance(loc, (tuple, list)):
            h = int(loc[1])
            return _Where(inst.hoists[h].initial_position, prod.initial_step, None, h, now)
        step = prod.initial_step
        if inst.tanks[loc].kind is TankKind.PROCESSING:
            return _Where(loc, step + 1, now - prod.initial_elapsed, None, now)
        if inst.tanks[loc].kind is TankKind.UNLOADING and step >= len(prod.recipe):
            return None
        return _Where(loc, step, None, None, max(now, prod.arrival_time))
    if state.is_done(inst, p):
        return None
    loc = state.product_loc[p]
    step = state.product_step[p]
    if loc < 0:
        h = -1 - loc
        return _Where(state.hoist_pos[h], step, None, h, now)
    if inst.tanks[loc].kind is TankKind.PROCESSING:
        return _Where(loc, step + 1, state.since[p], None, now)
    return _Where(loc, step, None, None, max(now, prod.arrival_time))


class _Ctx:
    """Entries plus per-hoist location lookups while a schedule is being grown."""

    def __init__(self, inst: Instance, entries: Iterable[SkeletonEntry], state: Optional[WorldState],
                 available: Sequence[bool]):
        self.inst = inst
        self.entries = list(entries)
        self.available = available
        self.now = state.clock if state is not None else 0
        self.base = tuple(state.hoist_pos) if state is not None else tuple(h.initial_position for h in inst.hoists)

    def hoist_loc(self, h: int, t: int, extra: Sequence[SkeletonEntry] = ()) -> int:
        hr = hoist_res(h)
        best, loc = None, self.base[h]
        for e in list(self.entries) + list(extra):
            if e.resource == hr and e.end <= t and e.target >= 0 and (best is None or e.end > best):
                best, loc = e.end, e.target
        return loc

    def max_end(self) -> int:
        return max((e.end for e in self.entries), default=0)


def _best_pair(ctx: _Ctx, p: int, w: _Where, step: int, s: int, extra: list[SkeletonEntry],
               window: Optional[tuple[int, int]]):
    """Cheapest feasible (omega, hoist, tank, pick) at dispatch instant ``s``."""
    inst = ctx.inst
    best = None
    view = ctx.entries + extra
    hoists = [w.holder] if w.holder is not None else range(len(inst.hoists))
    for h in hoists:
        hl = w.loc if w.holder is not None else ctx.hoist_loc(h, s, extra)
        approach = 0 if w.holder is not None else _m(inst, hl, w.loc)
        pick = s + approach
        if window is not None and not (window[0] <= s and pick <= window[1]):
            continue
        for t in inst.targets(p, step):
            c = candidate_cost(inst, h, p, t, s, view, step=step, origin=w.loc, hoist_loc=hl,
                               available=ctx.available)
            if not c.feasible:
                continue
            key = (c.omega, h, t)
            if best is None or key < best[0]:
                best = (key, pick)
    if best is None:
        return None
    (omega, h, t), pick = best
    return omega, h, t, pick


def _stay_free(ctx: _Ctx, p: int, tank: int, a: int, b: int, extra) -> bool:
    tr = tank_res(tank)
    for e in ctx.entries + extra:
        if e.product != p and e.resource == tr and _closed(e.start, e.end, a, b):
            return False
    return True


def _plan_chain(ctx: _Ctx, p: int, w: _Where, first: Optional[int]) -> Optional[list[SkeletonEntry]]:
    """Entries for the rest of ``p``'s recipe, or None when some step has no slot.

    For a product waiting at a loading tank ``first`` fixes the first
    dispatch instant; later steps search their processing window.
    """
    inst = ctx.inst
    recipe = inst.products[p].recipe
    out: list[SkeletonEntry] = []
    step = w.step
    since = w.since
    in_tank = w.loc if w.since is not None else None
    if in_tank is not None:
        out.append(SkeletonEntry(p, tank_res(in_tank), since, since + recipe.lo[step - 1], step - 1))
    while True:
        if since is None:
            cands = [first if first is not None else w.earliest]
            window = None
        else:
            lo, hi = recipe.lo[step - 1], recipe.hi[step - 1]
            window = (max(since + lo, ctx.now), since + hi)
            if window[0] > window[1]:
                return None
            cands = _window_candidates(ctx, window, out)
        found = None
        for s in cands:
            if in_tank is not None and not _stay_free(ctx, p, in_tank, since, s, out):
                continue
            found = _best_pair(ctx, p, w, step, s, out, window)
            if found is not None:
                break
        if found is None:
            return None
        omega, h, t, pick = found
        if in_tank is not None:
            # close the stay in the tank just left
            for i, e in enumerate(out):
                if e.resource == tank_res(in_tank) and e.step == step - 1:
                    out[i] = e._replace(end=s)
        out.append(SkeletonEntry(p, hoist_res(h), s, s + omega, step, t, pick))
        put = s + omega
        if step >= len(recipe):
            out.append(SkeletonEntry(p, tank_res(t), put, put, step))
            return out
        out.append(SkeletonEntry(p, tank_res(t), put, put + recipe.lo[step], step))
        w = _Where(t, step + 1, put, None, put)
        in_tank, since, step = t, put, step + 1


def _window_candidates(ctx: _Ctx, window: tuple[int, int], extra) -> list[int]:
    lo, hi = window
    c = {lo}
    for e in ctx.entries + extra:
        for t in (e.start, e.end + 1):
            if lo < t <= hi:
                c.add(t)
    return sorted(c)


def schedule_new_products(
    inst: Instance,
    old: SkeletonSchedule,
    new_products: Iterable[int],
    *,
    now: int = 0,
    state: Optional[WorldState] = None,
    not_before: Optional[Mapping[int, int]] = None,
) -> SkeletonSchedule:
    """Dispatch ``new_products`` around the existing entries without moving them.

    Dispatch instants are tried in ascending order from the start-time
    sequence; products are visited by arrival time, then id.  As a last
    resort a product is dispatched just after every existing entry has ended.
    Products with no feasible slot are listed in ``unscheduled``.
    ``not_before`` bounds the first dispatch instant of waiting products.
    """
    new = sorted(set(new_products), key=lambda p: (inst.products[p].arrival_time, p))
    if not new:
        return old
    available = state.tank_available if state is not None else tuple(t.available for t in inst.tanks)
    ctx = _Ctx(inst, old.entries, state, available)
    ctx.now = now
    left = []
    waiting = []
    for p in new:
        w = _where(inst, p, state, now)
        if w is None:
            continue
        if w.since is not None or w.holder is not None:
            chain = _plan_chain(ctx, p, w, None)
            if chain is None:
                left.append(p)
            else:
                ctx.entries.extend(chain)
        else:
            if not_before and p in not_before:
                w = w._replace(earliest=max(w.earliest, not_before[p]))
            waiting.append((p, w))
    done: set[int] = set()
    tried: set[int] = set()
    while len(done) < len(waiting):
        starts = sorted({e.start for e in ctx.entries} | {now})
        todo = [(p, w) for p, w in waiting if p not in done]
        lo = min(w.earliest for _, w in todo)
        instants = [s for s in starts if s >= lo and s not in tried]
        if not instants:
            break
        s = instants[0]
        tried.add(s)
        for p, w in todo:
            if s < w.earliest:
                continue
            chain = _plan_chain(ctx, p, w, s)
            if chain is not None:
                ctx.entries.extend(chain)
                done.add(p)
    for p, w in waiting:
        if p in done:
            continue
        s = max(ctx.max_end() + 1, w.earliest)
        chain = _plan_chain(ctx, p, w, s)
        if chain is None:
            left.append(p)
        else:
            ctx.entries.extend(chain)
    keep = old.unscheduled - set(new)
    return SkeletonSchedule(tuple(ctx.entries), old.conflicts, frozenset(keep | set(left)))


# -- updating ------------------------------------------------------------------------

def _shift_after(chain: list[SkeletonEntry], idx: int, delta: int) -> None:
    for i in range(idx + 1, len(chain)):
        e = chain[i]
        chain[i] = e._replace(start=e.start + delta, end=e.end + delta,
                              pick=e.pick + delta if e.pick >= 0 else e.pick)


def _first(chain, hoist: bool):
    for i, e in enumerate(chain):
        if is_hoist(e.resource) == hoist:
            return i
    return None


def update_schedule(
    sched: SkeletonSchedule,
    executed: Plan | Iterable,
    now: Optional[int] = None,
    inst: Optional[Instance] = None,
    recipes: Optional[Mapping[int, object]] = None,
    diagnostics: Optional[list] = None,
    state: Optional[WorldState] = None,
    lookahead: Optional[int] = None,
) -> SkeletonSchedule:
    """Rewrite forecast entries with the times of executed actions.

    A pickup fixes the start of the product's next hoist entry and shifts its
    later entries by the lateness; a carrying move fixes that entry's end; a
    putdown retires the hoist entry and pins the start of the tank entry.  A
    tank entry is retired once the product is picked out of it (or, for an
    unloading tank, once it is put in).  With ``now`` given, entries whose
    forecast already lies in the past are deferred to ``now``.  Overlaps
    created by the changes are then resolved when ``inst`` is supplied; a
    product not yet loaded that still clashes is dispatched again (``state``
    gives the hoist positions for that).  ``lookahead`` limits that repair to
    the first waiting products in forecast order.
    """
    actions = list(executed.actions if isinstance(executed, Plan) else executed)
    if not actions and now is None:
        return sched
    chains: dict[int, list[SkeletonEntry]] = {}
    for e in sched.entries:
        chains.setdefault(e.product, []).append(e)
    for c in chains.values():
        c.sort(key=SkeletonEntry.chain_key)
    carrying: dict[int, int] = {}
    for c in chains.values():
        i = _first(c, True)
        if i is not None and c[i].started:
            carrying[res_id(c[i].resource)] = c[i].product
    for ta in sorted(actions, key=lambda a: a.sort_key()):
        a = ta.action
        if a.name == MOVE:
            p = carrying.get(a.hoist)
            if p is None or p not in chains:
                if diagnostics is not None:
                    diagnostics.append(f"{ta.start}: move of hoist {a.hoist} has no entry")
                continue
            chain = chains[p]
            i = _first(chain, True)
            if i is None:
                continue
            e = chain[i]
            delta = ta.end - e.end
            chain[i] = e._replace(end=ta.end)
            _shift_after(chain, i, delta)
            continue
        p = a.product
        chain = chains.get(p)
        if chain is None:
            if diagnostics is not None:
                diagnostics.append(f"{ta.start}: {a.name} of product {p} has no entry")
            continue
        if a.name == PICKUP:
            # the tank the product leaves
            for i, e in enumerate(chain):
                if not is_hoist(e.resource) and res_id(e.resource) == a.tank:
                    del chain[i]
                    break
            i = _first(chain, True)
            if i is None:
                continue
            e = chain[i]
            pick = e.pick if e.pick >= 0 else e.start
            delta = ta.start - pick
            chain[i] = e._replace(resource=hoist_res(a.hoist), start=min(e.start + max(delta, 0), ta.start),
                                  end=e.end + delta, pick=ta.start, started=True)
            _shift_after(chain, i, delta)
            carrying[a.hoist] = p
        else:
            i = _first(chain, True)
            if i is not None and chain[i].started:
                del chain[i]
            carrying.pop(a.hoist, None)
            j = _first(chain, False)
            if j is None:
                continue
            e = chain[j]
            delta = ta.end - e.start
            unload = inst is not None and inst.tanks[a.tank].kind is TankKind.UNLOADING
            if unload or (inst is None and e.start == e.end):
                del chain[j]
                continue
            chain[j] = e._replace(resource=f"T{a.tank}", start=ta.end, end=e.end + delta)
            _shift_after(chain, j, delta)
    if now is not None:
        for p, chain in chains.items():
            if not chain:
                continue
            e = chain[0]
            if is_hoist(e.resource) and not e.started:
                pick = e.pick if e.pick >= 0 else e.start
                delta = now - pick
                if delta > 0:
                    _shift_after(chain, -1, delta)
            else:
                if e.end < now:
                    delta = now - e.end
                    chain[0] = e._replace(end=now)
                    _shift_after(chain, 0, delta)
    entries = tuple(e for c in chains.values() for e in c)
    out = SkeletonSchedule(entries, (), sched.unscheduled)
    if inst is None:
        return out
    if recipes is not None:
        return resolve_overlaps(out, recipes)
    # products still waiting to be loaded are taken out, and any of them that
    # clashes with the settled entries is dispatched again from scratch;
    # nudging them locally can make two waiting products leapfrog forever
    waiting = [p for p, c in chains.items() if c and is_hoist(c[0].resource) and not c[0].started]
    settled = SkeletonSchedule(tuple(e for p, c in chains.items() if p not in waiting for e in c),
                               (), sched.unscheduled)
    out = resolve_overlaps(settled, inst)
    order = sorted(waiting, key=lambda p: (chains[p][0].start, p))
    if lookahead is not None:
        # far back in the queue a stale forecast is harmless; it is repaired
        # once the product comes within the lookahead
        order, rest = order[:lookahead], order[lookahead:]
    else:
        rest = []
    for p in order:
        if any(overlap(a, b) or overlap(b, a) for a in chains[p] for b in out.entries
               if a.resource == b.resource):
            # slots only slip later between rounds, so the old start bounds the search
            out = schedule_new_products(inst, out, [p], now=now if now is not None else 0, state=state,
                                        not_before={p: chains[p][0].start})
        else:
            out = SkeletonSchedule(out.entries + tuple(chains[p]), out.conflicts, out.unscheduled)
    if rest:
        out = SkeletonSchedule(out.entries + tuple(e for p in rest for e in chains[p]),
                               out.conflicts, out.unscheduled)
    return out


# -- overlap resolution --------------------------------------------------------------

def _bounds(recipes, p: int, step: int) -> tuple[int, int]:
    if isinstance(recipes, Instance):
        r = recipes.products[p].recipe
    else:
        r = recipes[p]
    if step < len(r.lo):
        return r.lo[step], r.hi[step]
    return 0, 0


def _find_overlap(entries: Sequence[SkeletonEntry]):
    ordered = sorted(entries, key=lambda e: (e.start, e.chain_key(), e.product))
    by_res: dict[str, SkeletonEntry] = {}
    for e2 in ordered:
        e1 = by_res.get(e2.resource)
        if e1 is not None and e1.product != e2.product and overlap(e1, e2):
            return e1, e2
        if e1 is None or e2.end > e1.end:
            by_res[e2.resource] = e2
    return None


def _slack(chain, idx, recipes) -> int:
    total = 0
    for i in idx:
        x = chain[i]
        stay = x.end - x.start
        _, hi = _bounds(recipes, x.product, x.step)
        if 0 < stay <= hi:
            total += hi - stay
    return total


def resolve_overlaps(sched: SkeletonSchedule, recipes, max_rounds: int = 10_000) -> SkeletonSchedule:
    """Separate entries that share a resource by lengthening earlier tank stays.

    For an overlap of ``delta`` ticks the later product's tank stays are
    walked backwards from the one in force when the clash begins; each stay
    below its upper bound absorbs as much of ``delta`` as it can, pushing the
    rest of the chain later.  A product still waiting to be loaded is simply
    delayed, and so is the earlier product of a pair when it has not been
    loaded and the later one lacks the slack.  Overlaps that cannot be
    absorbed are reported in ``conflicts``.
    """
    chains: dict[int, list[SkeletonEntry]] = {}
    for e in sched.entries:
        chains.setdefault(e.product, []).append(e)
    for c in chains.values():
        c.sort(key=SkeletonEntry.chain_key)
    conflicts = list(sched.conflicts)
    stuck: set[tuple] = set()
    for _ in range(max_rounds):
        entries = [e for c in chains.values() for e in c]
        pair = _find_overlap([e for e in entries if (e.product, e.resource, e.step) not in stuck])
        if pair is None:
            break
        e1, e2 = pair
        delta = e1.end - e2.start
        chain = chains[e2.product]
        k = chain.index(e2)
        if is_hoist(chain[0].resource) and not chain[0].started:
            # still waiting to be loaded: delaying it costs nothing
            _shift_after(chain, -1, delta)
            continue
        tanks = [i for i in range(k + 1) if not is_hoist(chain[i].resource) and chain[i].start <= e2.start]
        first = chains[e1.product]
        if is_hoist(first[0].resource) and not first[0].started and _slack(chain, tanks, recipes) < delta:
            # the later product cannot wait long enough; the earlier one has
            # not been loaded yet, so it goes after the clash instead
            _shift_after(first, -1, e2.end - e1.start)
            continue
        for i in reversed(tanks):
            if delta <= 0:
                break
            x = chain[i]
            stay = x.end - x.start
            _, hi = _bounds(recipes, x.product, x.step)
            if 0 < stay <= hi and hi - stay > 0:
                dt = min(delta, hi - stay)
                chain[i] = x._replace(end=x.end + dt)
                _shift_after(chain, i, dt)
                delta -= dt
        if delta > 0:
            conflicts.append((e1, chains[e2.product][k]))
            stuck.add((e2.product, e2.resource, e2.step))
    entries = tuple(e for c in chains.values() for e in c)
    return SkeletonSchedule(entries, tuple(conflicts), sched.unscheduled)


def entry_goal_hoist(sched: SkeletonSchedule, p: int, rank: int = 1) -> Optional[SkeletonEntry]:
    """The product's hoist entry with the ``rank``-th smallest start (0-based)."""
    hs = sorted((e for e in sched.entries if e.product == p and is_hoist(e.resource)),
                key=lambda e: (e.start, e.chain_key()))
    return hs[rank] if len(hs) > rank else None
