"""Durative-action planning documents and the plan-line text format.

Grammar of the plan lines (one action per line, blank lines and ``;`` comments
ignored)::

    <start> (<Move-Hoist|PickUp-Hoist|PutDown-Hoist> <arg>...) [<duration>]

Times may be fractional (``2667.0``, ``5.00``); they are read as exact
rationals and rounded half-up to whole ticks unless ``strict`` is set, in
which case non-integral times are rejected.  Object names are ``hoist<i>``,
``tank<i>`` and ``p<i>``.

The domain document is a reconstruction of the three action schemas
(``Move-Hoist``, ``PickUp-Hoist``, ``PutDown-Hoist``) in PDDL 2.1 durative
syntax; grammar version is recorded in :data:`DOMAIN_VERSION`.
"""

from __future__ import annotations

import os
import re
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .core.model import (
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
    hoist_name,
    parse_name,
    product_name,
    tank_name,
)
from .core.model import transport_time
from .core.state import WorldState
from .goals import HOIST_AT, HOIST_HAVE, PRODUCT_AT, SubGoal

DOMAIN_VERSION = "hoistplan-domain/1"


class PlanParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


# -- plan lines -------------------------------------------------------------------

_LINE = re.compile(r"^\s*([0-9]+(?:\.[0-9]*)?)\s*:?\s*\(\s*([A-Za-z][\w-]*)((?:\s+[\w-]+)*)\s*\)\s*(?:\[?\s*([0-9]+(?:\.[0-9]*)?)\s*\]?)?\s*$")


def _ticks(text: str, lineno: int, strict: bool) -> int:
    q = Fraction(text)
    if q.denominator != 1:
        if strict:
            raise PlanParseError(lineno, f"non-integral time {text}")
        return int(q + Fraction(1, 2)) if q >= 0 else -int(-q + Fraction(1, 2))
    return int(q)


def render_action(ta: TimedAction) -> str:
    a = ta.action
    if a.name == MOVE:
        args = f"{hoist_name(a.hoist)} {tank_name(a.src)} {tank_name(a.dst)}"
    else:
        args = f"{hoist_name(a.hoist)} {tank_name(a.tank)} {product_name(a.product)}"
    return f"{ta.start}.0    ({a.name} {args})    {ta.duration}.00"


def render_plan(plan: Plan) -> str:
    return "".join(render_action(a) + "\n" for a in plan)


def parse_plan(text: str, strict: bool = False, default_duration: Optional[int] = None) -> Plan:
    """Read plan lines into a :class:`Plan` sorted by start time."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if m is None:
            raise PlanParseError(lineno, f"malformed plan line {raw!r}")
        start_s, name, args_s, dur_s = m.groups()
        args = args_s.split()
        try:
            if name == MOVE:
                if len(args) != 3:
                    raise ValueError("Move-Hoist takes 3 arguments")
                action = Move(parse_name(args[0], "hoist"), parse_name(args[1], "tank"), parse_name(args[2], "tank"))
            elif name in (PICKUP, PUTDOWN):
                if len(args) != 3:
                    raise ValueError(f"{name} takes 3 arguments")
                cls = PickUp if name == PICKUP else PutDown
                action = cls(parse_name(args[0], "hoist"), parse_name(args[1], "tank"), parse_name(args[2], "p"))
            else:
                raise ValueError(f"unknown action {name!r}")
        except ValueError as exc:
            raise PlanParseError(lineno, str(exc)) from None
        if dur_s is None:
            if default_duration is None:
                raise PlanParseError(lineno, "missing duration")
            dur = default_duration
        else:
            dur = _ticks(dur_s, lineno, strict)
        out.append(TimedAction(action, _ticks(start_s, lineno, strict), dur))
    return Plan(tuple(out))


def read_plan(path, strict: bool = False) -> Plan:
    return parse_plan(Path(path).read_text(), strict=strict)


def write_plan(plan: Plan, path) -> None:
    Path(path).write_text(render_plan(plan))


# -- domain -----------------------------------------------------------------------

DOMAIN_TEXT = """\
; hoistplan-domain/1
(define (domain hoist-scheduling)
  (:requirements :typing :durative-actions :fluents :negative-preconditions)
  (:types hoist tank product operation)
  (:predicates
    (hoist_position ?h - hoist ?t - tank)
    (hoist_empty ?h - hoist)
    (hoist_have ?h - hoist ?r - product)
    (hoist_free ?h - hoist)
    (hoist_start_moving ?h - hoist)
    (hoist_stop_moving ?h - hoist)
    (in_range ?h - hoist ?t - tank)
    (tank_free ?t - tank)
    (tank_available ?t - tank)
    (processing_tank ?t - tank)
    (unloading_tank ?t - tank)
    (product_at ?r - product ?t - tank)
    (next_tank ?r - product ?t - tank)
    (product_ready ?r - product)
    (safe_move ?h - hoist ?from ?to - tank))
  (:functions
    (hoist_pickup_duration)
    (hoist_putdown_duration)
    (hoist_startup_duration)
    (move_duration ?from ?to - tank)
    (processing_time ?r - product)
    (min_processing ?r - product)
    (max_processing ?r - product))

  (:durative-action Move-Hoist
    :parameters (?h - hoist ?from ?to - tank)
    :duration (= ?duration (move_duration ?from ?to))
    :condition (and
      (at start (hoist_position ?h ?from))
      (at start (hoist_free ?h))
      (at start (hoist_start_moving ?h))
      (at start (in_range ?h ?to))
      (over all (safe_move ?h ?from ?to)))
    :effect (and
      (at start (not (hoist_position ?h ?from)))
      (at start (not (hoist_free ?h)))
      (at end (hoist_position ?h ?to))
      (at end (hoist_free ?h))))

  (:durative-action Start-Hoist
    :parameters (?h - hoist)
    :duration (= ?duration (hoist_startup_duration))
    :condition (and
      (at start (hoist_stop_moving ?h))
      (at start (hoist_free ?h)))
    :effect (and
      (at start (not (hoist_free ?h)))
      (at end (not (hoist_stop_moving ?h)))
      (at end (hoist_start_moving ?h))
      (at end (hoist_free ?h))))

  (:durative-action PickUp-Hoist
    :parameters (?h - hoist ?t - tank ?r - product)
    :duration (= ?duration (hoist_pickup_duration))
    :condition (and
      (at start (hoist_empty ?h))
      (at start (hoist_free ?h))
      (at start (product_at ?r ?t))
      (at start (product_ready ?r))
      (at start (>= (processing_time ?r) (min_processing ?r)))
      (at start (<= (processing_time ?r) (max_processing ?r)))
      (over all (hoist_position ?h ?t)))
    :effect (and
      (at start (not (hoist_empty ?h)))
      (at start (not (hoist_free ?h)))
      (at start (not (product_at ?r ?t)))
      (at end (hoist_have ?h ?r))
      (at end (tank_free ?t))
      (at end (hoist_free ?h))))

  (:durative-action PutDown-Hoist
    :parameters (?h - hoist ?t - tank ?r - product)
    :duration (= ?duration (hoist_putdown_duration))
    :condition (and
      (at start (hoist_have ?h ?r))
      (at start (hoist_free ?h))
      (at start (next_tank ?r ?t))
      (at start (tank_free ?t))
      (at start (tank_available ?t))
      (over all (hoist_position ?h ?t)))
    :effect (and
      (at start (not (hoist_free ?h)))
      (at start (not (tank_free ?t)))
      (at end (not (hoist_have ?h ?r)))
      (at end (hoist_empty ?h))
      (at end (product_at ?r ?t))
      (at end (assign (processing_time ?r) 0))
      (at end (hoist_free ?h))))
)
"""

SCHEMA_NAMES = ("Move-Hoist", "Start-Hoist", "PickUp-Hoist", "PutDown-Hoist")


@dataclass(frozen=True)
class DomainDoc:
    text: str
    symbols: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProblemDoc:
    text: str
    symbols: dict = field(default_factory=dict)
    degenerate: bool = False


def export_domain(inst: Optional[Instance] = None) -> DomainDoc:
    """The action schemas; identical for every instance."""
    return DomainDoc(DOMAIN_TEXT, {})


def schema_block(text: str, name: str) -> str:
    """Extract the body of one durative action from a domain document."""
    start = text.index(f"(:durative-action {name}")
    depth = 0
    for i in range(start, len(text)):
        if text[i] == "(":
            depth += 1
        elif text[i] == ")":
            depth -= 1
            if depth == 0:
                return text[start:i + 1]
    raise ValueError(f"unterminated schema {name}")


def _slot_items(block: str, section: str) -> list[str]:
    body = block[block.index(section):]
    body = body[body.index("(and") + 4:]
    items, depth, cur = [], 0, ""
    for ch in body:
        if ch == "(":
            depth += 1
        if depth > 0:
            cur += ch
        if ch == ")":
            depth -= 1
            if depth == 0:
                items.append(" ".join(cur.split()))
                cur = ""
            if depth < 0:
                break
    return items


def schema_conditions(text: str, name: str) -> list[str]:
    return _slot_items(schema_block(text, name), ":condition")


def schema_effects(text: str, name: str) -> list[str]:
    return _slot_items(schema_block(text, name), ":effect")


# -- problem ----------------------------------------------------------------------

def grounded_facts(state: WorldState, inst: Instance, release=None) -> set[tuple]:
    """Ground atoms and numeric assignments describing ``state``.

    Predicates are tuples of names; numeric fluents are ``("=", fluent, value)``.
    """
    facts: set[tuple] = set()
    busy = {a.action.hoist for a in state.pending}
    if state.pending:
        raise ValueError("export requires a state without in-flight actions")
    for h, hoist in enumerate(inst.hoists):
        hn = hoist_name(h)
        facts.add(("hoist_position", hn, tank_name(state.hoist_pos[h])))
        if h not in busy:
            facts.add(("hoist_free", hn))
        facts.add(("hoist_start_moving" if state.hoist_moving[h] else "hoist_stop_moving", hn))
        load = state.hoist_load[h]
        if load is None:
            facts.add(("hoist_empty", hn))
        else:
            facts.add(("hoist_have", hn, product_name(load)))
        for t in range(hoist.range[0], hoist.range[1] + 1):
            facts.add(("in_range", hn, tank_name(t)))
    for t, tank in enumerate(inst.tanks):
        tn = tank_name(t)
        if state.tank_available[t]:
            facts.add(("tank_available", tn))
        if tank.kind is TankKind.PROCESSING:
            facts.add(("processing_tank", tn))
            if state.tank_occupant[t] is None:
                facts.add(("tank_free", tn))
        else:
            facts.add(("tank_free", tn))
            if tank.kind is TankKind.UNLOADING:
                facts.add(("unloading_tank", tn))
    for p, prod in enumerate(inst.products):
        pn = product_name(p)
        loc = state.product_loc[p]
        step = state.product_step[p]
        if loc >= 0:
            facts.add(("product_at", pn, tank_name(loc)))
        for t in inst.targets(p, step):
            facts.add(("next_tank", pn, tank_name(t)))
        ready = state.clock >= prod.arrival_time and state.clock >= (release or {}).get(p, 0)
        if ready:
            facts.add(("product_ready", pn))
        if loc >= 0 and inst.tanks[loc].kind is TankKind.PROCESSING and step < len(prod.recipe):
            lo, hi = prod.recipe.lo[step], prod.recipe.hi[step]
            e = state.clock - state.since[p]
        else:
            lo, hi, e = 0, 10**9, 0
        facts.add(("=", ("processing_time", pn), e))
        facts.add(("=", ("min_processing", pn), lo))
        facts.add(("=", ("max_processing", pn), hi))
    facts.add(("=", ("hoist_pickup_duration",), inst.lift_time))
    facts.add(("=", ("hoist_putdown_duration",), inst.lift_time))
    facts.add(("=", ("hoist_startup_duration",), inst.lift_time))
    n = len(inst.tanks)
    for i in range(n):
        for j in range(n):
            if i != j:
                facts.add(("=", ("move_duration", tank_name(i), tank_name(j)), transport_time(inst, i, j)))
    return facts


def _fact_text(f: tuple) -> str:
    if f[0] == "=":
        return f"(= ({' '.join(f[1])}) {f[2]})"
    return f"({' '.join(f)})"


def _symbols(inst: Instance) -> dict:
    sym = {}
    sym.update({hoist_name(h): ("hoist", h) for h in range(len(inst.hoists))})
    sym.update({tank_name(t): ("tank", t) for t in range(len(inst.tanks))})
    sym.update({product_name(p): ("product", p) for p in range(len(inst.products))})
    return sym


def export_problem(state: WorldState, goals: Iterable[SubGoal], inst: Instance,
                   release=None, name: str = "hoist-subproblem") -> ProblemDoc:
    goals = list(goals)
    facts = sorted(grounded_facts(state, inst, release), key=_fact_text)
    sym = _symbols(inst)
    by_type: dict[str, list[str]] = {"hoist": [], "tank": [], "product": []}
    for nm, (typ, _) in sym.items():
        by_type[typ].append(nm)
    objects = "\n".join(f"    {' '.join(v)} - {k}" for k, v in by_type.items() if v)
    init = "\n".join(f"    {_fact_text(f)}" for f in facts)
    goal = "\n".join(f"    {g.pddl()}" for g in goals)
    text = (
        f"; {DOMAIN_VERSION} t={state.clock}\n"
        f"(define (problem {name})\n"
        f"  (:domain hoist-scheduling)\n"
        f"  (:objects\n{objects})\n"
        f"  (:init\n{init})\n"
        f"  (:goal (and\n{goal}))\n"
        f"  (:metric minimize (total-time)))\n"
    )
    return ProblemDoc(text, sym, degenerate=not goals)


def _sexpr(text: str):
    tokens = re.findall(r"\(|\)|[^\s()]+", re.sub(r";[^\n]*", "", text))
    stack: list = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    return stack[0]


def read_problem(text: str) -> tuple[set[tuple], list[SubGoal]]:
    """Re-ingest an exported problem: its ground facts and goal predicates."""
    (doc,) = _sexpr(text)
    facts: set[tuple] = set()
    goals: list[SubGoal] = []
    for part in doc[2:]:
        if part[0] == ":init":
            for f in part[1:]:
                if f[0] == "=":
                    val = f[2]
                    facts.add(("=", tuple(f[1]), int(val)))
                else:
                    facts.add(tuple(f))
        elif part[0] == ":goal":
            body = part[1]
            items = body[1:] if body and body[0] == "and" else [body]
            for g in items:
                if g[0] == "hoist_have":
                    goals.append(SubGoal.hoist_have(parse_name(g[1], "hoist"), parse_name(g[2], "p")))
                elif g[0] == "hoist_position":
                    goals.append(SubGoal.hoist_at(parse_name(g[1], "hoist"), parse_name(g[2], "tank")))
                elif g[0] == "product_at":
                    goals.append(SubGoal.product_at(parse_name(g[1], "p"), parse_name(g[2], "tank")))
    return facts, goals


# -- external planner adapter ----------------------------------------------------------

class ExternalPlanner:
    """Run an external durative-action planner as a subprocess.

    ``command`` is a list (or shell-style string) run with the domain and
    problem paths appended; the planner must print plan lines on stdout.  A
    nonzero exit code or timeout counts as no solution.
    """

    name = "external"

    def __init__(self, command, keep_files: bool = False):
        self.command = command.split() if isinstance(command, str) else list(command)
        self.keep_files = keep_files

    def __call__(self, problem, inst: Instance, cancel=None):
        from .tplanner import SOLVED, TIMEOUT, UNSOLVABLE, PlannerResult

        t0 = time.perf_counter()
        with tempfile.TemporaryDirectory() as tmp:
            dom = os.path.join(tmp, "domain.pddl")
            prob = os.path.join(tmp, "problem.pddl")
            Path(dom).write_text(export_domain(inst).text)
            Path(prob).write_text(export_problem(problem.state, problem.goals, inst, problem.release).text)
            try:
                proc = subprocess.run(self.command + [dom, prob], capture_output=True, text=True,
                                      timeout=problem.cutoff)
            except subprocess.TimeoutExpired:
                return PlannerResult(Plan(), time.perf_counter() - t0, TIMEOUT)
        elapsed = time.perf_counter() - t0
        if proc.returncode != 0:
            return PlannerResult(Plan(), elapsed, UNSOLVABLE)
        lines = [l for l in proc.stdout.splitlines() if _LINE.match(l.split(";", 1)[0].strip() or "x")]
        try:
            plan = parse_plan("\n".join(lines))
        except PlanParseError:
            return PlannerResult(Plan(), elapsed, UNSOLVABLE)
        # external plans are timed from zero; splice onto the sub-problem clock
        offset = problem.state.clock if plan.actions and plan.actions[0].start < problem.state.clock else 0
        return PlannerResult(plan.shifted(offset), elapsed, SOLVED)
