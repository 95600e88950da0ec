"""Grounded goal predicates shared by the planner, the hierarchy and the PDDL writer."""

from __future__ import annotations

from typing import NamedTuple

from .core.model import MOVE, PICKUP, PUTDOWN, Instance, hoist_name, product_name, tank_name
from .core.state import WorldState

HOIST_HAVE = "hoist_have"
HOIST_AT = "hoist_at"
PRODUCT_AT = "product_at"


class SubGoal(NamedTuple):
    """``hoist_have(H, p)``, ``hoist_at(H, T)`` or ``product_at(p, T)``."""

    predicate: str
    first: int
    second: int

    @classmethod
    def hoist_have(cls, h: int, p: int) -> "SubGoal":
        return cls(HOIST_HAVE, h, p)

    @classmethod
    def hoist_at(cls, h: int, t: int) -> "SubGoal":
        return cls(HOIST_AT, h, t)

    @classmethod
    def product_at(cls, p: int, t: int) -> "SubGoal":
        return cls(PRODUCT_AT, p, t)

    def check(self, inst: Instance) -> None:
        nh, nt, npr = len(inst.hoists), len(inst.tanks), len(inst.products)
        ok = {
            HOIST_HAVE: self.first < nh and self.second < npr,
            HOIST_AT: self.first < nh and self.second < nt,
            PRODUCT_AT: self.first < npr and self.second < nt,
        }.get(self.predicate)
        if not ok or self.first < 0 or self.second < 0:
            raise ValueError(f"ill-formed sub-goal {self}")

    def pddl(self) -> str:
        if self.predicate == HOIST_HAVE:
            return f"(hoist_have {hoist_name(self.first)} {product_name(self.second)})"
        if self.predicate == HOIST_AT:
            return f"(hoist_position {hoist_name(self.first)} {tank_name(self.second)})"
        return f"(product_at {product_name(self.first)} {tank_name(self.second)})"

    def __str__(self) -> str:
        a, b = self.first, self.second
        if self.predicate == HOIST_HAVE:
            return f"hoist_have(H{a},p{b})"
        if self.predicate == HOIST_AT:
            return f"hoist_at(H{a},T{b})"
        return f"product_at(p{a},T{b})"


def holds(goal: SubGoal, state: WorldState) -> bool:
    """True once the goal predicate is established and its achiever has finished."""
    kind, a, b = goal
    if kind == HOIST_HAVE:
        if state.hoist_load[a] != b:
            return False
        return not any(x.action.name == PICKUP and x.action.hoist == a for x in state.pending)
    if kind == HOIST_AT:
        if state.hoist_pos[a] != b:
            return False
        return not any(x.action.name == MOVE and x.action.hoist == a for x in state.pending)
    return state.product_loc[a] == b


def achieves(goal: SubGoal, action) -> bool:
    kind, a, b = goal
    if kind == HOIST_HAVE:
        return action.name == PICKUP and action.hoist == a and action.product == b
    if kind == HOIST_AT:
        return action.name == MOVE and action.hoist == a and action.dst == b
    return action.name == PUTDOWN and action.product == a and action.tank == b
