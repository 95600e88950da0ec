"""Static problem description: hoists, tanks, recipes, products and actions."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Union


class InstanceError(ValueError):
    """Raised when an instance violates its structural invariants."""


class TankKind(str, Enum):
    LOADING = "loading"
    PROCESSING = "processing"
    UNLOADING = "unloading"


@dataclass(frozen=True)
class Recipe:
    """Operation sequence with inclusive per-step processing windows."""

    ops: tuple[str, ...]
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "lo", tuple(int(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(int(v) for v in self.hi))
        if not (len(self.ops) == len(self.lo) == len(self.hi)):
            raise InstanceError("recipe ops/lo/hi lengths differ")
        for a, b in zip(self.lo, self.hi):
            if not 0 <= a <= b:
                raise InstanceError(f"bad processing window [{a}, {b}]")

    def __len__(self) -> int:
        return len(self.ops)

    @classmethod
    def from_triples(cls, triples: Sequence[tuple[str, int, int]]) -> "Recipe":
        ops, lo, hi = zip(*triples) if triples else ((), (), ())
        return cls(tuple(ops), tuple(lo), tuple(hi))


@dataclass(frozen=True)
class Hoist:
    id: int
    range: tuple[int, int]
    initial_position: int

    def covers(self, tank: int) -> bool:
        return self.range[0] <= tank <= self.range[1]


@dataclass(frozen=True)
class Tank:
    id: int
    operation: Optional[str]
    kind: TankKind = TankKind.PROCESSING
    available: bool = True

    @property
    def capacity(self) -> Optional[int]:
        # None = unbounded
        return 1 if self.kind is TankKind.PROCESSING else None


@dataclass(frozen=True)
class Product:
    """A product and where it starts.

    ``initial_location`` is a tank index, or ``("hoist", h)`` for a product
    that starts in a hoist's grip.  ``initial_step``/``initial_elapsed`` allow
    snapshots taken mid-line.
    """

    id: int
    recipe: Recipe
    arrival_time: int = 0
    initial_location: Union[int, tuple[str, int]] = 0
    initial_step: int = 0
    initial_elapsed: int = 0

    def __post_init__(self):
        if self.arrival_time < 0:
            raise InstanceError("arrival_time must be >= 0")


@dataclass(frozen=True)
class Instance:
    hoists: tuple[Hoist, ...]
    tanks: tuple[Tank, ...]
    products: tuple[Product, ...]
    lift_time: int = 5
    transport_base: int = 4
    safety_distance: int = 1
    horizon_max: int = 10**9
    _op_tanks: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "hoists", tuple(self.hoists))
        object.__setattr__(self, "tanks", tuple(self.tanks))
        object.__setattr__(self, "products", tuple(self.products))
        n = len(self.tanks)
        if self.lift_time <= 0:
            raise InstanceError("lift_time must be > 0")
        if self.transport_base < 0 or self.safety_distance < 0:
            raise InstanceError("transport_base and safety_distance must be >= 0")
        for i, t in enumerate(self.tanks):
            if t.id != i:
                raise InstanceError("tank ids must equal their index")
        for i, h in enumerate(self.hoists):
            lo, hi = h.range
            if h.id != i:
                raise InstanceError("hoist ids must equal their index")
            if not (0 <= lo <= hi < n):
                raise InstanceError(f"hoist {i} range {h.range} outside tanks")
            if not lo <= h.initial_position <= hi:
                raise InstanceError(f"hoist {i} starts outside its range")
        op_tanks: dict[str, list[int]] = {}
        for t in self.tanks:
            if t.kind is TankKind.PROCESSING:
                op_tanks.setdefault(t.operation, []).append(t.id)
        object.__setattr__(self, "_op_tanks", {k: tuple(v) for k, v in op_tanks.items()})
        for i, p in enumerate(self.products):
            if p.id != i:
                raise InstanceError("product ids must equal their index")
            for op in p.recipe.ops:
                if op not in op_tanks:
                    raise InstanceError(f"product {i}: operation {op!r} has no tank")
            if not 0 <= p.initial_step <= len(p.recipe):
                raise InstanceError(f"product {i}: initial_step out of range")

    @property
    def operations(self) -> frozenset:
        return frozenset(t.operation for t in self.tanks if t.operation is not None)

    def tanks_for(self, op: str) -> tuple[int, ...]:
        return self._op_tanks.get(op, ())

    @property
    def unloading_tanks(self) -> tuple[int, ...]:
        return tuple(t.id for t in self.tanks if t.kind is TankKind.UNLOADING)

    @property
    def loading_tanks(self) -> tuple[int, ...]:
        return tuple(t.id for t in self.tanks if t.kind is TankKind.LOADING)

    def is_processing(self, tank: int) -> bool:
        return self.tanks[tank].kind is TankKind.PROCESSING

    def targets(self, product: int, step: int) -> tuple[int, ...]:
        """Tanks that may receive ``product`` when its next recipe index is ``step``."""
        recipe = self.products[product].recipe
        if step >= len(recipe):
            return self.unloading_tanks
        return self.tanks_for(recipe.ops[step])

    def with_products(self, products: Sequence[Product]) -> "Instance":
        return Instance(self.hoists, self.tanks, tuple(products), self.lift_time,
                        self.transport_base, self.safety_distance, self.horizon_max)

    def with_tank_available(self, tank: int, available: bool) -> "Instance":
        tanks = list(self.tanks)
        t = tanks[tank]
        tanks[tank] = Tank(t.id, t.operation, t.kind, available)
        return Instance(self.hoists, tuple(tanks), self.products, self.lift_time,
                        self.transport_base, self.safety_distance, self.horizon_max)


def transport_time(inst: Instance, i: int, j: int) -> int:
    """Travel ticks between tank ``i`` and tank ``j`` (0 when they coincide)."""
    n = len(inst.tanks)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"tank index out of range: {i}, {j}")
    if i == j:
        return 0
    return abs(j - i) + inst.transport_base


# -- actions -------------------------------------------------------------------

MOVE = "Move-Hoist"
PICKUP = "PickUp-Hoist"
PUTDOWN = "PutDown-Hoist"
ACTION_NAMES = (MOVE, PICKUP, PUTDOWN)


class Move(NamedTuple):
    hoist: int
    src: int
    dst: int
    name: str = MOVE


class PickUp(NamedTuple):
    hoist: int
    tank: int
    product: int
    name: str = PICKUP


class PutDown(NamedTuple):
    hoist: int
    tank: int
    product: int
    name: str = PUTDOWN


Action = Union[Move, PickUp, PutDown]
_KIND_ORDER = {MOVE: 0, PICKUP: 1, PUTDOWN: 2}


class TimedAction(NamedTuple):
    """An action triple: what happens, when it starts and how long it takes."""

    action: Action
    start: int
    duration: int

    @property
    def end(self) -> int:
        return self.start + self.duration

    @property
    def hoist(self) -> int:
        return self.action.hoist

    def sort_key(self):
        a = self.action
        return (self.start, a.hoist, _KIND_ORDER[a.name], tuple(a))

    def shifted(self, delta: int) -> "TimedAction":
        return TimedAction(self.action, self.start + delta, self.duration)


@dataclass(frozen=True)
class Plan:
    actions: tuple[TimedAction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(sorted(self.actions, key=TimedAction.sort_key)))

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def __add__(self, other: "Plan") -> "Plan":
        return Plan(self.actions + tuple(other.actions))

    @property
    def makespan(self) -> int:
        return max((a.end for a in self.actions), default=0)

    def shifted(self, delta: int) -> "Plan":
        return Plan(tuple(a.shifted(delta) for a in self.actions))

    def for_hoist(self, hoist: int) -> tuple[TimedAction, ...]:
        return tuple(a for a in self.actions if a.action.hoist == hoist)


# -- naming shared by the text formats ---------------------------------------------

def hoist_name(i: int) -> str:
    return f"hoist{i}"


def tank_name(i: int) -> str:
    return f"tank{i}"


def product_name(i: int) -> str:
    return f"p{i}"


def parse_name(name: str, prefix: str) -> int:
    if not name.startswith(prefix) or not name[len(prefix):].isdigit():
        raise ValueError(f"expected {prefix}<n>, got {name!r}")
    return int(name[len(prefix):])
