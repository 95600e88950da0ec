"""JSON instance files.

Layout (all times in integer ticks)::

    {
      "format": "hoistplan-instance/1",
      "lift_time": 5, "transport_base": 4, "safety_distance": 1,
      "horizon_max": 1000000000,
      "tanks":   [{"id": 0, "kind": "loading", "operation": null, "available": true}, ...],
      "hoists":  [{"id": 0, "range": [0, 7], "initial_position": 0}, ...],
      "products": [{"id": 0, "arrival_time": 0, "initial_location": {"tank": 0},
                    "initial_step": 0, "initial_elapsed": 0,
                    "recipe": [["O1", 25, 55], ["O2", 200, 550]]}, ...]
    }

``initial_location`` is ``{"tank": i}`` or ``{"hoist": h}``; the last three
product keys are optional.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .model import Hoist, Instance, InstanceError, Product, Recipe, Tank, TankKind

FORMAT = "hoistplan-instance/1"


def instance_to_dict(inst: Instance) -> dict:
    def loc(p: Product):
        if isinstance(p.initial_location, (tuple, list)):
            return {"hoist": int(p.initial_location[1])}
        return {"tank": int(p.initial_location)}

    return {
        "format": FORMAT,
        "lift_time": inst.lift_time,
        "transport_base": inst.transport_base,
        "safety_distance": inst.safety_distance,
        "horizon_max": inst.horizon_max,
        "tanks": [
            {"id": t.id, "kind": t.kind.value, "operation": t.operation, "available": t.available}
            for t in inst.tanks
        ],
        "hoists": [
            {"id": h.id, "range": list(h.range), "initial_position": h.initial_position}
            for h in inst.hoists
        ],
        "products": [
            {
                "id": p.id,
                "arrival_time": p.arrival_time,
                "initial_location": loc(p),
                "initial_step": p.initial_step,
                "initial_elapsed": p.initial_elapsed,
                "recipe": [[o, a, b] for o, a, b in zip(p.recipe.ops, p.recipe.lo, p.recipe.hi)],
            }
            for p in inst.products
        ],
    }


def instance_from_dict(d: dict) -> Instance:
    fmt = d.get("format", FORMAT)
    if fmt != FORMAT:
        raise InstanceError(f"unsupported instance format {fmt!r}")
    try:
        tanks = [
            Tank(int(t["id"]), t.get("operation"), TankKind(t.get("kind", "processing")),
                 bool(t.get("available", True)))
            for t in d["tanks"]
        ]
        hoists = [
            Hoist(int(h["id"]), (int(h["range"][0]), int(h["range"][1])), int(h["initial_position"]))
            for h in d["hoists"]
        ]
        products = []
        for p in d.get("products", []):
            where = p.get("initial_location", {"tank": 0})
            loc = ("hoist", int(where["hoist"])) if "hoist" in where else int(where["tank"])
            products.append(Product(
                int(p["id"]),
                Recipe.from_triples([(str(o), int(a), int(b)) for o, a, b in p["recipe"]]),
                int(p.get("arrival_time", 0)),
                loc,
                int(p.get("initial_step", 0)),
                int(p.get("initial_elapsed", 0)),
            ))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"malformed instance document: {exc}") from exc
    return Instance(
        tuple(hoists), tuple(tanks), tuple(products),
        lift_time=int(d.get("lift_time", 5)),
        transport_base=int(d.get("transport_base", 4)),
        safety_distance=int(d.get("safety_distance", 1)),
        horizon_max=int(d.get("horizon_max", 10**9)),
    )


def dump_instance(inst: Instance, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def load_instance(path: Union[str, Path]) -> Instance:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(d)
