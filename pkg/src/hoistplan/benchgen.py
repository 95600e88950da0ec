"""Benchmark instance families.

Layout for ``n_tanks`` tanks: ``T0`` is the loading tank, ``T{n-1}`` the
unloading tank and ``T_i`` performs operation ``O_i`` in between.  With two
hoists the rail is split into overlapping halves so products can be handed
over through shared processing tanks.

All sampling goes through ``numpy.random.default_rng(seed)`` (PCG64) with
inclusive integer bounds, so a seed fixes an instance on every platform.
Dynamic instances draw, in order: the initial product count, the arriving
product count, then per product its operation count, tank sequence (without
replacement) and one window case plus bounds per operation, and finally the
arrival instants.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core.io import instance_to_dict
from .core.model import Hoist, Instance, InstanceError, Product, Recipe, Tank, TankKind

RECIPES: dict[str, tuple[tuple[str, int, int], ...]] = {
    "A": (("O1", 25, 55), ("O2", 200, 550), ("O3", 80, 150), ("O4", 70, 200), ("O5", 90, 160),
          ("O6", 200, 400)),
    "B": (("O1", 30, 60), ("O2", 60, 90), ("O3", 200, 400), ("O4", 60, 120), ("O5", 200, 400),
          ("O6", 30, 120), ("O7", 35, 75)),
    "C": (("O1", 20, 50), ("O2", 400, 800), ("O3", 70, 120), ("O4", 90, 160), ("O5", 100, 120),
          ("O6", 70, 200)),
    "D": (("O1", 25, 55), ("O2", 90, 160), ("O4", 80, 150), ("O5", 70, 200), ("O6", 90, 160),
          ("O7", 150, 300)),
    "E": (("O1", 25, 55), ("O2", 200, 500), ("O3", 80, 150), ("O4", 70, 200)),
}

# (lo range, extra range) for the three window cases; a lower bound shared by
# two cases belongs to the later one so every window has exactly one case
WINDOW_CASES = (((30, 89), (0, 90)), ((90, 149), (0, 60)), ((150, 270), (0, 150)))


def U(rng: np.random.Generator, a: int, b: int) -> int:
    """Uniform integer on ``[a, b]``."""
    return int(rng.integers(a, b, endpoint=True))


def layout(n_tanks: int) -> tuple[Tank, ...]:
    if n_tanks < 3:
        raise InstanceError("need at least a loading, a processing and an unloading tank")
    tanks = [Tank(0, None, TankKind.LOADING)]
    tanks += [Tank(i, f"O{i}") for i in range(1, n_tanks - 1)]
    tanks.append(Tank(n_tanks - 1, None, TankKind.UNLOADING))
    return tuple(tanks)


def hoist_layout(n_tanks: int, n_hoists: int) -> tuple[Hoist, ...]:
    last = n_tanks - 1
    if n_hoists == 1:
        return (Hoist(0, (0, last), 0),)
    if n_hoists == 2:
        half = n_tanks / 2
        return (Hoist(0, (0, min(last, math.ceil(half) + 1)), 0),
                Hoist(1, (max(0, math.floor(half) - 1), last), last))
    # n hoists: equal sectors that overlap by two tanks
    width = n_tanks / n_hoists
    out = []
    for h in range(n_hoists):
        lo = max(0, math.floor(h * width) - 1)
        hi = min(last, math.ceil((h + 1) * width))
        pos = 0 if h == 0 else (last if h == n_hoists - 1 else (lo + hi) // 2)
        out.append(Hoist(h, (lo, hi), pos))
    return tuple(out)


def fitted_recipe(name: str, n_tanks: int, fit: str = "error") -> Recipe:
    ops = RECIPES[name]
    present = {f"O{i}" for i in range(1, n_tanks - 1)}
    missing = [o for o, _, _ in ops if o not in present]
    if missing:
        if fit != "truncate":
            raise InstanceError(f"recipe {name} needs {missing} which a {n_tanks}-tank line lacks")
        ops = tuple(x for x in ops if x[0] in present)
    return Recipe.from_triples(ops)


def make_static_instance(recipe_name: str, n_products: int, n_tanks: int, n_hoists: int = 1,
                         seed: int = 0, safety_distance: int = 1, fit: str = "error") -> Instance:
    """Every product follows one named recipe and waits at ``T0`` at time 0.

    ``fit="truncate"`` drops operations the layout cannot host instead of
    raising.  ``seed`` is accepted for interface symmetry; the family has no
    random part.
    """
    recipe = fitted_recipe(recipe_name, n_tanks, fit)
    products = tuple(Product(i, recipe) for i in range(n_products))
    return Instance(hoist_layout(n_tanks, n_hoists), layout(n_tanks), products,
                    lift_time=5, transport_base=4, safety_distance=safety_distance)


def make_mixed_instance(n_products: int, n_tanks: int, n_hoists: int, seed: int,
                        names: Sequence[str] = ("B", "C", "D", "E")) -> Instance:
    """Products draw their recipe uniformly from ``names`` (truncated to the layout)."""
    rng = np.random.default_rng(seed)
    products = []
    for i in range(n_products):
        name = names[U(rng, 0, len(names) - 1)]
        products.append(Product(i, fitted_recipe(name, n_tanks, "truncate")))
    return Instance(hoist_layout(n_tanks, n_hoists), layout(n_tanks), tuple(products))


def random_window(rng: np.random.Generator) -> tuple[int, int]:
    (a, b), (c, d) = WINDOW_CASES[U(rng, 0, 2)]
    lo = U(rng, a, b)
    return lo, lo + U(rng, c, d)


@dataclass(frozen=True)
class GeneratorParams:
    n_tanks: int = 8
    n_hoists: int = 1
    K: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_tanks < 3:
            raise ValueError("n_tanks must be >= 3")
        if self.n_hoists < 1 or self.K < 1:
            raise ValueError("n_hoists and K must be >= 1")


def _random_product(rng, pid: int, n_tanks: int, K: int, arrival: int = 0) -> Product:
    n_ops = min(U(rng, max(1, K // 2), K), n_tanks - 2)
    chosen = rng.choice(np.arange(1, n_tanks - 1), size=n_ops, replace=False)
    triples = []
    for t in chosen:
        lo, hi = random_window(rng)
        triples.append((f"O{int(t)}", lo, hi))
    return Product(pid, Recipe.from_triples(triples), arrival)


def make_dynamic_instance(params: GeneratorParams, horizon_fn=None):
    """``(instance, events)`` with initial and arriving products.

    ``horizon_fn(instance) -> int`` supplies the makespan of the initial
    products, which bounds the arrival instants; by default it is computed
    with the hierarchical planner.
    """
    from .sim import ScenarioEvent

    rng = np.random.default_rng(params.seed)
    lo_k = max(1, params.K // 2)
    n_init = U(rng, lo_k, params.K)
    n_new = U(rng, lo_k, params.K)
    products = [_random_product(rng, i, params.n_tanks, params.K) for i in range(n_init + n_new)]
    hoists = hoist_layout(params.n_tanks, params.n_hoists)
    tanks = layout(params.n_tanks)
    base = Instance(hoists, tanks, tuple(products[:n_init]))
    if horizon_fn is None:
        horizon_fn = _hit_makespan
    t0 = max(0, int(horizon_fn(base)))
    arrivals = [U(rng, 0, t0) for _ in range(n_new)]
    for k, a in enumerate(arrivals):
        p = products[n_init + k]
        products[n_init + k] = Product(p.id, p.recipe, a)
    inst = Instance(hoists, tanks, tuple(products))
    events = [ScenarioEvent(a, "product_arrival", n_init + k) for k, a in enumerate(arrivals)]
    events.sort(key=lambda e: (e.at, e.target))
    return inst, events


def _hit_makespan(inst: Instance) -> int:
    from .core.validate import validate_plan
    from .hierarchy import run_hit

    res = run_hit(inst)
    if res.success:
        return validate_plan(inst, res.plan).makespan
    # fall back to a crude serial bound so generation still succeeds
    return sum(sum(p.recipe.hi) + 20 * len(p.recipe) for p in inst.products)


# -- suites ----------------------------------------------------------------------------

MANIFEST_FIELDS = ("id", "kind", "instance", "scenario", "seed", "NT", "NH", "Nrho")


def dynamic_suite(out_dir, tanks: Sequence[int] = (8, 10, 12, 14), per_group: int = 10, K: int = 10,
                  base_seed: int = 0) -> Path:
    """Write instance and scenario files plus ``manifest.csv``; returns the manifest path."""
    from .sim import dump_scenario

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for nt in tanks:
        for k in range(per_group):
            seed = base_seed + 1000 * nt + k
            inst, events = make_dynamic_instance(GeneratorParams(nt, 1, K, seed))
            stem = f"dyn_nt{nt}_{k:02d}"
            ipath = out / f"{stem}.json"
            spath = out / f"{stem}.scenario.json"
            ipath.write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")
            dump_scenario(events, spath)
            rows.append({"id": stem, "kind": "dynamic", "instance": ipath.name, "scenario": spath.name,
                         "seed": seed, "NT": nt, "NH": 1, "Nrho": len(inst.products)})
    return write_manifest(rows, out / "manifest.csv")


def static_suite(out_dir, groups: Sequence[tuple[int, int, int]] = ((1, 6, 4), (1, 6, 8), (1, 9, 4), (1, 9, 8),
                                                                     (2, 6, 4), (2, 6, 8), (2, 9, 4), (2, 9, 8)),
                 per_group: int = 20, base_seed: int = 0) -> Path:
    """Mixed-recipe static instances grouped by ``(NH, NT, Nrho)``."""
    from .core.io import dump_instance

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for nh, nt, n in groups:
        for k in range(per_group):
            seed = base_seed + 100_000 * nh + 1000 * nt + 10 * n + k
            inst = make_mixed_instance(n, nt, nh, seed)
            stem = f"static_h{nh}_t{nt}_n{n}_{k:02d}"
            dump_instance(inst, out / f"{stem}.json")
            rows.append({"id": stem, "kind": "static", "instance": f"{stem}.json", "scenario": "",
                         "seed": seed, "NT": nt, "NH": nh, "Nrho": n})
    return write_manifest(rows, out / "manifest.csv")


def write_manifest(rows, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=MANIFEST_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow(r)
    return path


def read_manifest(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
