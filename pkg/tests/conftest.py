import sys
from pathlib import Path

import pytest

from hoistplan.core.model import Hoist, Instance, Product, Recipe, Tank, TankKind

sys.path.insert(0, str(Path(__file__).parent))

GOLDEN = Path(__file__).parent / "golden"


def line(ops, hoists=None, products=(), **kw):
    """Loading tank, one tank per op in ``ops``, unloading tank."""
    tanks = [Tank(0, None, TankKind.LOADING)]
    tanks += [Tank(i + 1, op) for i, op in enumerate(ops)]
    tanks.append(Tank(len(tanks), None, TankKind.UNLOADING))
    last = len(tanks) - 1
    if hoists is None:
        hoists = [Hoist(0, (0, last), 0)]
    return Instance(tuple(hoists), tuple(tanks), tuple(products), **kw)


def product(pid, *triples, **kw):
    return Product(pid, Recipe.from_triples(triples), **kw)


@pytest.fixture
def one_step():
    """One hoist, three tanks, one product with a single [25, 55] soak."""
    return line(["O1"], products=[product(0, ("O1", 25, 55))])


@pytest.fixture
def three_products():
    return line(["O1", "O2"], products=[product(i, ("O1", 25, 55), ("O2", 30, 80)) for i in range(3)])


def full_lead_round(inst, alpha=2):
    """First round after the first whose lead over the previous recompute time is alpha.

    Found on a run where every planner call takes one tick; the rounds before
    it are identical under any runtime model that agrees up to that round.
    """
    from hoistplan.hierarchy import HitSession

    s = HitSession(inst, runtime_model=lambda k, seconds: 1)
    while s.step() is not None:
        pass
    for k in range(1, len(s.rounds)):
        if s.rounds[k].gamma0 - s.rounds[k - 1].eps_hat == alpha:
            return k
    raise AssertionError("no round with a full lead")
