import pytest
from hypothesis import given, settings, strategies as st
import numpy as np

from hoistplan.benchgen import (
    RECIPES,
    GeneratorParams,
    U,
    dynamic_suite,
    hoist_layout,
    layout,
    make_dynamic_instance,
    make_mixed_instance,
    make_static_instance,
    random_window,
    read_manifest,
    static_suite,
)
from hoistplan.core import InstanceError, TankKind
from hoistplan.core.io import instance_to_dict
from hoistplan.sim import ARRIVAL

LISTED = {
    "A": "O1 25 55, O2 200 550, O3 80 150, O4 70 200, O5 90 160, O6 200 400",
    "B": "O1 30 60, O2 60 90, O3 200 400, O4 60 120, O5 200 400, O6 30 120, O7 35 75",
    "C": "O1 20 50, O2 400 800, O3 70 120, O4 90 160, O5 100 120, O6 70 200",
    "D": "O1 25 55, O2 90 160, O4 80 150, O5 70 200, O6 90 160, O7 150 300",
    "E": "O1 25 55, O2 200 500, O3 80 150, O4 70 200",
}


def _flat(name):
    return ", ".join(f"{o} {lo} {hi}" for o, lo, hi in RECIPES[name])


@pytest.mark.parametrize("name", sorted(LISTED))
def test_recipes_match_listing(name):
    assert _flat(name) == LISTED[name]


def _never_generated(horizon):
    return lambda inst: horizon


def _dyn(seed, nt=8, K=10, horizon=400):
    return make_dynamic_instance(GeneratorParams(nt, 1, K, seed), horizon_fn=_never_generated(horizon))


def test_uniform_is_inclusive():
    rng = np.random.default_rng(0)
    assert {U(rng, 1, 2) for _ in range(200)} == {1, 2}


def test_layout():
    tanks = layout(8)
    assert tanks[0].kind is TankKind.LOADING and tanks[-1].kind is TankKind.UNLOADING
    assert [t.operation for t in tanks[1:-1]] == [f"O{i}" for i in range(1, 7)]
    with pytest.raises(InstanceError):
        layout(2)


def test_two_hoists_share_tanks():
    a, b = hoist_layout(9, 2)
    assert a.range[0] == 0 and b.range[1] == 8
    assert b.range[0] < a.range[1]


def test_recipe_a_figure_scale():
    inst = make_static_instance("A", 6, 8, 1)
    assert len(inst.products) == 6 and len(inst.tanks) == 8 and len(inst.hoists) == 1
    assert all(p.arrival_time == 0 and p.initial_location == 0 for p in inst.products)
    assert inst.lift_time == 5 and inst.transport_base == 4


def test_zero_products_is_valid():
    inst = make_static_instance("A", 0, 8)
    assert inst.products == ()


def test_recipe_that_does_not_fit():
    with pytest.raises(InstanceError):
        make_static_instance("B", 1, 6)
    inst = make_static_instance("B", 1, 6, fit="truncate")
    assert inst.products[0].recipe.ops == ("O1", "O2", "O3", "O4")


def test_static_determinism():
    assert make_mixed_instance(5, 9, 2, 11) == make_mixed_instance(5, 9, 2, 11)


def test_dynamic_determinism():
    a, b = _dyn(5), _dyn(5)
    assert instance_to_dict(a[0]) == instance_to_dict(b[0]) and a[1] == b[1]
    assert instance_to_dict(_dyn(6)[0]) != instance_to_dict(a[0])


def test_k2_product_counts():
    for seed in range(30):
        inst, events = _dyn(seed, K=2)
        n_new = len(events)
        n_init = len(inst.products) - n_new
        assert n_init in (1, 2) and n_new in (1, 2)


def test_arrivals_within_horizon():
    inst, events = _dyn(3, horizon=250)
    for e in events:
        assert e.kind == ARRIVAL and 0 <= e.at <= 250
        assert inst.products[e.target].arrival_time == e.at
    assert [e.at for e in events] == sorted(e.at for e in events)


def test_operation_count_capped_by_tanks():
    inst, _ = _dyn(1, nt=5, K=10)
    assert all(len(p.recipe) <= 3 for p in inst.products)


# lower bounds as half-open ranges, extra as closed ranges
CASES = (((30, 90), (0, 90)), ((90, 150), (0, 60)), ((150, 271), (0, 150)))


def _case(lo, hi):
    return [i for i, ((a, b), (c, d)) in enumerate(CASES) if a <= lo < b and c <= hi - lo <= d]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([8, 10, 12, 14]))
def test_windows_in_exactly_one_case(seed, nt):
    inst, _ = _dyn(seed, nt=nt)
    for p in inst.products:
        for lo, hi in zip(p.recipe.lo, p.recipe.hi):
            assert 30 <= lo <= hi <= 420
            assert len(_case(lo, hi)) == 1


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_window_bounds(seed):
    lo, hi = random_window(np.random.default_rng(seed))
    assert len(_case(lo, hi)) == 1


def test_dynamic_suite_manifest(tmp_path, monkeypatch):
    import hoistplan.benchgen as bg
    monkeypatch.setattr(bg, "_hit_makespan", lambda inst: 300)
    path = dynamic_suite(tmp_path, per_group=10)
    rows = read_manifest(path)
    assert len(rows) == 40
    assert sorted({int(r["NT"]) for r in rows}) == [8, 10, 12, 14]
    assert all(r["NH"] == "1" and (tmp_path / r["scenario"]).exists() for r in rows)


def test_static_suite_manifest(tmp_path):
    rows = read_manifest(static_suite(tmp_path, per_group=2))
    assert len(rows) == 16
    assert {(r["NH"], r["NT"], r["Nrho"]) for r in rows} == {
        (h, t, n) for h in "12" for t in "69" for n in "48"}
