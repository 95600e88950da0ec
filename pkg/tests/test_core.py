import functools

import pytest
from hypothesis import given, settings, strategies as st

from conftest import line, product
from hoistplan.benchgen import make_mixed_instance, make_static_instance
from hoistplan.core import (
    ActionError,
    Hoist,
    Move,
    PickUp,
    Plan,
    PutDown,
    TimedAction,
    apply_action,
    held,
    initial_state,
    replay,
    state_violations,
    transport_time,
    validate_plan,
    validate_processing,
)
from hoistplan.core.io import instance_from_dict, instance_to_dict
from hoistplan.hierarchy import run_hit

RECIPE_A1 = product(0, ("O1", 25, 55)).recipe


# -- transport time ---------------------------------------------------------------

def _seven():
    return line(["O1", "O2", "O3", "O4", "O5", "O6"])


@pytest.mark.parametrize("i,j,want", [(0, 1, 5), (2, 7, 9), (3, 3, 0), (7, 2, 9)])
def test_transport_time(i, j, want):
    assert transport_time(_seven(), i, j) == want


def test_transport_time_out_of_range():
    with pytest.raises(IndexError):
        transport_time(_seven(), 0, 8)


# -- transitions --------------------------------------------------------------------

def _soaking(elapsed=30):
    """p1 soaking in T5 for ``elapsed`` ticks, h0 parked above it."""
    ops = ["O1", "O2", "O3", "O4", "O5"]
    prods = [product(0, ("O1", 25, 55)),
             product(1, ("O5", 25, 55), initial_location=5, initial_elapsed=elapsed)]
    return line(ops, hoists=[Hoist(0, (0, 6), 5)], products=prods)


def test_pickup_gives_hoist_have():
    inst = _soaking()
    s = apply_action(initial_state(inst), TimedAction(PickUp(0, 5, 1), 0, 5), inst)
    assert s.hoist_load[0] == 1
    assert s.product_loc[1] == held(0)
    assert s.tank_occupant[5] is None
    assert s.product_step[1] == 1
    assert s.clock == 5


def test_pickup_outside_window_rejected():
    inst = _soaking(elapsed=10)
    with pytest.raises(ActionError) as exc:
        apply_action(initial_state(inst), TimedAction(PickUp(0, 5, 1), 0, 5), inst)
    assert exc.value.reason == "window"


def test_zero_length_move_rejected():
    inst = _seven()
    s = initial_state(inst)
    s = apply_action(s, TimedAction(Move(0, 0, 2), 0, 6), inst)
    with pytest.raises(ActionError) as exc:
        apply_action(s, TimedAction(Move(0, 2, 2), 6, 1), inst)
    assert exc.value.reason == "duration"


def test_putdown_into_occupied_tank_is_capacity_error():
    prods = [product(0, ("O3", 5, 50), initial_location=3),
             product(1, ("O3", 5, 50), initial_location=("hoist", 0))]
    inst = line(["O1", "O2", "O3"], hoists=[Hoist(0, (0, 4), 3)], products=prods)
    with pytest.raises(ActionError) as exc:
        apply_action(initial_state(inst), TimedAction(PutDown(0, 3, 1), 0, 5), inst)
    assert exc.value.reason == "capacity"


def test_move_faster_than_transport_rejected():
    inst = _seven()
    with pytest.raises(ActionError) as exc:
        apply_action(initial_state(inst), TimedAction(Move(0, 0, 3), 0, 6), inst)
    assert exc.value.reason == "duration"


# -- validation ---------------------------------------------------------------------

def _one_step_plan(soak):
    acts = [
        TimedAction(PickUp(0, 0, 0), 0, 5),
        TimedAction(Move(0, 0, 1), 5, 5),
        TimedAction(PutDown(0, 1, 0), 10, 5),
        TimedAction(PickUp(0, 1, 0), 15 + soak, 5),
        TimedAction(Move(0, 1, 2), 20 + soak, 5),
        TimedAction(PutDown(0, 2, 0), 25 + soak, 5),
    ]
    return Plan(tuple(acts))


def test_validate_accepts_window_edges(one_step):
    for soak in (25, 40, 55):
        rep = validate_plan(one_step, _one_step_plan(soak))
        assert rep.ok, rep.summary()
        assert rep.makespan == 30 + soak


def test_validate_window_exceeded_by_one_tick(one_step):
    rep = validate_plan(one_step, _one_step_plan(56))
    assert not rep.ok
    assert rep.reason == "window_exceeded"


def test_validate_window_short(one_step):
    rep = validate_plan(one_step, _one_step_plan(24))
    assert rep.reason == "window_short"


def test_validate_empty():
    rep = validate_plan(line(["O1"]), Plan())
    assert rep.ok and rep.makespan == 0


def test_validate_incomplete(one_step):
    rep = validate_plan(one_step, Plan(_one_step_plan(30).actions[:3]))
    assert rep.reason == "incomplete"
    assert validate_plan(one_step, Plan(_one_step_plan(30).actions[:3]), require_complete=False).ok


def test_validate_safety():
    inst = line(["O1", "O2", "O3"], hoists=[Hoist(0, (0, 3), 0), Hoist(1, (1, 4), 3)])
    plan = Plan((TimedAction(Move(0, 0, 3), 0, 7),))
    assert validate_plan(inst, plan).reason == "safety"
    plan = Plan((TimedAction(Move(0, 0, 3), 5, 7), TimedAction(Move(1, 3, 4), 0, 5)))
    assert validate_plan(inst, plan, require_complete=False).ok


def test_validate_hit_output(three_products):
    res = run_hit(three_products)
    assert res.success
    assert validate_plan(three_products, res.plan).ok


@pytest.mark.parametrize("iota,want", [(30, True), (25, True), (55, True), (60, False), (24, False)])
def test_validate_processing(iota, want):
    assert validate_processing({0: iota}, [RECIPE_A1], {0: 0}) is want


def test_validate_processing_step_out_of_bounds():
    with pytest.raises(IndexError):
        validate_processing({0: 30}, [RECIPE_A1], {0: 1})


def test_instance_roundtrip():
    inst = make_mixed_instance(5, 9, 2, seed=3)
    assert instance_from_dict(instance_to_dict(inst)) == inst


# -- properties -----------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _solved(seed: int):
    if seed % 2:
        inst = make_mixed_instance(3, 6 + seed % 4, 1 + seed % 2, seed)
    else:
        inst = make_static_instance("E", 3, 6, 1 + (seed // 2) % 2)
    res = run_hit(inst)
    assert res.success
    return inst, res.plan


plans = st.tuples(st.integers(0, 7), st.floats(0, 1))


@settings(max_examples=40, deadline=None)
@given(plans)
def test_replay_matches_validator(arg):
    seed, frac = arg
    inst, plan = _solved(seed)
    k = int(frac * len(plan))
    prefix = Plan(plan.actions[:k])
    rep = validate_plan(inst, prefix, require_complete=False)
    assert rep.ok
    s = replay(initial_state(inst), prefix, inst)
    assert tuple(rep.hoist_pos[h] for h in range(len(inst.hoists))) == s.hoist_pos
    for p, loc in enumerate(s.product_loc):
        want = ("hoist", -1 - loc) if loc < 0 else ("tank", loc)
        assert rep.product_loc[p] == want
        assert rep.product_step[p] == s.product_step[p]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 7))
def test_invariants_hold_every_tick(seed):
    inst, plan = _solved(seed)
    s = initial_state(inst)
    acts = list(plan.actions)
    i = 0
    for t in range(0, plan.makespan + 1):
        while i < len(acts) and acts[i].start == t:
            s = replay(s, [acts[i]], inst, until=t)
            i += 1
        s = replay(s, [], inst, until=t)
        assert state_violations(s, inst) == []


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 7))
def test_window_soundness(seed):
    inst, plan = _solved(seed)
    seen = []

    def watch(s, ta):
        a = ta.action
        if a.name == "PickUp-Hoist" and inst.is_processing(a.tank):
            p = a.product
            seen.append(validate_processing({p: s.clock - s.since[p]},
                                            [q.recipe for q in inst.products], {p: s.product_step[p]}))

    replay(initial_state(inst), plan, inst, on_start=watch)
    assert seen and all(seen)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 7), st.floats(0, 1), st.integers(-12, 12))
def test_perturbed_plan_routes_agree(seed, frac, delta):
    """A plan the transition code rejects is never accepted by the validator."""
    inst, plan = _solved(seed)
    acts = list(plan.actions)
    k = min(int(frac * len(acts)), len(acts) - 1)
    acts[k] = acts[k].shifted(delta)
    if acts[k].start < 0:
        return
    bad = Plan(tuple(acts))
    try:
        s = replay(initial_state(inst), bad, inst)
        raised = False
    except ActionError:
        raised = True
    rep = validate_plan(inst, bad)
    if raised:
        assert not rep.ok
    elif rep.ok:
        assert state_violations(s, inst) == []
