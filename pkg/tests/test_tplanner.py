import dataclasses

from hypothesis import given, settings, strategies as st

from conftest import line, product
from hoistplan.benchgen import make_mixed_instance
from hoistplan.core import Hoist, Move, PickUp, PutDown, initial_state, replay, start_action, timed, validate_plan
from hoistplan.goals import SubGoal, holds
from hoistplan.tplanner import (
    SOLVED,
    UNSOLVABLE,
    EmbeddedPlanner,
    PlannerConfig,
    SubProblem,
    dead_end,
    ground_actions,
    heuristic,
    plan,
    spans_compatible,
)

OPS = ["O1", "O2", "O3", "O4", "O5"]


def _names(acts):
    return {a.action for a in acts}


def test_ground_pickup_in_window():
    inst = line(OPS, hoists=[Hoist(0, (0, 6), 5)],
                products=[product(0, ("O1", 5, 9)), product(1, ("O5", 25, 55), initial_location=5, initial_elapsed=30)])
    assert PickUp(0, 5, 1) in _names(ground_actions(initial_state(inst), inst))


def test_ground_no_pickup_before_window():
    inst = line(OPS, hoists=[Hoist(0, (0, 6), 5)],
                products=[product(0, ("O5", 25, 55), initial_location=5, initial_elapsed=3)])
    assert not any(a.action.name == "PickUp-Hoist" for a in ground_actions(initial_state(inst), inst))


def test_ground_no_putdown_on_wrong_operation():
    inst = line(OPS, hoists=[Hoist(0, (0, 6), 2)],
                products=[product(0, ("O5", 25, 55), initial_location=("hoist", 0))])
    acts = ground_actions(initial_state(inst), inst)
    assert not any(a.action.name == "PutDown-Hoist" for a in acts)


def test_ground_putdown_on_matching_operation():
    inst = line(OPS, hoists=[Hoist(0, (0, 6), 5)],
                products=[product(0, ("O5", 25, 55), initial_location=("hoist", 0))])
    assert PutDown(0, 5, 0) in _names(ground_actions(initial_state(inst), inst))


def test_ground_moves_keep_safety_distance():
    inst = line(OPS, hoists=[Hoist(0, (0, 4), 1), Hoist(1, (2, 6), 3)], safety_distance=2)
    s = initial_state(inst)
    moves = [a.action for a in ground_actions(s, inst) if a.action.name == "Move-Hoist"]
    assert Move(0, 1, 2) not in moves and Move(1, 3, 2) not in moves
    assert Move(0, 1, 0) in moves and Move(1, 3, 6) in moves
    for m in moves:
        other = 1 - m.hoist
        sweep = (min(m.src, m.dst), max(m.src, m.dst))
        pos = s.hoist_pos[other]
        assert spans_compatible(inst, m.hoist, sweep, other, (pos, pos))


def test_plan_hoist_have_two_tanks_away():
    inst = line(OPS, products=[product(0, ("O1", 5, 9)), product(1, ("O3", 5, 9))])
    s = initial_state(inst)
    s = dataclasses.replace(s, product_loc=(0, 2))
    res = plan(s, [SubGoal.hoist_have(0, 1)], inst)
    assert res.status == SOLVED
    assert [(a.action, a.start, a.duration) for a in res.plan] == [(Move(0, 0, 2), 0, 6), (PickUp(0, 2, 1), 6, 5)]
    assert res.plan.makespan == 11


def test_plan_satisfied_goals_is_empty(one_step):
    res = plan(initial_state(one_step), [SubGoal.hoist_at(0, 0)], one_step)
    assert res.solved and len(res.plan) == 0


def test_plan_unsolvable_without_retreat():
    inst = line(["O1"], hoists=[Hoist(0, (0, 2), 0), Hoist(1, (1, 2), 2)])
    res = plan(initial_state(inst), [SubGoal.hoist_at(0, 2)], inst)
    assert res.status == UNSOLVABLE


def test_plan_rebased_at_clock(one_step):
    s = replay(initial_state(one_step), [], one_step, until=40)
    res = plan(s, [SubGoal.hoist_have(0, 0)], one_step)
    assert res.plan.actions[0].start == 40


def test_heuristic_examples():
    inst = line(OPS, products=[product(0, ("O3", 5, 9)), product(1, ("O2", 5, 9), ("O4", 5, 9), initial_location=2,
                                                                 initial_elapsed=7)])
    s = initial_state(inst)
    assert heuristic(s, [SubGoal.hoist_at(0, 0)], inst) == 0
    s3 = dataclasses.replace(s, product_loc=(3, 2))
    assert heuristic(s3, [SubGoal.hoist_have(0, 0)], inst) == 12
    assert heuristic(s, [SubGoal.product_at(1, 4)], inst) == 22


def test_embedded_planner_interface(one_step):
    res = EmbeddedPlanner()(SubProblem(initial_state(one_step), (SubGoal.product_at(0, 1),)), one_step)
    assert res.solved and holds(SubGoal.product_at(0, 1), replay(initial_state(one_step), res.plan, one_step))


def test_overall_violation_is_pruned(one_step):
    s = initial_state(one_step)
    s = start_action(s, timed(Move(0, 0, 2), 0, s, one_step), one_step)
    assert not dead_end(s, one_step)
    broken = dataclasses.replace(s, hoist_pos=(1,))
    assert dead_end(broken, one_step)


def test_exhaustive_mode_agrees(three_products):
    s = initial_state(three_products)
    goals = [SubGoal.product_at(0, 1)]
    a = plan(s, goals, three_products)
    b = plan(s, goals, three_products, PlannerConfig(exhaustive=True))
    assert a.solved and b.solved
    assert b.plan.makespan <= a.plan.makespan


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([6, 8, 9]), st.integers(1, 2), st.integers(0, 9999), st.data())
def test_solved_plans_replay_cleanly(nt, nh, seed, data):
    inst = make_mixed_instance(2, nt, nh, seed)
    s = initial_state(inst)
    p = data.draw(st.integers(0, 1))
    first = inst.products[p].recipe.ops[0]
    t = inst.tanks_for(first)[0]
    goal = data.draw(st.sampled_from([SubGoal.product_at(p, t), SubGoal.hoist_have(0, p)]))
    if goal.predicate == "hoist_have" and not inst.hoists[0].covers(0):
        return
    res = plan(s, [goal], inst, PlannerConfig(cutoff=20))
    assert res.solved
    end = replay(s, res.plan, inst)
    assert holds(goal, end)
    assert validate_plan(inst, res.plan, require_complete=False).ok
    assert heuristic(s, [goal], inst) <= res.plan.makespan
