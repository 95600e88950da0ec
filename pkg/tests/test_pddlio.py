import sys

import pytest
from hypothesis import given, settings, strategies as st

from conftest import GOLDEN, line, product
from hoistplan.core import Hoist, Move, PickUp, Plan, PutDown, TimedAction, initial_state, validate_plan
from hoistplan.goals import SubGoal
from hoistplan.pddlio import (
    ExternalPlanner,
    PlanParseError,
    export_domain,
    export_problem,
    grounded_facts,
    parse_plan,
    read_problem,
    render_plan,
    schema_conditions,
    schema_effects,
)
from hoistplan.tplanner import SOLVED, UNSOLVABLE, EmbeddedPlanner, SubProblem


# -- plan lines -------------------------------------------------------------------

def test_parse_listing_line():
    plan = parse_plan("2667.0 (Move-Hoist hoist11 tank104 tank105) 5.00")
    (a,) = plan.actions
    assert a.action == Move(11, 104, 105)
    assert (a.start, a.duration) == (2667, 5)


def test_parse_empty():
    assert len(parse_plan("")) == 0
    assert len(parse_plan("\n  ; only a comment\n")) == 0


def test_parse_sorts_by_start():
    text = "9.0 (PickUp-Hoist hoist0 tank1 p0) 5.00\n0.0 (Move-Hoist hoist0 tank0 tank1) 5.00\n"
    assert [a.start for a in parse_plan(text)] == [0, 9]


def test_unknown_action_rejected_with_line_number():
    with pytest.raises(PlanParseError) as exc:
        parse_plan("0.0 (Move-Hoist hoist0 tank0 tank1) 5.00\n3.0 (Teleport hoist0 tank1) 1.00")
    assert exc.value.lineno == 2


def test_malformed_line_rejected():
    with pytest.raises(PlanParseError) as exc:
        parse_plan("zero (Move-Hoist hoist0 tank0 tank1) 5")
    assert exc.value.lineno == 1


def test_bad_object_name_rejected():
    with pytest.raises(PlanParseError):
        parse_plan("0 (PickUp-Hoist crane0 tank0 p0) 5")


@pytest.mark.parametrize("text,start,dur", [("2.5", 3, 5), ("2.49", 2, 5), ("0.5", 1, 5)])
def test_half_up_rounding(text, start, dur):
    (a,) = parse_plan(f"{text} (PickUp-Hoist hoist0 tank0 p0) 5.00").actions
    assert (a.start, a.duration) == (start, dur)


def test_strict_mode_rejects_fractions():
    with pytest.raises(PlanParseError):
        parse_plan("2.5 (PickUp-Hoist hoist0 tank0 p0) 5", strict=True)
    assert len(parse_plan("2.0 (PickUp-Hoist hoist0 tank0 p0) 5.00", strict=True)) == 1


def test_missing_duration():
    with pytest.raises(PlanParseError):
        parse_plan("0 (PickUp-Hoist hoist0 tank0 p0)")
    (a,) = parse_plan("0 (PickUp-Hoist hoist0 tank0 p0)", default_duration=5).actions
    assert a.duration == 5


def _action(draw):
    h, t, u, p = (draw(st.integers(0, 120)) for _ in range(4))
    kind = draw(st.sampled_from(["m", "pk", "pt"]))
    if kind == "m":
        return Move(h, t, u)
    return (PickUp if kind == "pk" else PutDown)(h, t, p)


@st.composite
def plans(draw):
    n = draw(st.integers(0, 15))
    acts = [TimedAction(_action(draw), draw(st.integers(0, 10_000)), draw(st.integers(1, 500))) for _ in range(n)]
    return Plan(tuple(sorted(acts, key=lambda a: a.start)))


@settings(max_examples=100, deadline=None)
@given(plans())
def test_render_parse_roundtrip(plan):
    assert parse_plan(render_plan(plan)) == plan


# -- domain ---------------------------------------------------------------------------

def test_pickup_schema_shape():
    text = export_domain().text
    assert len(schema_conditions(text, "PickUp-Hoist")) == 7
    assert len(schema_effects(text, "PickUp-Hoist")) == 6
    assert "(over all (hoist_position ?h ?t))" in schema_conditions(text, "PickUp-Hoist")


def test_domain_mentions_motion_predicates():
    text = export_domain().text
    assert "hoist_start_moving" in text and "hoist_stop_moving" in text
    assert "(move_duration ?from ?to)" in text


def test_domain_is_instance_independent(one_step, three_products):
    assert export_domain(one_step).text == export_domain(three_products).text == export_domain().text


def test_domain_matches_golden():
    assert export_domain().text == (GOLDEN / "domain.pddl").read_text()


# -- problem --------------------------------------------------------------------------

def _soaking():
    ops = ["O1", "O2", "O3", "O4", "O5"]
    prods = [product(0, ("O1", 25, 55)), product(1, ("O5", 25, 55), initial_location=5, initial_elapsed=30)]
    return line(ops, hoists=[Hoist(0, (0, 6), 5)], products=prods)


def test_problem_holds_pickup_preconditions():
    inst = _soaking()
    doc = export_problem(initial_state(inst), [SubGoal.hoist_have(0, 1)], inst)
    for fact in ["(hoist_empty hoist0)", "(hoist_free hoist0)", "(product_at p1 tank5)", "(product_ready p1)",
                 "(hoist_position hoist0 tank5)", "(= (processing_time p1) 30)", "(= (min_processing p1) 25)",
                 "(= (max_processing p1) 55)"]:
        assert fact in doc.text
    assert "(hoist_have hoist0 p1)" in doc.text
    assert doc.symbols["p1"] == ("product", 1)
    assert not doc.degenerate


def test_empty_goal_set_is_degenerate():
    inst = _soaking()
    doc = export_problem(initial_state(inst), [], inst)
    assert doc.degenerate
    assert "(:goal (and\n))" in doc.text


def test_problem_roundtrip_fact_set(three_products):
    s = initial_state(three_products)
    goals = [SubGoal.product_at(0, 1), SubGoal.hoist_at(0, 2), SubGoal.hoist_have(0, 1)]
    facts, back = read_problem(export_problem(s, goals, three_products).text)
    assert facts == grounded_facts(s, three_products)
    assert back == goals


def test_symbol_names_roundtrip(three_products):
    doc = export_problem(initial_state(three_products), [], three_products)
    for name, (kind, idx) in doc.symbols.items():
        assert name == {"hoist": "hoist", "tank": "tank", "product": "p"}[kind] + str(idx)


# -- external adapter ------------------------------------------------------------------

def _script(tmp_path, body):
    path = tmp_path / "fake_planner.py"
    path.write_text("import sys\n" + body)
    return [sys.executable, str(path)]


def test_external_planner_plan_validates(tmp_path, one_step):
    cmd = _script(tmp_path, "assert len(sys.argv) == 3\n"
                            "print('; found a plan')\n"
                            "print('0.0 (PickUp-Hoist hoist0 tank0 p0) 5.00')\n"
                            "print('5.0 (Move-Hoist hoist0 tank0 tank1) 5.00')\n"
                            "print('10.0 (PutDown-Hoist hoist0 tank1 p0) 5.00')\n")
    sub = SubProblem(initial_state(one_step), (SubGoal.product_at(0, 1),))
    ext = ExternalPlanner(cmd)(sub, one_step)
    emb = EmbeddedPlanner()(sub, one_step)
    assert ext.status == SOLVED and emb.status == SOLVED
    for res in (ext, emb):
        assert validate_plan(one_step, res.plan, require_complete=False).ok


def test_external_planner_nonzero_exit_is_unsolvable(tmp_path, one_step):
    cmd = _script(tmp_path, "sys.exit(1)\n")
    sub = SubProblem(initial_state(one_step), (SubGoal.product_at(0, 1),))
    assert ExternalPlanner(cmd)(sub, one_step).status == UNSOLVABLE
