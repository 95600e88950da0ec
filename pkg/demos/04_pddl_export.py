"""Hand a sub-problem to an outside planner as PDDL, and read its answer back.

The embedded planner is what HIT uses by default. The same sub-problem can be
written out as a PDDL domain and problem for any temporal planner, and the
timestamped plan lines such planners print are parsed back into actions.

    python3 demos/04_pddl_export.py
"""
from hoistplan.benchgen import make_static_instance
from hoistplan.core import initial_state, validate_plan
from hoistplan.goals import SubGoal
from hoistplan.pddlio import export_domain, export_problem, parse_plan, render_plan
from hoistplan.tplanner import plan

inst = make_static_instance("E", 1, 6)
state = initial_state(inst)
goals = [SubGoal.product_at(0, 1)]

domain = export_domain()
problem = export_problem(state, goals, inst)
print(domain.text.split("(:durative-action")[0].strip())
print("...")
print(problem.text)

# Solve with the embedded planner and print the result the way a PDDL
# planner would.
res = plan(state, goals, inst)
text = render_plan(res.plan)
print("plan:\n" + text)

# Lines from a planner log, as they usually look: the parser takes the start
# time, the grounded action and the duration, and ignores blank lines.
listing = """
0.0    (PickUp-Hoist hoist0 tank0 p0)    5.00
5.0    (Move-Hoist hoist0 tank0 tank1)    5.00
10.0    (PutDown-Hoist hoist0 tank1 p0)    5.00
"""
parsed = parse_plan(listing)
for a in parsed:
    print(f"parsed: t={a.start:3d} {a.action.name:14s} hoist {a.action.hoist} ({a.duration} ticks)")
print("prefix valid:", validate_plan(inst, parsed, require_complete=False).ok)
