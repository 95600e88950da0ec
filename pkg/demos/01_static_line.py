"""A small static line: six products of recipe A on eight tanks with one hoist.

Run from the repository root:

    python3 demos/01_static_line.py

Writes ``static_line.svg`` next to this script.
"""
from pathlib import Path

from hoistplan.benchgen import make_static_instance
from hoistplan.core import validate_plan
from hoistplan.gantt import render_svg
from hoistplan.hierarchy import run_hit
from hoistplan.pddlio import render_plan
from hoistplan.sim import per_product_makespans
from hoistplan.skeleton import SkeletonSchedule, schedule_new_products

inst = make_static_instance("A", 6, 8)
print(f"{len(inst.products)} products, {len(inst.tanks)} tanks, {len(inst.hoists)} hoist")
print("recipe:", ", ".join(f"{o} [{lo},{hi}]" for o, lo, hi in zip(inst.products[0].recipe.ops, inst.products[0].recipe.lo, inst.products[0].recipe.hi)))

# The skeleton is a coarse forecast: which hoist and tank each product
# occupies, and roughly when. It ignores hoist interference.
skeleton = schedule_new_products(inst, SkeletonSchedule(), set(range(len(inst.products))))
print("\nskeleton forecast for p0:")
for e in skeleton.chain(0):
    print("  ", e.line())

# HIT turns the forecast into sub-goals, asks the temporal planner for a short
# plan, cuts it, and repeats until every product is unloaded.
res = run_hit(inst)
print(f"\nHIT: success={res.success} after {len(res.rounds)} rounds, planner time {res.cpu_time:.2f}s")
for line in res.trace[:5]:
    print("  ", line)
print("   ...")

# The validator replays the plan independently of the planner.
report = validate_plan(inst, res.plan)
print(f"\nvalidator: ok={report.ok} makespan={report.makespan}")
print("per-product makespans:", per_product_makespans(res.plan, inst))

print("\nfirst plan lines:")
print("\n".join(render_plan(res.plan).splitlines()[:8]))

out = Path(__file__).with_name("static_line.svg")
out.write_text(render_svg(res.plan, inst, scale=0.5))
print(f"\nGantt chart written to {out}")
