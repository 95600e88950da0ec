"""Products that show up while the line is running, plus a broken tank.

HIT keeps planning a short way ahead of the line. Each new plan is launched
alpha ticks before the current one runs out, so as long as the planner
answers within alpha the hoist never stands still waiting for it.

    python3 demos/02_dynamic_arrivals.py
"""
from hoistplan.benchgen import GeneratorParams, make_dynamic_instance
from hoistplan.hierarchy import HitConfig
from hoistplan.sim import TANK_DOWN, TANK_UP, ScenarioEvent, run_simulation

inst, arrivals = make_dynamic_instance(GeneratorParams(n_tanks=10, n_hoists=1, K=4, seed=21))
print(f"{len(inst.products)} products; {len(arrivals)} of them arrive later:")
for e in arrivals:
    print(f"   t={e.at:4d}  p{e.target}  recipe {' '.join(inst.products[e.target].recipe.ops)}")

alpha = HitConfig().alpha


def on_time(k, seconds):
    # pretend every planner call takes exactly alpha ticks
    return alpha


m = run_simulation(inst, arrivals, runtime_model=on_time)
print(f"\nplanner always on time: success={m.success} makespan={m.makespan} waiting={m.waiting_time}")

# One slow call: the line has to wait for the overrun, and only for it.
def one_slow(k, seconds):
    return alpha + 7 if k == 10 else alpha


slow = run_simulation(inst, arrivals, runtime_model=one_slow)
print(f"one call 7 ticks late:  success={slow.success} makespan={slow.makespan} waiting={slow.waiting_time}")

# Take the first processing tank out of service for a while. Products that
# were headed there are rerouted, or held back until it comes back.
t = next(t.id for t in inst.tanks if t.operation)
events = arrivals + [ScenarioEvent(100, TANK_DOWN, t), ScenarioEvent(400, TANK_UP, t)]
broken = run_simulation(inst, events, runtime_model=on_time)
print(f"T{t} down over [100, 400): success={broken.success} makespan={broken.makespan} reason={broken.reason!r}")
print("per-product makespans:", broken.per_product_makespan)
