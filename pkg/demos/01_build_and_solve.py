"""Generate an instance, run the two-phase solver, save and reload the result.

The quickest end-to-end tour: sample a city, let the multi-start search
construct routes and optimize their loading, then round-trip the winning
solution through its JSON document form.
"""

import json

from ssbrp import (
    Family,
    GeneratorConfig,
    RunConfig,
    generate_instance,
    parse_instance,
    parse_solution,
    run,
    write_instance,
    write_solution,
)

# a medium instance: 12 stations, 2 vehicles, 10% of bikes damaged
config = GeneratorConfig(
    family=Family.PALMA,
    stations=12,
    vehicles=2,
    time_budget_min=120.0,
    damaged_fraction=0.1,
    seed=7,
)
instance = generate_instance(config)
print(f"stations={len(instance.stations)}  fleet={len(instance.fleet)}  "
      f"budget={instance.time_budget:g} min  depot stock={instance.depot.operative}")

# run the matheuristic: restarts stop after 60 non-improving iterations
report = run(instance, RunConfig(max_iter=60, master_seed=7))
best = report.best_solution
o = best.objective
print(f"\nbest found at iteration {report.iteration_of_best} "
      f"of {report.total_iterations}")
print(f"objective  total={o.total:.6f}  imbalance={o.imbalance:.6f}  "
      f"damaged={o.damaged:.6f}  time={o.time:.6f}")

# incumbent trace: (iteration, objective total) pairs, strictly decreasing
for it, val in report.incumbent_trace:
    print(f"  iter {it:3d}  ->  {val:.6f}")

# the routes, with per-visit (operative, damaged) moves
for route, plan in zip(best.routes, best.plans):
    if not route.visits:
        print(f"\nvehicle {route.vehicle_id}: unused")
        continue
    legs = " ".join(
        f"{node}{move}" for node, move in zip(route.visits, plan.moves)
    )
    print(f"\nvehicle {route.vehicle_id}: {legs}")
    print(f"  route time {best.route_times[route.vehicle_id]:g} min")

# documents are plain dicts, so json round-trips are exact
inst_doc = write_instance(instance)
assert parse_instance(json.loads(json.dumps(inst_doc))) == instance
sol_doc = write_solution(best, seed=7)
reloaded = parse_solution(json.loads(json.dumps(sol_doc)), instance)
assert reloaded == best
print("\nboth documents round-trip exactly "
      f"(instance {len(json.dumps(inst_doc))} bytes, "
      f"solution {len(json.dumps(sol_doc))} bytes)")
