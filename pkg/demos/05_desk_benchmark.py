"""
The desk benchmark
==================

The built-in desk job is deliberately nasty: fifty tasks on a 15-row
board, a long alternating human/robot chain up column 0, and filler
columns that bury human work under robot work. Greedy play keeps the
human busy on fillers while the chain starves, so schedules spread out
over a wide range.

This script sizes up the job three ways: random play to get the
baseline distribution, a budgeted exhaustive search to show the route
count exploding with depth, and a short training run to show search
plus learning beating the random baseline. The full ten-iteration run
lives in the test suite; three iterations keep this demo quick.
"""

from hrcsched import (
    TrainingConfig,
    desk_fixture,
    exhaustive_search,
    random_rollouts,
    training_loop,
)

spec = desk_fixture()
print(f"desk job: {len(spec.tasks)} tasks on a {spec.width}x{spec.height} board, "
      f"{spec.humans} human + {spec.robots} robot")
print("total work:", sum(t.duration for t in spec.tasks), "time units")
print()

stats = random_rollouts(spec, trajectories=300, seed=0)
print(f"random play over {stats.count} runs: mean {stats.mean:.1f}, "
      f"min {stats.min}, max {stats.max}")
print()

result = exhaustive_search(spec, node_budget=200_000)
print(f"exhaustive search: {result.status} after {result.nodes_expanded} nodes")
print("routes per depth:", [(row.depth, row.routes) for row in result.depth_rows])
print()

reports, _ = training_loop(spec, TrainingConfig(iterations=3))
for r in reports:
    print(f"iteration {r.iteration}: mean {r.mean_makespan:.1f}, "
          f"best {r.best_makespan}")
print()
print(f"after 3 iterations the best schedule takes {reports[-1].best_makespan} "
      f"time units versus a random mean of {stats.mean:.1f}")
