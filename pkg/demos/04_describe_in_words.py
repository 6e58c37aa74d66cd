"""Putting regions back into words: blurring, the abstracting test, and the
describe search over a two-level operator pool.

The abstract "relocate" moves a blob roughly to the goal; refinement swaps
it for the concrete pair go-north . go-east, which passes the abstracting
test against relocate and lands the goal test's mass at one.
"""

import numpy as np

from meaningspace import seed_store
from meaningspace.operators import Composed, Shift
from meaningspace.regions import Region, grid_from_function
from meaningspace.abstraction import (
    AbstractionParams, Blur, DescribeProblem, default_probe_set, describe,
    describe_own_concept, is_abstracting, similarity_test_operator,
)

store = seed_store()
ctx = store.context_for(("east", "north"), "map")
SHIFT, LAG = 19 / 63, 2 / 63
bump = lambda c: (lambda x: np.exp(-(((x - c) / 0.12) ** 2)))

start = Region(ctx, ((grid_from_function(bump(0.35), ("east",)), 1.0),
                     (grid_from_function(bump(0.35), ("north",)), 1.0)),
               "start")
goal = Region(ctx, ((grid_from_function(bump(0.35 + SHIFT), ("east",)), 1.0),
                    (grid_from_function(bump(0.35 + SHIFT), ("north",)), 1.0)),
              "goal")

go_north = Shift("north", SHIFT, label="go-north")
go_east = Shift("east", SHIFT, label="go-east")
pool = (
    (go_north, 0), (go_east, 0),
    (Shift("north", -SHIFT, label="go-south"), 0),
    (Shift("east", -SHIFT, label="go-west"), 0),
    (Composed((Shift("east", SHIFT - LAG), Shift("north", SHIFT - LAG)),
              label="relocate"), 1),
    (Blur(0.2, label="wander"), 1),
)

problem = DescribeProblem(
    source_context=ctx, source_region=start, pool=pool,
    test_operator=similarity_test_operator(goal), goal_threshold=0.1,
    abstraction=AbstractionParams(delta=8 / 63, epsilon=0.1),
    probes=default_probe_set(ctx))

result = describe(problem)
print("describe: how do I get from start to goal?")
print(f"  composition (outermost first): {result.names}")
print(f"  goal membership at 1: {result.goal_membership:.3f} "
      f"(met: {result.met})")
print(f"  goal-mean trace: {[round(g, 3) for g in result.goal_means]}")
print(f"  nodes visited: {result.nodes_visited} "
      f"(exhaustive to depth {len(result.ops)}: "
      f"{sum(len(pool) ** k for k in range(1, len(result.ops) + 1))})")
for note in result.refinements:
    print(f"  refinement: {note}")

relocate = pool[4][0]
ok, residual = is_abstracting(
    relocate, [Composed((go_east, go_north))], ("east", "north"),
    AbstractionParams(delta=8 / 63, epsilon=0.1), default_probe_set(ctx))
print(f"\nis relocate abstracting over go-north . go-east? {ok} "
      f"(worst residual {residual:.3f})")

print("\ndescribe a lexicon word in its own words (word excluded from pool):")
own = describe_own_concept("slow", store)
print(f"  slow = {own.names}  (goal membership {own.goal_membership:.3f})")
