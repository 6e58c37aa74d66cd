"""A short dialog: verbs with internal parameter regions, block composition,
comparatives, and the spare-context machinery.

"walk very fast" never touches the narrative region directly with "very":
the hedge squares the parameter region of "fast", which in turn replaces
the speed parameter region of "walk"; only the finished block-operator acts
on the action context.
"""

from meaningspace import Session, interpret, seed_store
from meaningspace.operators import centroid
from meaningspace.service import ascii_heatmap, outcome_lines

store = seed_store()
session = Session(store)


def say(text):
    outcome = interpret(session, text)
    for line in outcome_lines(text, outcome):
        print(line)
    return outcome


print("-- commands build block-operators")
say("walk")
walk_block = session.last_outcome.chosen.plan.line[0]
print(f"   walk speed parameter: "
      f"{centroid(walk_block.parameter_region, 'quickness'):.3f}")

say("walk fast")
fast_block = session.last_outcome.chosen.plan.line[0]
print(f"   'walk fast' speed:    "
      f"{centroid(fast_block.parameter_region, 'quickness'):.3f}")

say("walk very fast")
very_block = session.last_outcome.chosen.plan.line[0]
print(f"   'walk very fast':     "
      f"{centroid(very_block.parameter_region, 'quickness'):.3f}"
      "   (very squares the parameter region)")

print("\n-- comparatives act on the external context")
say("walk faster")

print("\n-- the action region after the dialog")
for row in ascii_heatmap(session.active_region(), width=48):
    print("   " + row)

print("\n-- nouns actualize object contexts; adjectives project onto them")
say("car is fast and heavy")
say("boat is fast")
print(f"   contexts so far: {sorted(session.state.regions)}")

print("\n-- 'but' keeps the two results in separate subspaces")
say("drive fast but drive slow")
print(f"   spare snapshots: {[ctx for ctx, _ in session.state.spare]}")
