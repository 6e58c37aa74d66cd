"""The comprehension heuristics on the paper-style situations:

contradiction      and(slow, fast) has no high-membership point
lack of information  or(slow, fast) covers nearly everything
no change          "stand still faster" leaves the region untouched
growing vagueness  northeast -> anywhere-except-southwest
mood / effectors   imperative "drive fast" becomes a controller command
"""

from meaningspace import (
    ComprehensionConfig, Session, apply_and, apply_or, check_contradiction,
    check_vacuity, interpret, seed_store,
)
from meaningspace.regions import Region, grid_from_function, region_stats

cfg = ComprehensionConfig()
store = seed_store()
qspace = store.context_for(("quickness",), "demo-q")


def qreg(fn, label):
    return Region(qspace, ((grid_from_function(fn, ("quickness",)), 1.0),),
                  label)


fast = qreg(lambda x: x, "fast")
slow = qreg(lambda x: 1 - x, "slow")

clash = apply_and(slow, fast)
st = region_stats(clash)
print(f"and(slow, fast): max membership {st.max_membership:.3f} "
      f"-> contradiction score {check_contradiction(clash, cfg):.2f}")

mush = apply_or(slow, fast)
st = region_stats(mush, tau=cfg.vacuity_level)
print(f"or(slow, fast):  coverage above {cfg.vacuity_level} is "
      f"{st.coverage:.2f} -> vacuity score {check_vacuity(mush, cfg):.2f}")

print("\n-- dialog-level flags")
session = Session(store)
for text in ["walk", "walk faster", "stand still faster"]:
    out = interpret(session, text)
    flags = ", ".join(sorted(out.flags)) or "-"
    print(f"{text!r:24} action={out.action:25} flags={flags}")

print("\n-- vagueness and the reset phrase")
s2 = Session(store)
interpret(s2, "robot is northeast")
out = interpret(s2, "robot is not southwest")
current = [t for t in out.trace if t.get("stage") == "current"][0]
print(f"'robot is not southwest' in the same context: flags={current['flags']}"
      f" -> ended up in {out.chosen.context_id}")
s3 = Session(store)
interpret(s3, "robot is northeast")
interpret(s3, "forget everything")
out = interpret(s3, "robot is not southwest")
print(f"after 'forget everything': action={out.action}, "
      f"context={out.chosen.context_id}, flags={sorted(out.flags)}")

print("\n-- effector commands")
for text in ["drive fast", "drive very fast or very slowly",
             "if drive very fast or very slowly"]:
    s = Session(store)
    out = interpret(s, text)
    eff = out.effector
    detail = ""
    if eff.kind == "command":
        detail = f" apply {eff.value:.3f} on {eff.axis}"
    elif eff.kind == "clarification":
        detail = f" ({eff.runs} separate high spots -> ask the user)"
    print(f"{text!r:42} effector={eff.kind}{detail}")
