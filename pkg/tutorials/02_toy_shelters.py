"""
Four objectives on the toy shelter instance
===========================================

Two youth, one status-quo shelter, two candidates and a referral
organization over four weeks.
"""

from bcropt import SolveSettings, build_model, compare_objectives, decode, run_scenario
from bcropt.fixtures import toy_instance

inst = toy_instance(n_candidates=2)
exact = SolveSettings(gap=0.0)

built = build_model(inst, "ratio_max", 1)
print("model size:", built.counts)
print("rows per constraint family:", built.families)

cmp = compare_objectives(inst, 1, exact)
for row in cmp.table():
    print(row)
print("orderings:", cmp.orderings(len(inst.candidates)))

# the ratio plan in youth/shelter/week terms
r = run_scenario(inst, "ratio_max", 1, None, exact)
plan = decode(built, r.x)
for a in plan.assignments:
    print("  youth %s -> %s for %s in week %d" % a)
print("opened:", plan.opened, " expansion:", plan.expansion)

# status quo: no openings, no expansion
sq = run_scenario(inst, "ratio_max", 0, {"status_quo_only": True}, exact)
print("status quo BCR %.2f, cost %.0f" % (sq.metrics.bcr, sq.metrics.total_cost))
