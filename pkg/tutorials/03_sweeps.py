"""
Sweeps and report files
=======================

A small generated instance, swept over the opening minimum and the
returns multiplier; the CSV files land in ``sweep_output/``.
"""

from bcropt import GeneratorConfig, SolveSettings, emit_report, generate_instance, sweep_lambda, sweep_rho

cfg = GeneratorConfig(n_youth=12, n_services=4, horizon=8, n_status_quo=2, n_candidates=4,
                      stay=(1, 2), capacity_scale=0.3, expansion_headroom=0.0)
inst = generate_instance(cfg, seed=1)
exact = SolveSettings(gap=0.0)

lam = sweep_lambda(inst, "ratio_max", [1, 2, 3, 4], exact)
for k, r in enumerate(lam, 1):
    m = r.metrics
    print(f"lambda={k}: BCR {m.bcr:8.2f}  cost {m.total_cost:9.0f}  referrals {m.referrals:3d}  "
          f"utilization {m.utilization:.3f}")

rho = sweep_rho(inst, "profit_max", [0.5, 1, 2, 4, 6], 1, exact)
print("profit_max openings over rho:", [r.metrics.shelters_opened for r in rho])

files = emit_report(lam + rho, "sweep_output",
                    series={"lambda": list(zip([1, 2, 3, 4], lam)),
                            "rho": list(zip([0.5, 1, 2, 4, 6], rho))})
print("\n".join(str(f) for f in files[:4]), "...")
