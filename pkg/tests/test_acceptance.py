"""Acceptance suite: one verdict line per criterion, printed in the summary.

Run with ``pytest tests/test_acceptance.py -s`` to see each line as it is
produced; the lines are also repeated in pytest's terminal summary.
"""

import functools
import time

import numpy as np

from acceptance_log import report
from corpus import random_fractional, random_mip
from bcropt.cli import main
from bcropt.errors import EnumerationTooLarge, InfeasibleModel
from bcropt.fixtures import DESK_SCALE, TINY, crowded_toy, study_instance, toy_instance
from bcropt.fractional import maximize_ratio
from bcropt.generate import generate_instance
from bcropt.harness import Comparison, SolveSettings, monotone_violations, run_scenario
from bcropt.lp import DEFAULT_TOL, LinearProgram, solve_lp
from bcropt.mip import MipConfig, brute_force_solve, solve_mip
from bcropt.model import build_model, check_count_bounds, complete_plan, count_bounds
from bcropt.oracle import ratio_oracle, sample_plan

EXACT = SolveSettings(gap=0.0, backend="highs")
SEEDS = range(10)
LAMBDAS = (1, 2, 3, 4)
RHOS = tuple(0.5 * k for k in range(1, 13))


@functools.cache
def scenario(seed, mode, lam, rho=None):
    ov = {} if rho is None else {"rho": rho}
    return run_scenario(study_instance(seed), mode, lam, ov, EXACT)


def test_criterion_01_fractional_oracle():
    start = time.perf_counter()
    checked, worst, mismatches = 0, 0.0, []
    seed = 0
    while checked < 30 and seed < 200:
        inst = generate_instance(TINY, seed)
        seed += 1
        try:
            ref = ratio_oracle(inst, lam=1)
        except EnumerationTooLarge:
            continue
        built = build_model(inst, "ratio_max", 1)
        try:
            q = maximize_ratio(built.fractional, sub_cfg=MipConfig(backend="bnb")).q_star
        except InfeasibleModel:
            q = None
        checked += 1
        if ref is None or q is None:
            if not (ref is None and q is None):
                mismatches.append(seed - 1)
            continue
        err = abs(q - ref.ratio)
        worst = max(worst, err)
        if err > 1e-6:
            mismatches.append(seed - 1)
    elapsed = time.perf_counter() - start
    ok = checked >= 25 and not mismatches and elapsed <= 300
    report(1, ok, f"{checked} tiny instances, max |q* - oracle| = {worst:.2e} (tol 1e-6), "
                  f"mismatches {mismatches}, {elapsed:.0f}s (limit 300s)")
    assert ok


def test_criterion_02_mip_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    bad = []
    for k in range(30):
        mip = random_mip(rng, n_int=int(rng.integers(4, 13)))
        ref = brute_force_solve(mip)
        sol = solve_mip(mip, gap_target=0.0)
        same = sol.status == ref.status and (
            ref.status != "optimal" or abs(sol.objective - ref.objective) <= 1e-9 * max(1, abs(ref.objective)))
        if not same:
            bad.append(k)
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed <= 120
    report(2, ok, f"30 random MIPs (<= 12 integer columns), mismatches {bad}, {elapsed:.0f}s (limit 120s)")
    assert ok


def test_criterion_03_dinkelbach_monotone():
    runs = []
    for name, inst, lam, sq in (("toy", toy_instance(), 1, False), ("toy2", toy_instance(2), 1, False),
                                ("toy2 lam2", toy_instance(2), 2, False), ("crowded", crowded_toy(), 1, False),
                                ("toy2 status quo", toy_instance(2), 0, True)):
        built = build_model(inst, "ratio_max", lam, status_quo_only=sq)
        runs.append((name, maximize_ratio(built.fractional, sub_cfg=MipConfig(backend="bnb"))))
    rng = np.random.default_rng(3)
    for k in range(20):
        runs.append((f"random{k}", maximize_ratio(random_fractional(rng))))
    bad = []
    most = 0
    for name, sol in runs:
        qs = sol.q_sequence
        most = max(most, len(qs))
        if any(b < a for a, b in zip(qs, qs[1:])) or sol.iterations[-1].F >= sol.epsilon or len(qs) > 10:
            bad.append(name)
    ok = not bad
    report(3, ok, f"{len(runs)} exact runs, q_k nondecreasing, F(q*) < eps, "
                  f"max {most} iterations (limit 10); failures {bad}")
    assert ok


def test_criterion_04_objective_orderings():
    start = time.perf_counter()
    passed, detail = 0, []
    for seed in SEEDS:
        inst = study_instance(seed)
        rows = {m: scenario(seed, m, 2) for m in ("cost_min", "profit_max", "ratio_max", "benefit_max")}
        order = Comparison(rows, {}).orderings(len(inst.candidates))
        if all(order.values()):
            passed += 1
        else:
            detail.append(f"seed {seed}: {[k for k, v in order.items() if not v]}")
    elapsed = time.perf_counter() - start
    ok = passed >= 9 and elapsed <= 1800
    report(4, ok, f"cost/utilization/BCR orderings and profit opens all on {passed}/10 seeds "
                  f"(need 9), {elapsed:.0f}s (limit 1800s); {'; '.join(detail) or 'no misses'}")
    assert ok


def test_criterion_05_bcr_nonincreasing_in_lambda():
    bad = []
    for seed in SEEDS:
        bcr = [scenario(seed, "ratio_max", lam).metrics.bcr for lam in LAMBDAS]
        if monotone_violations(bcr, "nonincreasing", 0.0):
            bad.append((seed, bcr))
    toy = [run_scenario(toy_instance(2), "ratio_max", lam, None, EXACT).metrics.bcr for lam in (1, 2)]
    if monotone_violations(toy, "nonincreasing", 0.0):
        bad.append(("toy", toy))
    ok = not bad
    report(5, ok, f"ratio_max BCR over lambda 1..4 on 10 seeds and the toy, zero tolerance; violations {bad}")
    assert ok


def test_criterion_06_referrals_nonincreasing():
    good = {}
    for mode in ("cost_min", "ratio_max"):
        good[mode] = 0
        for seed in SEEDS:
            refs = [scenario(seed, mode, lam).metrics.referrals for lam in LAMBDAS]
            if not monotone_violations(refs, "nonincreasing"):
                good[mode] += 1
    ok = all(v >= 9 for v in good.values())
    report(6, ok, f"referrals nonincreasing over lambda 1..4: cost_min {good['cost_min']}/10, "
                  f"ratio_max {good['ratio_max']}/10 (need 9 each)")
    assert ok


def test_criterion_07_rho_sweep():
    seed, lam = 0, 2
    n_cand = len(study_instance(seed).candidates)
    profit = [scenario(seed, "profit_max", lam, rho).metrics.shelters_opened for rho in RHOS]
    sets = [set(scenario(seed, "ratio_max", lam, rho).opened) for rho in RHOS]
    spread = len(set.union(*sets) - set.intersection(*sets))
    ok_profit = all(n == n_cand for n in profit)
    ok_ratio = spread <= lam
    ok = ok_profit and ok_ratio
    report(7, ok, f"rho 0.5..6: profit_max opened {profit} of {n_cand}; ratio_max opened-set "
                  f"spread {spread} (limit lambda = {lam})")
    assert ok


def test_criterion_08_cost_positive():
    fixtures = {"toy": toy_instance(), "toy2": toy_instance(2), "crowded": crowded_toy(),
                "tiny0": generate_instance(TINY, 0), "study0": study_instance(0)}
    worst = {}
    bad = []
    for name, inst in fixtures.items():
        built = build_model(inst, "ratio_max", 1)
        floor = min(inst.cost.assignment_in_house, inst.cost.assignment_referral)
        rng = np.random.default_rng(8)
        low = np.inf
        for _ in range(1000):
            assignments, opened = sample_plan(inst, rng, 1)
            x = complete_plan(built, assignments, opened)
            if not built.constraints.is_feasible(x):
                bad.append((name, "infeasible sample"))
                break
            c = built.fractional.cost(x)
            low = min(low, c)
            if c < floor:
                bad.append((name, c))
        worst[name] = low
    ok = not bad
    report(8, ok, "1000 feasible plans per fixture, min C(x): "
                  + ", ".join(f"{k} {v:g}" for k, v in worst.items())
                  + f" (floor min r = 1); failures {bad}")
    assert ok


def test_criterion_09_count_bounds():
    models = [("toy", toy_instance()), ("toy2", toy_instance(2)), ("crowded", crowded_toy())]
    models += [(f"tiny{s}", generate_instance(TINY, s)) for s in range(10)]
    models += [(f"study{s}", study_instance(s)) for s in SEEDS]
    models += [("desk", generate_instance(DESK_SCALE, 0))]
    bad, pruned = [], []
    for name, inst in models:
        for sq in (False, True):
            built = build_model(inst, "ratio_max", 0 if sq else 1, status_quo_only=sq)
            problems = check_count_bounds(built)
            if problems:
                bad.append((name, problems))
            if built.counts.num_x >= count_bounds(inst)["num_x"]:
                pruned.append(name)
    ok = not bad and not pruned
    report(9, ok, f"{2 * len(models)} built models within the variable/binary/action bounds, "
                  f"X count below |Y||S||I||T| on all; failures {bad + pruned}")
    assert ok


def _relaxations():
    rng = np.random.default_rng(10)
    for _ in range(40):
        n, m = int(rng.integers(2, 9)), int(rng.integers(1, 7))
        A = rng.integers(-4, 6, (m, n)).astype(float)
        senses = rng.choice(["<", ">", "="], m, p=[0.6, 0.3, 0.1])
        x0 = rng.uniform(0, 3, n)
        yield LinearProgram(rng.integers(-5, 6, n).astype(float), A, senses, A @ x0,
                            np.zeros(n), np.full(n, 4.0), bool(rng.random() < 0.5))
    for _ in range(30):
        yield random_mip(rng).base
    for inst in (toy_instance(), toy_instance(2), crowded_toy(), generate_instance(TINY, 1)):
        for mode in ("cost_min", "profit_max", "benefit_max"):
            yield build_model(inst, mode, 1).program().base


def test_criterion_10_lp_certificates():
    n_opt, worst_v, worst_g = 0, 0.0, 0.0
    for lp in _relaxations():
        sol = solve_lp(lp)
        if sol.status != "optimal":
            continue
        n_opt += 1
        worst_v = max(worst_v, sol.certificate.max_violation)
        worst_g = max(worst_g, sol.certificate.rel_gap)
    ok = n_opt > 50 and worst_v <= 1e-7 and worst_g <= 1e-7
    report(10, ok, f"{n_opt} optimal LP solves, max violation {worst_v:.1e}, max relative duality gap "
                   f"{worst_g:.1e} (tol 1e-7)")
    assert ok


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "manifest.json"}


def test_criterion_11_replay(tmp_path):
    import json
    cfg = tmp_path / "tiny.json"
    cfg.write_text(json.dumps({"n_youth": 3, "n_services": 2, "horizon": 5, "n_status_quo": 1,
                               "n_candidates": 2, "extra_services": [0, 1], "start_slack": [0, 1],
                               "stay": [0, 1], "service_capacity": [1, 2], "critical_mass": 1}))
    inst = tmp_path / "inst.json"
    runs = [
        ["generate", "--config", str(cfg), "--seed", "4", "--out", str(inst)],
        ["solve", str(inst), "--objective", "ratio", "--gap", "0", "--out", str(tmp_path / "solve")],
        ["sweep", str(inst), "--vary", "lambda", "--range", "1..2", "--gap", "0", "--out", str(tmp_path / "lam")],
        ["sweep", str(inst), "--vary", "rho", "--range", "0.5..2:0.5", "--objective", "profit",
         "--out", str(tmp_path / "rho")],
        ["sweep", str(inst), "--vary", "cost-multiplier", "--range", "0..2", "--objective", "cost",
         "--out", str(tmp_path / "cost")],
    ]
    bad = []
    for argv in runs:
        assert main(argv) == 0
    gen_bytes = inst.read_bytes()
    assert main(["replay", str(tmp_path / "inst.json.manifest.json"), "--out", str(tmp_path / "inst2.json")]) == 0
    if (tmp_path / "inst2.json").read_bytes() != gen_bytes:
        bad.append("generate")
    for name in ("solve", "lam", "rho", "cost"):
        before = _tree(tmp_path / name)
        assert main(["replay", str(tmp_path / name / "manifest.json"), "--out", str(tmp_path / (name + "2"))]) == 0
        if _tree(tmp_path / (name + "2")) != before:
            bad.append(name)
    ok = not bad
    report(11, ok, f"generate, solve and three sweeps replayed from manifests, byte-identical; differences {bad}")
    assert ok


def test_criterion_12_desk_scale():
    inst = generate_instance(DESK_SCALE, 0)
    start = time.perf_counter()
    r = run_scenario(inst, "ratio_max", 1, None, SolveSettings(gap=0.05, time_limit=600))
    elapsed = time.perf_counter() - start
    ok = elapsed <= 600
    report(12, ok, f"|Y|=100, 10 candidates, T=26, {r.stats['num_vars']} variables: ratio_max at gap 0.05 "
                   f"in {elapsed:.0f}s (limit 600s), BCR {r.metrics.bcr:.1f}")
    assert ok
