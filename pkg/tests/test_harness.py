import csv
import logging

import numpy as np
import pytest

from bcropt.errors import InfeasibleLambda, MonotonicityViolation, ScenarioError
from bcropt.fixtures import crowded_toy, toy_instance
from bcropt.fractional import evaluate_ratio
from bcropt.harness import (Metrics, ScenarioResult, SolveSettings, check_trend, compare_objectives,
                            compute_metrics, emit_report, monotone_violations, run_scenario,
                            scenario_id, sweep_cost, sweep_lambda, sweep_rho)
from bcropt.instance import REFERRAL
from bcropt.model import build_model, complete_plan, decode
from bcropt.oracle import ratio_oracle

EXACT = SolveSettings(gap=0.0, backend="bnb")


def metrics_of(built, assignments):
    return compute_metrics(decode(built, complete_plan(built, assignments)), built)


def test_utilization_examples():
    inst = toy_instance()
    built = build_model(inst, "cost_min", 0)
    full = [("y0", "sq0", "beds", 0), ("y0", "sq0", "beds", 1), ("y0", "sq0", "counseling", 1),
            ("y0", "sq0", "counseling", 3), ("y1", "new0", "beds", 1)]
    assert metrics_of(built, full).utilization == 1.0
    refs = [(y, "ref0", i, t) for y, _, i, t in full]
    m = metrics_of(built, refs)
    assert m.utilization == 0.0 and m.referrals == 5
    mixed = full[:3] + [("y0", "ref0", "counseling", 3)]
    m = metrics_of(built, mixed)
    assert m.utilization == pytest.approx(0.75)
    assert m.referrals + m.in_house == m.fulfilled == 4


def test_status_quo_scenario():
    inst = toy_instance(2)
    r = run_scenario(inst, "ratio_max", 0, {"status_quo_only": True}, EXACT)
    assert r.metrics.shelters_opened == 0 and r.metrics.expansion_units == 0
    built = build_model(inst, "ratio_max", 0, status_quo_only=True)
    plan = decode(built, r.x)
    refs = {s.id for s in inst.shelters if s.kind == REFERRAL}
    expected = sum(inst.cost.assignment_referral if s in refs else inst.cost.assignment_in_house
                   for _, s, _, _ in plan.assignments)
    assert r.metrics.total_cost == pytest.approx(expected)
    assert evaluate_ratio(built.fractional, r.x) == r.metrics.bcr


def test_ratio_matches_oracle():
    inst = toy_instance()
    r = run_scenario(inst, "ratio_max", 1, None, EXACT)
    assert r.metrics.bcr == pytest.approx(ratio_oracle(inst).ratio, abs=1e-6)
    assert r.stats["objective"] == pytest.approx(r.metrics.bcr)


def test_lambda_zero_ratio_refused():
    with pytest.raises(InfeasibleLambda, match="without"):
        run_scenario(toy_instance(), "ratio_max", 0, None, EXACT)


def test_lambda_too_large_in_sweep():
    with pytest.raises(InfeasibleLambda):
        sweep_lambda(toy_instance(1), "ratio_max", [1, 2], EXACT)


def test_solver_errors_name_the_stage():
    with pytest.raises(ScenarioError) as err:
        run_scenario(toy_instance(1, critical_mass=5), "cost_min", 1, None, EXACT)
    assert err.value.stage == "solve"
    with pytest.raises(InfeasibleLambda):
        run_scenario(toy_instance(1), "cost_min", 2, None, EXACT)


def test_profit_opens_all_over_rho_on_crowded_toy():
    rhos = [0.5 * k for k in range(1, 13)]
    for r in sweep_rho(crowded_toy(), "profit_max", rhos, 1, EXACT):
        assert r.opened == ("new0", "new1")


def test_lambda_sweep_on_toy():
    rs = sweep_lambda(toy_instance(2), "ratio_max", [1, 2], EXACT)
    assert rs[1].metrics.bcr <= rs[0].metrics.bcr
    rs = sweep_lambda(toy_instance(2), "cost_min", [0, 1, 2], EXACT)
    refs = [r.metrics.referrals for r in rs]
    assert all(b <= a for a, b in zip(refs, refs[1:]))


def test_referral_preference():
    # spare in-house room at zero expansion cost: cost_min never refers
    inst = toy_instance(1, delta=1.0)
    r = run_scenario(inst, "cost_min", 1, None, EXACT)
    assert r.metrics.referrals == 0


def test_ratio_dominates_other_modes():
    cmp = compare_objectives(toy_instance(2), 1, EXACT)
    assert not cmp.failures
    order = cmp.orderings(2)
    assert order["bcr"]
    table = cmp.table()
    assert {row["mode"] for row in table} == {"cost_min", "profit_max", "ratio_max", "benefit_max"}


def test_single_point_instance_rows_coincide():
    # with lambda = every candidate in the crowded toy at rho large, all plans agree on openings
    cmp = compare_objectives(crowded_toy(), 2, EXACT, modes=("profit_max", "benefit_max"))
    opened = {r.opened for r in cmp.rows.values()}
    assert opened == {("new0", "new1")}


def test_cost_sweep_tags():
    rs = sweep_cost(toy_instance(2), "cost_min", 1, [0, 1], EXACT)
    assert [r.scenario["tag"] for r in rs] == ["boroughs0", "boroughs1"]


def test_scenario_id():
    assert scenario_id("ratio_max", {"Queens": 1}, 4.0, 0.1, 40, 3) == \
        "ratio_max_lamQueens1_rho4_delta0.1_y40_seed3"


def test_monotone_helpers(caplog):
    assert monotone_violations([3, 2, 2, 1]) == []
    assert monotone_violations([3, 4]) == [(1, 3, 4)]

    def fake(v):
        return ScenarioResult({}, Metrics(v, 1, v, 0, 1, 1.0, 0, 0), {}, (), {})

    with pytest.raises(MonotonicityViolation):
        check_trend([fake(1.0), fake(2.0)], "bcr", "nonincreasing", exact=True)
    with caplog.at_level(logging.WARNING):
        bad = check_trend([fake(1.0), fake(2.0)], "bcr", "nonincreasing", exact=False)
    assert bad and "not nonincreasing" in caplog.text


def test_emit_report(tmp_path):
    rs = sweep_lambda(toy_instance(2), "ratio_max", [1, 2], EXACT)
    files = emit_report(rs, tmp_path / "a", series={"lambda": list(zip([1, 2], rs))})
    names = {p.name for p in files}
    assert {"results.csv", "series_lambda.csv"} <= names
    rows = list(csv.DictReader((tmp_path / "a" / "results.csv").open()))
    assert len(rows) == 2 and rows[0]["wall_time"] == ""
    series = list(csv.DictReader((tmp_path / "a" / "series_lambda.csv").open()))
    assert [float(r["parameter"]) for r in series] == [1, 2]
    assert float(series[1]["bcr"]) <= float(series[0]["bcr"])
    # a second run writes identical bytes
    rs2 = sweep_lambda(toy_instance(2), "ratio_max", [1, 2], EXACT)
    emit_report(rs2[::-1], tmp_path / "b", series={"lambda": list(zip([1, 2], rs2))})
    for p in files:
        rel = p.relative_to(tmp_path / "a")
        assert (tmp_path / "b" / rel).read_bytes() == p.read_bytes()


def test_emit_report_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path / "none")
    assert not (tmp_path / "none").exists()


def test_timing_column(tmp_path):
    r = run_scenario(toy_instance(), "cost_min", 1, None, EXACT)
    emit_report([r], tmp_path, timing=True)
    row = next(csv.DictReader((tmp_path / "results.csv").open()))
    assert float(row["wall_time"]) >= 0


def test_parallel_sweep_same_results():
    a = sweep_lambda(toy_instance(2), "cost_min", [0, 1, 2], EXACT)
    b = sweep_lambda(toy_instance(2), "cost_min", [0, 1, 2], SolveSettings(gap=0, backend="bnb", workers=3))
    assert [r.metrics.total_cost for r in a] == [r.metrics.total_cost for r in b]
    assert np.allclose([r.metrics.bcr for r in a], [r.metrics.bcr for r in b])
