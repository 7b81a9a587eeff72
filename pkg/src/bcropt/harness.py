"""Scenario runs, sweeps and report files.

Metrics always come from the decoded plan, and the plan is cross-checked
against the solver's own objective before a result is returned.
"""

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import BcrError, InfeasibleLambda, MonotonicityViolation, ScenarioError
from .fractional import maximize_ratio
from .generate import generate_instance, reassign_boroughs
from .mip import MipConfig, solve_mip
from .model import build_model, decode, encode, lambda_total, normalize_lambda, normalize_mode

log = logging.getLogger(__name__)

CSV_COLUMNS = ("scenario_id", "objective_mode", "lambda", "rho", "delta", "n_youth", "bcr",
               "total_cost", "referrals", "utilization", "shelters_opened", "iterations",
               "wall_time")
SERIES_COLUMNS = ("parameter", "bcr", "total_cost", "utilization", "referrals", "shelters_opened")


@dataclass(frozen=True)
class SolveSettings:
    """How scenarios are solved; ``gap`` is the subproblem MIP gap."""

    gap: float = 0.05
    epsilon: float | None = None
    backend: str = "highs"
    max_iter: int = 50
    time_limit: float = math.inf
    workers: int = 1

    def mip_config(self):
        return MipConfig(gap_target=self.gap, backend=self.backend,
                         time_limit=self.time_limit, workers=self.workers)

    @property
    def exact(self):
        return self.gap == 0


@dataclass
class Metrics:
    bcr: float
    total_cost: float
    total_benefit: float
    referrals: int
    in_house: int
    utilization: float
    shelters_opened: int
    expansion_units: int

    @property
    def fulfilled(self):
        return self.referrals + self.in_house


@dataclass
class ScenarioResult:
    scenario: dict
    metrics: Metrics
    stats: dict
    opened: tuple
    youth_per_shelter: dict
    x: np.ndarray | None = field(default=None, repr=False)

    @property
    def scenario_id(self):
        return self.scenario["id"]

    def to_dict(self, timing=True):
        stats = dict(self.stats)
        if not timing:
            stats.pop("wall_time", None)
        return {"scenario": self.scenario, "metrics": asdict(self.metrics), "stats": stats,
                "opened": list(self.opened), "youth_per_shelter": self.youth_per_shelter}


def compute_metrics(plan, built):
    x = encode(built, plan)
    fm = built.fractional
    b, c = fm.benefit(x), fm.cost(x)
    refs = len(plan.referrals)
    inside = len(plan.in_house)
    total = refs + inside
    return Metrics(
        bcr=b / c,
        total_cost=c,
        total_benefit=b,
        referrals=refs,
        in_house=inside,
        utilization=inside / total if total else 0.0,
        shelters_opened=len(plan.opened),
        expansion_units=int(sum(plan.expansion.values())),
    )


def scenario_id(mode, lam, rho, delta, n_youth, seed, tag=None):
    lam_s = lam if not isinstance(lam, dict) else "+".join(f"{k}{v}" for k, v in sorted(lam.items()))
    parts = [mode, f"lam{lam_s}", f"rho{rho:g}", f"delta{delta:g}", f"y{n_youth}",
             f"seed{seed if seed is not None else 'na'}"]
    if tag:
        parts.append(str(tag))
    return "_".join(parts).replace(" ", "")


def run_scenario(instance, mode, lam=1, overrides=None, settings=None):
    """Build, solve and decode one scenario.

    ``overrides`` may set ``rho``, ``delta``, ``status_quo_only`` and ``tag``.
    Solver failures are re-raised as ScenarioError naming the stage.
    """
    settings = settings or SolveSettings()
    ov = dict(overrides or {})
    mode = normalize_mode(mode)
    if "rho" in ov:
        instance = instance.with_rho(ov["rho"])
    if "delta" in ov:
        instance = instance.with_delta(ov["delta"])
    sq_only = bool(ov.get("status_quo_only", False))
    desc = {
        "objective_mode": mode,
        "lambda": lam if not isinstance(lam, dict) else dict(sorted(lam.items())),
        "rho": instance.benefit.rho,
        "delta": instance.delta,
        "seed": instance.seed,
        "n_youth": len(instance.youth),
        "status_quo_only": sq_only,
        "gap": settings.gap,
    }
    if ov.get("tag") is not None:
        desc["tag"] = ov["tag"]
    tags = [t for t in ("sq" if sq_only else None, ov.get("tag")) if t]
    desc["id"] = scenario_id(mode, lam, instance.benefit.rho, instance.delta, len(instance.youth),
                             instance.seed, "_".join(tags) or None)
    normalize_lambda(instance, lam)
    if mode == "ratio_max" and not sq_only and lambda_total(lam) == 0:
        raise InfeasibleLambda(
            "ratio_max with no minimum opening admits the do-nothing plan: with zero "
            "marginal action the marginal cost vanishes and the ratio grows without "
            "bound; require lambda >= 1 or solve the status quo explicitly")
    stage = "build"
    start = time.perf_counter()
    try:
        built = build_model(instance, mode, lam, status_quo_only=sq_only)
        stage = "solve"
        cfg = settings.mip_config()
        if mode == "ratio_max":
            rs = maximize_ratio(built.fractional, epsilon=settings.epsilon, sub_cfg=cfg,
                                max_iter=settings.max_iter)
            x = rs.x_star
            objective = rs.q_star
            stats = {"iterations": len(rs.iterations), "q_sequence": rs.q_sequence,
                     "last_ratio": rs.last_ratio, "epsilon": rs.epsilon,
                     "nodes": sum(it.nodes for it in rs.iterations),
                     "gap": max(it.gap for it in rs.iterations), "status": rs.status,
                     "warnings": list(rs.warnings)}
        else:
            sol = solve_mip(built.program(), config=cfg)
            if sol.incumbent is None:
                raise ScenarioError(f"{mode} model is infeasible", desc, stage)
            x = sol.incumbent
            objective = sol.objective
            stats = {"iterations": 1, "nodes": sol.nodes_explored, "gap": sol.gap,
                     "status": sol.status}
        stage = "decode"
        plan = decode(built, x)
        metrics = compute_metrics(plan, built)
        recomputed = _mode_objective(built, encode(built, plan))
        tol = 1e-7 * (1.0 + abs(objective))
        if abs(recomputed - objective) > tol:
            raise ScenarioError(
                f"plan objective {recomputed!r} disagrees with solver objective {objective!r}",
                desc, stage)
    except ScenarioError:
        raise
    except BcrError as exc:
        raise ScenarioError(f"{type(exc).__name__} during {stage}: {exc}", desc, stage) from exc
    stats["objective"] = objective
    stats["wall_time"] = time.perf_counter() - start
    stats["num_vars"] = built.counts.num_vars
    stats["num_constraints"] = built.counts.num_constraints
    return ScenarioResult(desc, metrics, stats, plan.opened, plan.youth_counts(), x)


def _mode_objective(built, x):
    fm = built.fractional
    b, c = fm.benefit(x), fm.cost(x)
    return {"benefit_max": b, "cost_min": c, "profit_max": b - c, "ratio_max": b / c}[built.mode]


def run_many(jobs, workers=1):
    """Run ``(instance, mode, lam, overrides, settings)`` jobs; results keep job order."""
    if workers <= 1:
        return [run_scenario(*job) for job in jobs]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda job: run_scenario(*job), jobs))


# -- trend checks ----------------------------------------------------------------

def monotone_violations(values, direction="nonincreasing", tol=0.0):
    out = []
    for k in range(1, len(values)):
        step = values[k] - values[k - 1]
        if (direction == "nonincreasing" and step > tol) or (direction == "nondecreasing" and step < -tol):
            out.append((k, values[k - 1], values[k]))
    return out


def check_trend(results, metric, direction, exact, label=""):
    """Hard failure under exact solves, logged warning otherwise."""
    vals = [getattr(r.metrics, metric) for r in results]
    tol = 1e-9 * max([1.0] + [abs(v) for v in vals])
    bad = monotone_violations(vals, direction, tol)
    if bad:
        msg = f"{label or metric} is not {direction}: {bad}"
        if exact:
            raise MonotonicityViolation(msg, bad)
        log.warning("%s (inexact solves; largest step %.3g)", msg,
                    max(abs(b - a) for _, a, b in bad))
    return bad


# -- sweeps --------------------------------------------------------------------

def sweep_lambda(instance, mode, lam_values, settings=None, overrides=None, check=True):
    settings = settings or SolveSettings()
    cands = len(instance.candidates)
    for lam in lam_values:
        if lambda_total(lam) > cands:
            raise InfeasibleLambda(f"lambda={lam} exceeds the {cands} candidate shelter(s)")
    jobs = [(instance, mode, lam, overrides, settings) for lam in lam_values]
    results = run_many(jobs, settings.workers)
    if check and normalize_mode(mode) == "ratio_max":
        check_trend(results, "bcr", "nonincreasing", settings.exact, "BCR over lambda")
    return results


def sweep_rho(instance, mode, rho_values, lam=1, settings=None):
    settings = settings or SolveSettings()
    jobs = [(instance, mode, lam, {"rho": r}, settings) for r in rho_values]
    return run_many(jobs, settings.workers)


def sweep_cost(instance, mode, lam, variants, settings=None):
    """Re-draw candidate boroughs (and so opening costs) per variant seed."""
    settings = settings or SolveSettings()
    jobs = [(reassign_boroughs(instance, v), mode, lam, {"tag": f"boroughs{v}"}, settings)
            for v in variants]
    return run_many(jobs, settings.workers)


def sweep_scale(cfg, sizes, seed, mode, lam=1, settings=None):
    """Vary the number of youth; candidates follow the config's policy."""
    settings = settings or SolveSettings()
    jobs = [(generate_instance(replace(cfg, n_youth=n), seed), mode, lam, None, settings)
            for n in sizes]
    return run_many(jobs, settings.workers)


# -- objective comparison ---------------------------------------------------------

@dataclass
class Comparison:
    rows: dict                 # mode -> ScenarioResult
    failures: dict             # mode -> message

    def table(self):
        out = []
        for mode, r in self.rows.items():
            m = r.metrics
            out.append({"mode": mode, "total_cost": m.total_cost, "bcr": m.bcr,
                        "referrals": m.referrals, "utilization": m.utilization,
                        "shelters_opened": m.shelters_opened})
        for mode, msg in self.failures.items():
            out.append({"mode": mode, "error": msg})
        return out

    def orderings(self, n_candidates=None):
        r = {k: v.metrics for k, v in self.rows.items()}
        need = ("cost_min", "ratio_max", "profit_max")
        if any(k not in r for k in need):
            return {}
        cm, rm, pm = (r[k] for k in need)
        rel = 1e-9
        out = {
            "cost": cm.total_cost <= rm.total_cost * (1 + rel) and rm.total_cost <= pm.total_cost * (1 + rel),
            "utilization": cm.utilization <= rm.utilization + rel and rm.utilization <= pm.utilization + rel,
            "bcr": all(rm.bcr >= m.bcr * (1 - rel) for m in r.values()),
        }
        if n_candidates is not None:
            out["profit_opens_all"] = pm.shelters_opened == n_candidates
        return out


def compare_objectives(instance, lam, settings=None, modes=("cost_min", "profit_max", "ratio_max", "benefit_max")):
    settings = settings or SolveSettings()
    rows, failures = {}, {}
    for mode in modes:
        try:
            rows[mode] = run_scenario(instance, mode, lam, None, settings)
        except BcrError as exc:
            failures[mode] = str(exc)
    return Comparison(rows, failures)


# -- reports -------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return format(v, ".10g")
    if isinstance(v, dict):
        return "+".join(f"{k}:{val}" for k, val in sorted(v.items()))
    return str(v)


def csv_row(r, timing=False):
    s, m, st = r.scenario, r.metrics, r.stats
    vals = [s["id"], s["objective_mode"], s["lambda"], s["rho"], s["delta"], s["n_youth"],
            m.bcr, m.total_cost, m.referrals, m.utilization, m.shelters_opened,
            st.get("iterations", ""), st["wall_time"] if timing else ""]
    return [_fmt(v) for v in vals]


def _sort_key(r):
    return r.scenario["id"]


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def emit_report(results, out_dir, series=None, timing=False):
    """Write ``results.csv``, one JSON per scenario and optional series files.

    ``series`` maps a sweep name to ``[(parameter, ScenarioResult), ...]``.
    Outputs are sorted and float-formatted so identical runs give identical
    bytes; wall time is omitted unless ``timing`` is set.
    """
    if not results:
        raise ValueError("no results to report")
    out = Path(out_dir)
    files = {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in sorted(results, key=_sort_key):
        w.writerow(csv_row(r, timing))
    files["results.csv"] = buf.getvalue()
    for r in sorted(results, key=_sort_key):
        doc = _round_floats(r.to_dict(timing))
        files[f"scenarios/{r.scenario_id}.json"] = json.dumps(
            doc, indent=1, sort_keys=True, default=_json_default) + "\n"
    for name, points in sorted((series or {}).items()):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for param, r in points:
            m = r.metrics
            w.writerow([_fmt(v) for v in (param, m.bcr, m.total_cost, m.utilization,
                                          m.referrals, m.shelters_opened)])
        files[f"series_{name}.csv"] = buf.getvalue()
    (out / "scenarios").mkdir(parents=True, exist_ok=True)
    for rel, text in files.items():
        (out / rel).write_text(text)
    return sorted(out / rel for rel in files)


def _round_floats(obj):
    if isinstance(obj, float):
        return float(format(obj, ".12g"))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj
