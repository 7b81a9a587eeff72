"""Mixed-integer programs solved by best-bound branch-and-bound.

Relaxations go through :func:`bcropt.lp.solve_lp`.  For the larger RHY
models a second backend hands the whole program to HiGHS through
``scipy.optimize.milp``; both return the same :class:`MipSolution`.
"""

import heapq
import itertools
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .errors import EnumerationTooLarge, LimitExceeded, MalformedProgram
from .lp import DEFAULT_TOL, LinearProgram, solve_lp

__all__ = [
    "CONTINUOUS",
    "BINARY",
    "INTEGER",
    "MixedIntegerProgram",
    "MipConfig",
    "MipSolution",
    "solve_mip",
    "brute_force_solve",
]

CONTINUOUS, BINARY, INTEGER = "C", "B", "I"


@dataclass(frozen=True)
class MixedIntegerProgram:
    base: LinearProgram
    var_kind: np.ndarray

    def __post_init__(self):
        kinds = self.var_kind
        if isinstance(kinds, str):
            kinds = list(kinds)
        kinds = np.asarray(kinds, dtype="<U1").ravel()
        object.__setattr__(self, "var_kind", kinds)
        self.validate()

    def validate(self):
        base = self.base
        if self.var_kind.size != base.num_vars:
            raise MalformedProgram("var_kind length does not match the number of variables")
        bad = set(np.unique(self.var_kind)) - {CONTINUOUS, BINARY, INTEGER}
        if bad:
            raise MalformedProgram(f"unknown variable kind(s) {sorted(bad)}")
        binv = self.var_kind == BINARY
        if np.any(base.lb[binv] < 0) or np.any(base.ub[binv] > 1):
            raise MalformedProgram("binary variables must have bounds within [0, 1]")
        integ = self.integer_mask
        lo, hi = base.lb[integ], base.ub[integ]
        if np.any(lo != np.round(lo)) or np.any(hi != np.round(hi)):
            raise MalformedProgram("integer variables need integral bounds")

    @property
    def integer_mask(self):
        return self.var_kind != CONTINUOUS

    @property
    def num_vars(self):
        return self.base.num_vars

    def with_objective(self, c, offset=0.0, maximize=True):
        return replace(self, base=self.base.with_objective(c, offset, maximize))

    def is_integral(self, x, tol=DEFAULT_TOL.integrality):
        xi = np.asarray(x)[self.integer_mask]
        return bool(np.all(np.abs(xi - np.round(xi)) <= tol))

    def is_feasible(self, x, tol=DEFAULT_TOL):
        return self.base.violation(x) <= tol.feasibility and self.is_integral(x, tol.integrality)


@dataclass(frozen=True)
class MipConfig:
    """Branch-and-bound settings.

    ``backend`` selects the in-house branch-and-bound (``"bnb"``) or HiGHS
    (``"highs"``).  ``lp_method`` picks the relaxation solver for ``"bnb"``.
    """

    gap_target: float = 0.0
    node_limit: int = 1_000_000
    time_limit: float = math.inf
    backend: str = "bnb"
    lp_method: str = "simplex"
    workers: int = 1
    audit: bool = False
    tol: object = DEFAULT_TOL

    def __post_init__(self):
        if not 0.0 <= self.gap_target < 1.0:
            raise ValueError("gap_target must lie in [0, 1)")
        if self.backend not in ("bnb", "highs"):
            raise ValueError(f"unknown MIP backend {self.backend!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class MipSolution:
    status: str
    incumbent: np.ndarray | None
    objective: float
    bound: float
    gap: float
    nodes_explored: int
    lp_stats: dict = field(default_factory=dict)
    audit: dict | None = None

    @property
    def x(self):
        return self.incumbent


def relative_gap(bound, objective):
    return abs(bound - objective) / max(1.0, abs(objective))


def solve_mip(mip, gap_target=None, node_limit=None, time_limit=None, *,
              config=None, incumbent=None):
    """Solve ``mip``; keyword limits override the matching ``config`` fields.

    ``incumbent`` seeds branch-and-bound with a known feasible point (it is
    re-checked, never trusted).  Hitting a node/time limit without any
    incumbent raises :class:`LimitExceeded`.
    """
    cfg = config or MipConfig()
    overrides = {k: v for k, v in (("gap_target", gap_target), ("node_limit", node_limit),
                                   ("time_limit", time_limit)) if v is not None}
    if overrides:
        cfg = replace(cfg, **overrides)
    if cfg.backend == "highs":
        return _solve_highs(mip, cfg)
    return _BranchAndBound(mip, cfg).solve(incumbent)


@dataclass(order=True)
class _Node:
    key: float
    order: int
    lb: np.ndarray = field(compare=False)
    ub: np.ndarray = field(compare=False)
    x: np.ndarray = field(compare=False)
    bound: float = field(compare=False)
    depth: int = field(compare=False)


class _BranchAndBound:
    """Best-bound search, most-fractional branching (lowest index on ties).

    Everything is stated for maximization internally; minimization problems
    are negated on entry and on exit.
    """

    def __init__(self, mip, cfg):
        self.mip = mip
        self.cfg = cfg
        self.tol = cfg.tol
        self.sign = 1.0 if mip.base.maximize else -1.0
        self.lp = mip.base.with_objective(self.sign * mip.base.c, self.sign * mip.base.offset, True)
        self.integer = np.flatnonzero(mip.integer_mask)
        self.counter = itertools.count()
        self.best_x = None
        self.best_obj = -math.inf
        self.nodes = 0
        self.lp_solves = 0
        self.worst_violation = 0.0
        self.worst_gap = 0.0
        self.lock = threading.Lock()
        self.audit = {"pruned": [], "sandwich": []} if cfg.audit else None

    # -- helpers -----------------------------------------------------------
    def _relax(self, lb, ub):
        sol = solve_lp(self.lp.with_bounds(lb, ub), self.tol, self.cfg.lp_method)
        with self.lock:
            self.lp_solves += 1
            if sol.certificate is not None:
                self.worst_violation = max(self.worst_violation, sol.certificate.max_violation)
                self.worst_gap = max(self.worst_gap, sol.certificate.rel_gap)
        return sol

    def _try_incumbent(self, x):
        """Round integer coordinates, re-check feasibility, keep if better."""
        x = np.array(x, dtype=float)
        x[self.integer] = np.round(x[self.integer])
        if self.lp.violation(x) > self.tol.feasibility:
            return False
        obj = self.lp.objective(x)
        if obj > self.best_obj:
            self.best_obj = obj
            self.best_x = x
            return True
        return False

    def _branch_var(self, x):
        if self.integer.size == 0:
            return None
        xi = x[self.integer]
        frac = np.abs(xi - np.round(xi))
        if frac.max(initial=0.0) <= self.tol.integrality:
            return None
        # most fractional: distance from the nearest integer, argmax takes lowest index
        return int(self.integer[np.argmax(frac)])

    def _prunable(self, bound):
        if self.best_x is None:
            return False
        slack = self.tol.gap * max(1.0, abs(self.best_obj))
        return bound <= self.best_obj + slack

    def _record_prune(self, node_bound, reason):
        if self.audit is not None:
            self.audit["pruned"].append((float(node_bound), reason))

    def _make_node(self, lb, ub, depth, sol=None):
        if sol is None:
            sol = self._relax(lb, ub)
        if sol.status != "optimal":
            self._record_prune(-math.inf, sol.status)
            return None
        node = _Node(-sol.objective, next(self.counter), lb, ub, sol.x, sol.objective, depth)
        if self._branch_var(sol.x) is None:
            self._try_incumbent(sol.x)
            self._record_prune(sol.objective, "integral")
            return None
        if self._prunable(sol.objective):
            self._record_prune(sol.objective, "bound")
            return None
        return node

    def _children(self, node):
        j = self._branch_var(node.x)
        v = node.x[j]
        down_ub = node.ub.copy()
        down_ub[j] = math.floor(v)
        up_lb = node.lb.copy()
        up_lb[j] = math.ceil(v)
        return [(node.lb, down_ub, node.depth + 1), (up_lb, node.ub, node.depth + 1)]

    # -- main loop -----------------------------------------------------------
    def solve(self, seed=None):
        start = time.monotonic()
        base = self.lp
        if seed is not None and len(seed) == base.num_vars:
            self._try_incumbent(seed)

        root = self._relax(base.lb.copy(), base.ub.copy())
        if root.status == "infeasible":
            return self._result("infeasible", -math.inf)
        if root.status != "optimal":
            raise MalformedProgram(f"root relaxation is {root.status}")
        heap = []
        if self._branch_var(root.x) is None:
            self._try_incumbent(root.x)
            if self.best_x is None:
                # rounding broke feasibility; branch anyway on the least-integral var
                heap.append(_Node(-root.objective, next(self.counter), base.lb.copy(),
                                  base.ub.copy(), root.x, root.objective, 0))
        elif not self._prunable(root.objective):
            heap.append(_Node(-root.objective, next(self.counter), base.lb.copy(),
                              base.ub.copy(), root.x, root.objective, 0))

        pool = ThreadPoolExecutor(self.cfg.workers) if self.cfg.workers > 1 else None
        status = None
        try:
            while heap:
                bound = -heap[0].key
                if self.audit is not None:
                    self.audit["sandwich"].append((max(bound, self.best_obj), self.best_obj))
                if self.best_x is not None:
                    gap = relative_gap(max(bound, self.best_obj), self.best_obj)
                    if self._prunable(bound):
                        for node in heap:
                            self._record_prune(node.bound, "bound")
                        heap = []
                        break
                    if self.cfg.gap_target > 0 and gap <= self.cfg.gap_target:
                        status = "gap_limit"
                        break
                if self.nodes >= self.cfg.node_limit:
                    status = "feasible"
                    break
                if time.monotonic() - start > self.cfg.time_limit:
                    status = "time_limit"
                    break
                batch = [heapq.heappop(heap) for _ in range(min(self.cfg.workers, len(heap)))]
                specs = []
                for node in batch:
                    self.nodes += 1
                    if self._prunable(node.bound):
                        self._record_prune(node.bound, "bound")
                        continue
                    if self._branch_var(node.x) is None:
                        # integral node whose rounding failed the feasibility re-check
                        continue
                    specs.extend(self._children(node))
                if pool is None:
                    children = [self._make_node(*s) for s in specs]
                else:
                    # relaxations in parallel, bookkeeping in submission order
                    sols = list(pool.map(lambda s: self._relax(s[0], s[1]), specs))
                    children = [self._make_node(*s, sol=sol) for s, sol in zip(specs, sols)]
                for child in children:
                    if child is not None:
                        heapq.heappush(heap, child)
        finally:
            if pool is not None:
                pool.shutdown()

        if status is None:
            status = "optimal" if self.best_x is not None else "infeasible"
            final_bound = self.best_obj
        else:
            final_bound = max([-n.key for n in heap] + [self.best_obj])
            if status in ("feasible", "time_limit") and self.best_x is None:
                raise LimitExceeded(f"{status} reached after {self.nodes} nodes without an incumbent")
        return self._result(status, final_bound)

    def _result(self, status, bound):
        if self.audit is not None:
            self.audit["final"] = self.best_obj
        stats = {"lp_solves": self.lp_solves, "max_violation": self.worst_violation,
                 "max_rel_gap": self.worst_gap, "backend": "bnb"}
        if self.best_x is None:
            return MipSolution(status, None, math.nan, self.sign * bound, math.inf,
                               self.nodes, stats, self.audit)
        obj = self.sign * self.best_obj
        b = self.sign * max(bound, self.best_obj)
        return MipSolution(status, self.best_x, obj, b, relative_gap(b, obj),
                           self.nodes, stats, self.audit)


def verify_audit(sol, tol=DEFAULT_TOL):
    """Replay the pruning log of an audited branch-and-bound solve.

    Audit records are kept in the solver's internal maximization sense.
    Returns the violating records: nodes pruned by bound whose relaxation
    value beats the final incumbent, and global bounds that dropped below
    the final incumbent or increased over time.  Empty means sound.
    """
    if sol.audit is None:
        raise ValueError("solve was not run with audit=True")
    best = sol.audit["final"]
    slack = tol.gap * max(1.0, abs(best))
    bad = [p for p in sol.audit["pruned"] if p[1] == "bound" and p[0] > best + slack]
    previous = math.inf
    for glob, _ in sol.audit["sandwich"]:
        if glob < best - slack or glob > previous + slack:
            bad.append((glob, "sandwich"))
        previous = glob
    return bad


def _solve_highs(mip, cfg):
    lp = mip.base
    c = -lp.c if lp.maximize else lp.c
    cons = []
    if lp.num_rows:
        lo = np.where(lp.senses == "<", -np.inf, lp.rhs)
        hi = np.where(lp.senses == ">", np.inf, lp.rhs)
        cons.append(LinearConstraint(lp.A, lo, hi))
    options = {"mip_rel_gap": cfg.gap_target, "disp": False,
               "node_limit": int(min(cfg.node_limit, 2**31 - 1))}
    if math.isfinite(cfg.time_limit):
        options["time_limit"] = float(cfg.time_limit)
    res = milp(c, constraints=cons, integrality=mip.integer_mask.astype(int),
               bounds=Bounds(lp.lb, lp.ub), options=options)
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    stats = {"backend": "highs", "message": res.message}
    if res.x is None:
        if res.status == 1:
            raise LimitExceeded(f"HiGHS stopped without an incumbent: {res.message}")
        if res.status == 2:
            return MipSolution("infeasible", None, math.nan, math.nan, math.inf, nodes, stats)
        raise MalformedProgram(f"HiGHS failed: {res.message}")
    x = np.clip(np.asarray(res.x, dtype=float), lp.lb, lp.ub)
    x[mip.integer_mask] = np.round(x[mip.integer_mask])
    viol = lp.violation(x)
    stats["max_violation"] = viol
    if viol > cfg.tol.feasibility:
        raise MalformedProgram(f"HiGHS incumbent violates constraints by {viol:.3g}")
    obj = lp.objective(x)
    dual = getattr(res, "mip_dual_bound", None)
    bound = obj if dual is None or not np.isfinite(dual) else (-dual if lp.maximize else dual) + lp.offset
    gap = relative_gap(bound, obj)
    if res.status == 0:
        # HiGHS closes gaps to its own 1e-6 objective tolerance
        status = "optimal" if gap <= 1e-6 else "gap_limit"
    else:
        status = "time_limit" if "time" in str(res.message).lower() else "feasible"
    return MipSolution(status, x, obj, bound, gap, nodes, stats)


def brute_force_solve(mip, cap=2**20, tol=DEFAULT_TOL):
    """Exhaustive optimum over every integer assignment (test oracle).

    Continuous variables, if any, are optimized by :func:`solve_lp` once the
    integer ones are fixed.
    """
    lp = mip.base
    idx = np.flatnonzero(mip.integer_mask)
    domains = [np.arange(int(lp.lb[j]), int(lp.ub[j]) + 1) for j in idx]
    size = 1
    for d in domains:
        size *= d.size
        if size > cap:
            raise EnumerationTooLarge(f"integer domain product exceeds {cap}")
    sign = 1.0 if lp.maximize else -1.0
    cont = np.flatnonzero(~mip.integer_mask)
    best_x, best = None, -math.inf
    if cont.size == 0:
        grid = np.array(list(itertools.product(*domains)), dtype=float).reshape(-1, idx.size)
        X = np.zeros((grid.shape[0], lp.num_vars))
        X[:, idx] = grid
        ok = np.ones(grid.shape[0], dtype=bool)
        if lp.num_rows:
            AX = (lp.A @ X.T).T - lp.rhs
            f = tol.feasibility
            ok &= np.all(np.where(lp.senses == "<", AX <= f, True), axis=1)
            ok &= np.all(np.where(lp.senses == ">", AX >= -f, True), axis=1)
            ok &= np.all(np.where(lp.senses == "=", np.abs(AX) <= f, True), axis=1)
        if ok.any():
            vals = sign * (X[ok] @ lp.c)
            k = int(np.argmax(vals))
            best_x = X[ok][k]
            best = float(vals[k])
    else:
        for combo in itertools.product(*domains):
            lb = lp.lb.copy()
            ub = lp.ub.copy()
            lb[idx] = combo
            ub[idx] = combo
            sol = solve_lp(lp.with_bounds(lb, ub), tol)
            if sol.status != "optimal":
                continue
            val = sign * sol.objective
            if val > best:
                best, best_x = val, sol.x
    if best_x is None:
        return MipSolution("infeasible", None, math.nan, math.nan, math.inf, size)
    obj = lp.objective(best_x)
    return MipSolution("optimal", best_x, obj, obj, 0.0, size)
