"""Continuous linear programs and a bounded-variable revised simplex solver.

Problems are stored as sparse rows with an explicit relation per row
(``'<'``, ``'>'`` or ``'='``) and finite per-variable bounds.  Every optimal
solve is checked against a primal/dual certificate before it is returned.
"""

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import MalformedProgram, NumericalBreakdown

__all__ = [
    "ToleranceConfig",
    "LinearProgram",
    "LpSolution",
    "Certificate",
    "solve_lp",
    "certify",
]

SENSES = ("<", ">", "=")


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances shared by the LP, MIP and ratio solvers."""

    feasibility: float = 1e-7
    gap: float = 1e-7
    integrality: float = 1e-6
    pivot: float = 1e-9
    optimality: float = 1e-9
    degenerate_limit: int = 50
    refactor_every: int = 50
    max_iter: int = 100_000


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class LinearProgram:
    """``max/min c @ x + offset`` subject to sparse rows and finite bounds."""

    c: np.ndarray
    A: sp.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    maximize: bool = True
    offset: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        A = sp.csr_matrix(self.A, dtype=float)
        if A.shape[0] == 0:
            A = sp.csr_matrix((0, n))
        senses = np.asarray(self.senses, dtype="<U1").ravel()
        rhs = np.asarray(self.rhs, dtype=float).ravel()
        lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        ub = np.asarray(self.ub, dtype=float).ravel()
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        self.validate()

    @classmethod
    def from_dense(cls, c, rows=(), senses=(), rhs=(), bounds=None,
                   maximize=True, offset=0.0):
        c = np.asarray(c, dtype=float)
        n = c.size
        A = np.asarray(rows, dtype=float).reshape(-1, n) if len(rows) else np.zeros((0, n))
        if bounds is None:
            raise MalformedProgram("finite bounds are required for every variable")
        bounds = np.asarray(bounds, dtype=float).reshape(n, 2)
        if isinstance(senses, str):
            senses = list(senses)
        return cls(c, sp.csr_matrix(A), np.asarray(senses, dtype="<U1").reshape(-1), np.asarray(rhs),
                   bounds[:, 0], bounds[:, 1], maximize, offset)

    @property
    def num_vars(self):
        return self.c.size

    @property
    def num_rows(self):
        return self.A.shape[0]

    def validate(self):
        n = self.c.size
        m = self.A.shape[0]
        if self.A.shape[1] != n:
            raise MalformedProgram(f"constraint matrix has {self.A.shape[1]} columns, expected {n}")
        if self.senses.size != m or self.rhs.size != m:
            raise MalformedProgram("senses/rhs length does not match the number of rows")
        if self.lb.size != n or self.ub.size != n:
            raise MalformedProgram("bounds length does not match the number of variables")
        bad = set(np.unique(self.senses)) - set(SENSES)
        if bad:
            raise MalformedProgram(f"unknown row relation(s) {sorted(bad)}")
        for name, arr in (("c", self.c), ("A", self.A.data), ("rhs", self.rhs)):
            if not np.all(np.isfinite(arr)):
                raise MalformedProgram(f"non-finite entries in {name}")
        if not (np.all(np.isfinite(self.lb)) and np.all(np.isfinite(self.ub))):
            raise MalformedProgram("all variable bounds must be finite")
        if np.any(self.lb > self.ub):
            j = int(np.argmax(self.lb > self.ub))
            raise MalformedProgram(f"variable {j} has lower bound {self.lb[j]} > upper {self.ub[j]}")
        if not np.isfinite(self.offset):
            raise MalformedProgram("non-finite objective offset")

    def with_bounds(self, lb, ub):
        return replace(self, lb=np.asarray(lb, dtype=float), ub=np.asarray(ub, dtype=float))

    def with_objective(self, c, offset=0.0, maximize=True):
        return replace(self, c=np.asarray(c, dtype=float), offset=float(offset), maximize=maximize)

    def objective(self, x):
        return float(self.c @ x + self.offset)

    def violation(self, x):
        """Largest row or bound violation of ``x``."""
        x = np.asarray(x, dtype=float)
        worst = float(max(np.max(self.lb - x, initial=0.0), np.max(x - self.ub, initial=0.0)))
        if self.num_rows:
            ax = self.A @ x
            r = ax - self.rhs
            le = self.senses == "<"
            ge = self.senses == ">"
            eq = self.senses == "="
            worst = max(worst,
                        float(np.max(r[le], initial=0.0)),
                        float(np.max(-r[ge], initial=0.0)),
                        float(np.max(np.abs(r[eq]), initial=0.0)))
        return worst


@dataclass(frozen=True)
class Certificate:
    max_violation: float
    primal: float
    dual: float
    rel_gap: float

    def ok(self, tol=DEFAULT_TOL):
        return self.max_violation <= tol.feasibility and self.rel_gap <= tol.gap


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    dual: np.ndarray | None = None
    iterations: int = 0
    certificate: Certificate | None = None
    diagnostics: dict = field(default_factory=dict)


def certify(lp, x, dual):
    """Primal feasibility and duality gap of ``(x, dual)``.

    ``dual`` uses the problem's own sense: for maximization, multipliers of
    ``'<'`` rows are nonnegative and of ``'>'`` rows nonpositive (mirrored
    for minimization).  Multipliers with the wrong sign are projected, so the
    reported dual value is always a valid bound.
    """
    x = np.asarray(x, dtype=float)
    sign = 1.0 if lp.maximize else -1.0
    c = sign * lp.c
    y = sign * np.asarray(dual, dtype=float) if lp.num_rows else np.zeros(0)
    y = np.where(lp.senses == "<", np.maximum(y, 0.0), y)
    y = np.where(lp.senses == ">", np.minimum(y, 0.0), y)
    d = c - (lp.A.T @ y if lp.num_rows else 0.0)
    bound = float(lp.rhs @ y + np.sum(np.maximum(d * lp.lb, d * lp.ub)))
    primal = float(c @ x)
    gap = abs(bound - primal) / (1.0 + abs(primal))
    return Certificate(lp.violation(x), sign * primal + lp.offset,
                       sign * bound + lp.offset, gap)


def solve_lp(lp, tol=DEFAULT_TOL, method="simplex"):
    """Solve ``lp`` and attach an optimality certificate.

    ``method`` is ``"simplex"`` (the in-house revised simplex) or ``"highs"``
    (scipy's HiGHS wrapper, used for relaxations too large for dense
    algebra).  Raises NumericalBreakdown when an optimal answer fails its
    certificate.
    """
    if method == "simplex":
        sol = _solve_simplex(lp, tol)
    elif method == "highs":
        sol = _solve_highs(lp, tol)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    sol.diagnostics["method"] = method
    if sol.status == "optimal":
        cert = certify(lp, sol.x, sol.dual)
        sol.certificate = cert
        if cert.max_violation > tol.feasibility or cert.rel_gap > tol.gap:
            raise NumericalBreakdown(
                f"{method} solution failed its certificate: violation "
                f"{cert.max_violation:.3g}, relative gap {cert.rel_gap:.3g}")
    return sol


def _solve_highs(lp, tol):
    A = lp.A
    le = lp.senses == "<"
    ge = lp.senses == ">"
    eq = lp.senses == "="
    A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if (le.any() or ge.any()) else None
    b_ub = np.concatenate([lp.rhs[le], -lp.rhs[ge]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = lp.rhs[eq] if eq.any() else None
    c = -lp.c if lp.maximize else lp.c
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=np.column_stack([lp.lb, lp.ub]), method="highs",
                  options={"primal_feasibility_tolerance": min(1e-9, tol.feasibility),
                           "dual_feasibility_tolerance": min(1e-9, tol.feasibility)})
    if res.status == 2:
        return LpSolution("infeasible", diagnostics={"highs_message": res.message})
    if res.status == 3:
        return LpSolution("unbounded", diagnostics={"highs_message": res.message})
    if res.status != 0:
        raise NumericalBreakdown(f"HiGHS failed: {res.message}")
    y = np.zeros(lp.num_rows)
    if A_ub is not None:
        m_ub = res.ineqlin.marginals
        k = int(le.sum())
        y[le] = m_ub[:k]
        y[ge] = -m_ub[k:]
    if A_eq is not None:
        y[eq] = res.eqlin.marginals
    if lp.maximize:
        y = -y
    x = np.clip(res.x, lp.lb, lp.ub)
    return LpSolution("optimal", x, lp.objective(x), y, int(res.nit))


def _solve_simplex(lp, tol):
    n, m = lp.num_vars, lp.num_rows
    if m == 0:
        c = lp.c if lp.maximize else -lp.c
        x = np.where(c > 0, lp.ub, lp.lb)
        return LpSolution("optimal", x, lp.objective(x), np.zeros(0), 0)

    A = lp.A.toarray()
    b = lp.rhs.copy()
    senses = lp.senses
    # slack columns: a x + s = b for '<', a x - s = b for '>'
    slack_rows = np.flatnonzero(senses != "=")
    ns = slack_rows.size
    S = np.zeros((m, ns))
    S[slack_rows, np.arange(ns)] = np.where(senses[slack_rows] == "<", 1.0, -1.0)

    x_struct = lp.lb.copy()
    resid = b - A @ x_struct
    basic = np.full(m, -1)
    row_of_slack = {int(r): k for k, r in enumerate(slack_rows)}
    for r, k in row_of_slack.items():
        coeff = S[r, k]
        if resid[r] * coeff >= 0:
            basic[r] = n + k
    art_rows = np.flatnonzero(basic < 0)
    na = art_rows.size
    R = np.zeros((m, na))
    R[art_rows, np.arange(na)] = np.where(resid[art_rows] >= 0, 1.0, -1.0)
    basic[art_rows] = n + ns + np.arange(na)

    full = np.hstack([A, S, R])
    N = n + ns + na
    lb = np.concatenate([lp.lb, np.zeros(ns + na)])
    ub = np.concatenate([lp.ub, np.full(ns + na, np.inf)])
    x = np.concatenate([x_struct, np.zeros(ns + na)])
    at_upper = np.zeros(N, dtype=bool)
    # initial basis is diagonal in +-1 entries
    x[basic] = np.abs(resid)

    engine = _Simplex(full, b, lb, ub, x, basic, at_upper, tol)
    iters = 0
    phase1 = 0.0
    if na:
        c1 = np.zeros(N)
        c1[n + ns:] = 1.0
        status, it = engine.run(c1)
        iters += it
        phase1 = float(engine.x[n + ns:] @ np.ones(na))
        scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
        if status != "optimal" or phase1 > tol.feasibility * scale:
            return LpSolution("infeasible", iterations=iters,
                              diagnostics={"phase1_objective": phase1})
        engine.retire_artificials(n + ns)

    c2 = np.zeros(N)
    c2[:n] = -lp.c if lp.maximize else lp.c
    status, it = engine.run(c2)
    iters += it
    if status == "unbounded":
        return LpSolution("unbounded", iterations=iters, diagnostics={"phase1_objective": phase1})
    xs = np.clip(engine.x[:n], lp.lb, lp.ub)
    y_min = engine.duals(c2)
    y = -y_min if lp.maximize else y_min
    return LpSolution("optimal", xs, lp.objective(xs), y, iters,
                      diagnostics={"phase1_objective": phase1,
                                   "bland": engine.bland_used})


class _Simplex:
    """Bounded-variable primal revised simplex on ``A x = b``, minimizing.

    Keeps an explicit basis inverse updated by elementary row operations and
    refactored periodically.  Dantzig pricing switches to Bland's rule once
    a run of degenerate pivots exceeds ``tol.degenerate_limit``.
    """

    def __init__(self, A, b, lb, ub, x, basic, at_upper, tol):
        self.A = A
        self.b = b
        self.lb = lb
        self.ub = ub
        self.x = x
        self.basic = basic
        self.at_upper = at_upper
        self.tol = tol
        self.is_basic = np.zeros(A.shape[1], dtype=bool)
        self.is_basic[basic] = True
        self.bland_used = False
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basic]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("singular basis during refactorization") from exc
        if not np.all(np.isfinite(self.Binv)):
            raise NumericalBreakdown("non-finite basis inverse")
        xn = self.x.copy()
        xn[self.basic] = 0.0
        self.x[self.basic] = self.Binv @ (self.b - self.A @ xn)
        self.since_refactor = 0

    def duals(self, c):
        return c[self.basic] @ self.Binv

    def run(self, c):
        tol = self.tol
        A, lb, ub = self.A, self.lb, self.ub
        opt_tol = tol.optimality * max(1.0, float(np.max(np.abs(c), initial=0.0)))
        fixed = ub - lb <= 0.0
        degenerate = 0
        bland = False
        for it in range(tol.max_iter):
            y = c[self.basic] @ self.Binv
            d = c - y @ A
            movable = ~self.is_basic & ~fixed
            cand = movable & ((~self.at_upper & (d < -opt_tol)) | (self.at_upper & (d > opt_tol)))
            if not cand.any():
                return "optimal", it
            idx = np.flatnonzero(cand)
            j = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            direction = -1.0 if self.at_upper[j] else 1.0
            w = self.Binv @ A[:, j]
            r, theta, hit_upper = self._ratio_test(w, direction, bland)
            flip = ub[j] - lb[j]
            if flip <= theta:
                self.x[self.basic] -= direction * flip * w
                self.x[j] = lb[j] if self.at_upper[j] else ub[j]
                self.at_upper[j] = not self.at_upper[j]
                theta = flip
            elif r < 0:
                return "unbounded", it
            else:
                self._pivot(j, r, w, direction, theta, hit_upper)
            if theta <= 1e-12:
                degenerate += 1
                if degenerate > tol.degenerate_limit:
                    bland = True
                    self.bland_used = True
            else:
                degenerate = 0
        raise NumericalBreakdown(f"simplex iteration limit {tol.max_iter} reached")

    def _ratio_test(self, w, direction, bland):
        piv = self.tol.pivot
        xb = self.x[self.basic]
        lbb = self.lb[self.basic]
        ubb = self.ub[self.basic]
        dw = direction * w
        theta = np.full(w.size, np.inf)
        dec = dw > piv
        inc = dw < -piv
        theta[dec] = np.maximum(xb[dec] - lbb[dec], 0.0) / dw[dec]
        with np.errstate(invalid="ignore"):
            theta[inc] = np.maximum(ubb[inc] - xb[inc], 0.0) / -dw[inc]
        best = float(np.min(theta, initial=np.inf))
        if not np.isfinite(best):
            return -1, np.inf, False
        ties = np.flatnonzero(theta <= best + 1e-12 * max(1.0, best))
        if bland:
            r = int(ties[np.argmin(self.basic[ties])])
        else:
            r = int(ties[np.argmax(np.abs(w[ties]))])
        return r, best, bool(inc[r])

    def _pivot(self, j, r, w, direction, theta, hit_upper):
        leave = self.basic[r]
        self.x[self.basic] -= direction * theta * w
        self.x[j] += direction * theta
        self.x[leave] = self.ub[leave] if hit_upper else self.lb[leave]
        self.at_upper[leave] = hit_upper
        self.at_upper[j] = False
        self.is_basic[leave] = False
        self.is_basic[j] = True
        self.basic[r] = j
        self._update_inverse(r, w)

    def _update_inverse(self, r, w):
        wr = w[r]
        if abs(wr) < self.tol.pivot:
            self.refactor()
            wr = (self.Binv @ self.A[:, self.basic[r]])[r]
            if abs(wr) < self.tol.pivot:
                raise NumericalBreakdown(f"pivot magnitude {abs(wr):.3g} below threshold")
            return
        row = self.Binv[r] / wr
        self.Binv -= np.outer(w, row)
        self.Binv[r] = row
        self.since_refactor += 1
        if self.since_refactor >= self.tol.refactor_every:
            self.refactor()

    def retire_artificials(self, first_art):
        """Fix artificials at zero and pivot basic ones out where possible."""
        self.ub[first_art:] = 0.0
        self.x[first_art:] = np.where(self.is_basic[first_art:], self.x[first_art:], 0.0)
        for r in range(self.basic.size):
            if self.basic[r] < first_art:
                continue
            row = self.Binv[r] @ self.A[:, :first_art]
            row[self.is_basic[:first_art]] = 0.0
            cand = np.flatnonzero(np.abs(row) > 1e-7)
            if cand.size == 0:
                continue  # redundant row; artificial stays basic, pinned at 0
            j = int(cand[np.argmax(np.abs(row[cand]))])
            w = self.Binv @ self.A[:, j]
            leave = self.basic[r]
            self.is_basic[leave] = False
            self.is_basic[j] = True
            self.basic[r] = j
            self.at_upper[leave] = False
            self._update_inverse(r, w)
        self.x[first_art:] = np.where(self.is_basic[first_art:], self.x[first_art:], 0.0)
        self.refactor()
        # basic artificials pinned at zero may carry round-off; clamp them
        mask = self.basic >= first_art
        self.x[self.basic[mask]] = 0.0
