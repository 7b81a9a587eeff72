"""The shelter capacity-expansion MILFP assembled from an :class:`Instance`.

Columns are created lazily from the instance data, so pruned variables never
exist.  Every row is tagged with the constraint family it belongs to; the
tags drive the structural audits in the tests.

Family tags
-----------
``A2``..``A11``
    operational constraints (capacity, expansion cap, single placement,
    duration link, demographics, presence, start window, non-periodic count,
    periodic count, one provision per periodic window)
``12a``..``12d``
    action constraints (minimum openings, critical mass, open-before-use,
    service-to-shelter link)
``link``
    ``pi[y,s] <= sum X[y,s,.,.]`` for new candidates, so critical mass is
    met by youth who are actually placed
``once``
    a request is served by at most one shelter in any period
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (DimensionMismatch, InfeasibleLambda, InfeasibleWindow,
                     MissingParameter, OutOfWindow)
from .fractional import AffineForm, FractionalModel
from .instance import CANDIDATE, REFERRAL
from .lp import LinearProgram
from .mip import BINARY, CONTINUOUS, INTEGER, MixedIntegerProgram

MODES = ("benefit_max", "cost_min", "profit_max", "ratio_max")
MODE_ALIASES = {"benefit": "benefit_max", "cost": "cost_min",
                "profit": "profit_max", "ratio": "ratio_max"}
ACTION_FAMILIES = ("12a", "12b", "12c", "12d")
FAMILIES = ("A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10", "A11") + ACTION_FAMILIES + ("link", "once")


def normalize_mode(mode):
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"unknown objective mode {mode!r}; choose from {', '.join(MODES)}")
    return mode


@dataclass(frozen=True)
class Var:
    kind: str
    youth: str | None = None
    shelter: str | None = None
    service: str | None = None
    time: int | None = None


class VariableIndex:
    """Bijection between variable keys and MIP columns."""

    def __init__(self):
        self._keys = []
        self._cols = {}

    def add(self, key):
        if key in self._cols:
            raise KeyError(f"duplicate variable {key}")
        self._cols[key] = len(self._keys)
        self._keys.append(key)
        return self._cols[key]

    def __len__(self):
        return len(self._keys)

    def __contains__(self, key):
        return key in self._cols

    def column(self, key):
        return self._cols[key]

    def get(self, key, default=None):
        return self._cols.get(key, default)

    def key(self, col):
        return self._keys[col]

    def keys(self):
        return list(self._keys)

    def columns_of(self, kind):
        return [c for c, k in enumerate(self._keys) if k.kind == kind]


@dataclass(frozen=True)
class ModelCounts:
    num_vars: int
    num_binaries: int
    num_constraints: int
    num_action_constraints: int
    num_x: int


@dataclass
class BuiltModel:
    instance: object
    mode: str
    lam: object
    status_quo_only: bool
    fractional: FractionalModel
    index: VariableIndex
    counts: ModelCounts
    families: dict
    row_family: list
    diagnostics: list = field(default_factory=list)

    @property
    def constraints(self):
        return self.fractional.constraints

    def program(self):
        """The single MIP solved for non-ratio modes."""
        fm = self.fractional
        b, c = fm.benefit, fm.cost
        if self.mode == "benefit_max":
            return fm.constraints.with_objective(b.coef, b.const, True)
        if self.mode == "cost_min":
            return fm.constraints.with_objective(c.coef, c.const, False)
        if self.mode == "profit_max":
            return fm.constraints.with_objective(b.coef - c.coef, b.const - c.const, True)
        raise ValueError("ratio_max is solved by Dinkelbach iteration, not a single program")


# -- service windows ----------------------------------------------------------

def service_span(req):
    """Periods in which the request may be served: ``[a, b + d]``."""
    return req.earliest, req.latest + req.duration


def periodic_windows(req, flexibility, horizon):
    """Window ``j`` is ``a + j*gap +/- k`` clipped to the span and horizon."""
    lo, hi = service_span(req)
    hi = min(hi, horizon - 1)
    out = []
    for j in range(req.frequency):
        centre = req.earliest + j * req.gap
        w = [t for t in range(centre - flexibility, centre + flexibility + 1) if lo <= t <= hi]
        out.append(w)
    return out


def youth_benefit(instance, y, t, i):
    """Benefit of serving request ``(y, i)`` at period ``t``.

    ``(M + P) / ((1 + t - a) * f)``; defined for ``a <= t <= b + d``.
    """
    youth = _youth(instance, y)
    req = youth.request(i)
    if req is None:
        raise OutOfWindow(f"youth {youth.id} does not request {i!r}")
    lo, hi = service_span(req)
    if not lo <= t <= hi:
        raise OutOfWindow(f"period {t} outside [{lo}, {hi}] for youth {youth.id}, service {i!r}")
    return instance.benefit.per_request / ((1 + t - req.earliest) * req.frequency)


def _youth(instance, y):
    if not isinstance(y, str):
        return y
    for yy in instance.youth:
        if yy.id == y:
            return yy
    raise KeyError(y)


def compatible(youth, shelter):
    """No attribute the youth has is excluded by the shelter."""
    return not any(e and not s for e, s in zip(youth.attributes, shelter.attributes))


# -- builder -------------------------------------------------------------------

class _Rows:
    def __init__(self):
        self.data, self.rows, self.cols = [], [], []
        self.senses, self.rhs, self.family = [], [], []

    def add(self, terms, sense, rhs, family):
        r = len(self.rhs)
        for col, val in terms:
            self.rows.append(r)
            self.cols.append(col)
            self.data.append(val)
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.family.append(family)

    def matrix(self, n):
        return sp.csr_matrix((self.data, (self.rows, self.cols)), shape=(len(self.rhs), n))


def normalize_lambda(instance, lam):
    """``int`` means one global minimum; a mapping gives per-borough minima."""
    cands = instance.candidates
    if isinstance(lam, dict):
        per = {}
        for b, v in lam.items():
            if b not in instance.boroughs:
                raise InfeasibleLambda(f"unknown borough {b!r}")
            avail = sum(1 for s in cands if s.borough == b)
            if int(v) < 0 or int(v) > avail:
                raise InfeasibleLambda(f"lambda[{b}]={v} but only {avail} candidate(s) there")
            per[b] = int(v)
        return per
    lam = int(lam)
    if lam < 0 or lam > len(cands):
        raise InfeasibleLambda(f"lambda={lam} but only {len(cands)} candidate shelter(s)")
    return lam


def lambda_total(lam):
    return sum(lam.values()) if isinstance(lam, dict) else lam


def build_model(instance, mode="ratio_max", lam=1, status_quo_only=False):
    """Assemble the MILFP; the returned model carries all four objectives."""
    mode = normalize_mode(mode)
    _check_parameters(instance)
    lam = normalize_lambda(instance, lam)
    if status_quo_only:
        lam = {b: 0 for b in lam} if isinstance(lam, dict) else 0
    T = instance.horizon
    services = {s.name: s for s in instance.services}
    shelters = instance.shelters
    n_serv = len(services)
    n_youth = len(instance.youth)
    idx = VariableIndex()
    lb, ub, kind = [], [], []
    diagnostics = []

    def new(key, lo, hi, k):
        idx.add(key)
        lb.append(lo)
        ub.append(hi)
        kind.append(k)

    # X, U, pi
    x_cols = defaultdict(list)          # (y, s, i) -> [(t, col)]
    for y in instance.youth:
        for req in y.requests:
            lo, hi = service_span(req)
            if hi > T - 1:
                raise InfeasibleWindow(
                    f"youth {y.id}, service {req.service!r}: b + d = {hi} lies beyond the horizon")
            if services[req.service].periodic:
                wins = periodic_windows(req, services[req.service].flexibility, T)
                empty = [j for j, w in enumerate(wins) if not w]
                if empty:
                    raise InfeasibleWindow(
                        f"youth {y.id}, service {req.service!r}: periodic window(s) {empty} are empty")
            for s in shelters:
                if not s.offers(req.service):
                    continue
                for t in range(max(y.arrival, 0), hi + 1):
                    new(Var("X", y.id, s.id, req.service, t), 0.0, 1.0, BINARY)
                    x_cols[(y.id, s.id, req.service)].append((t, len(idx) - 1))
    n_x = len(idx)
    for y in instance.youth:
        for req in y.requests:
            for s in shelters:
                if (y.id, s.id, req.service) in x_cols:
                    new(Var("U", y.id, s.id, req.service), 0.0, 1.0, CONTINUOUS)
    for y in instance.youth:
        for s in shelters:
            if any(Var("U", y.id, s.id, r.service) in idx for r in y.requests):
                new(Var("pi", y.id, s.id), 0.0, 1.0, BINARY)
    for s in instance.candidates:
        new(Var("nu", shelter=s.id), 0.0, 0.0 if status_quo_only else 1.0, BINARY)
    for s in shelters:
        if s.kind == REFERRAL:
            continue
        for i in services:
            if i not in s.capacity:
                continue
            for t in range(T):
                room = math.floor(s.max_capacity[i] - instance.capacity(s, i, t) + 1e-9)
                if room < 0:
                    raise MissingParameter(f"shelter {s.id}, service {i!r}: capacity exceeds its maximum")
                new(Var("E", shelter=s.id, service=i, time=t), 0.0,
                    0.0 if status_quo_only else float(room), INTEGER)

    rows = _Rows()
    col = idx.get

    # A2 capacity, A3 expansion cap
    load = defaultdict(list)
    for (yid, sid, i), lst in x_cols.items():
        for t, c in lst:
            load[(sid, i, t)].append(c)
    by_id = {s.id: s for s in shelters}
    for s in shelters:
        for i in services:
            if not s.offers(i):
                continue
            for t in range(T):
                cols = load.get((s.id, i, t))
                e = col(Var("E", shelter=s.id, service=i, time=t))
                cap = instance.capacity(s, i, t)
                if cols:
                    terms = [(c, 1.0) for c in cols]
                    if e is not None:
                        terms.append((e, -1.0))
                    rows.add(terms, "<", cap, "A2")
                if e is not None:
                    rows.add([(e, 1.0)], "<", s.max_capacity[i] - cap, "A3")

    for y in instance.youth:
        for req in y.requests:
            i = req.service
            a, b = req.earliest, req.latest
            lo, hi = service_span(req)
            serv = services[i]
            u_cols = []
            all_x = []
            for s in shelters:
                lst = x_cols.get((y.id, s.id, i))
                if not lst:
                    continue
                u = col(Var("U", y.id, s.id, i))
                u_cols.append(u)
                all_x.extend(lst)
                # A5
                rows.add([(c, 1.0) for _, c in lst] + [(u, -float(T))], "<", 0.0, "A5")
            # A4
            rows.add([(u, 1.0) for u in u_cols], "<", 1.0, "A4")
            # A7: nothing outside the service span, nor between periodic windows
            if serv.periodic:
                wins = periodic_windows(req, serv.flexibility, T)
                allowed = {t for w in wins for t in w}
            else:
                allowed = set(range(lo, hi + 1))
            outside = [(c, 1.0) for t, c in all_x if t not in allowed]
            if outside:
                rows.add(outside, "=", 0.0, "A7")
            # A8
            rows.add([(c, 1.0) for t, c in all_x if a <= t <= b], ">", 1.0, "A8")
            if serv.periodic:
                # A10 / A11
                rows.add([(c, 1.0) for t, c in all_x if any(t in w for w in wins)],
                         "=", req.frequency, "A10")
                for w in wins:
                    rows.add([(c, 1.0) for t, c in all_x if t in w], "<", 1.0, "A11")
            else:
                # A9
                rows.add([(c, 1.0) for t, c in all_x if t <= hi], "=", req.frequency, "A9")
            # at most one shelter per period for the same request
            per_t = defaultdict(list)
            for t, c in all_x:
                if t in allowed:
                    per_t[t].append(c)
            for t in sorted(per_t):
                if len(per_t[t]) > 1:
                    rows.add([(c, 1.0) for c in per_t[t]], "<", 1.0, "once")

    # A6 demographics
    for y in instance.youth:
        for s in shelters:
            if compatible(y, s):
                continue
            terms = [(c, 1.0) for r in y.requests for _, c in x_cols.get((y.id, s.id, r.service), ())]
            if terms:
                rows.add(terms, "=", 0.0, "A6")

    # 12a minimum openings
    cands = instance.candidates
    if cands:
        if isinstance(lam, dict):
            for b, v in sorted(lam.items()):
                terms = [(col(Var("nu", shelter=s.id)), 1.0) for s in cands if s.borough == b]
                if terms:
                    rows.add(terms, ">", v, "12a")
        else:
            rows.add([(col(Var("nu", shelter=s.id)), 1.0) for s in cands], ">", lam, "12a")
    # 12b critical mass, 12c open before use, link
    for s in cands:
        nu = col(Var("nu", shelter=s.id))
        pis = [col(Var("pi", y.id, s.id)) for y in instance.youth if Var("pi", y.id, s.id) in idx]
        rows.add([(p, 1.0) for p in pis] + [(nu, -float(s.critical_mass))], ">", 0.0, "12b")
        us = [col(Var("U", y.id, s.id, r.service)) for y in instance.youth for r in y.requests
              if Var("U", y.id, s.id, r.service) in idx]
        rows.add([(u, 1.0) for u in us] + [(nu, -float(n_serv * n_youth))], "<", 0.0, "12c")
        for y in instance.youth:
            p = col(Var("pi", y.id, s.id))
            if p is None:
                continue
            xs = [(c, -1.0) for r in y.requests for _, c in x_cols.get((y.id, s.id, r.service), ())]
            rows.add([(p, 1.0)] + xs, "<", 0.0, "link")
    # 12d service-to-shelter link
    for y in instance.youth:
        for s in shelters:
            p = col(Var("pi", y.id, s.id))
            if p is None:
                continue
            us = [col(Var("U", y.id, s.id, r.service)) for r in y.requests
                  if Var("U", y.id, s.id, r.service) in idx]
            rows.add([(u, 1.0) for u in us] + [(p, -float(n_serv))], "<", 0.0, "12d")

    n = len(idx)
    benefit = np.zeros(n)
    cost = np.zeros(n)
    for c in range(n):
        k = idx.key(c)
        if k.kind == "X":
            s = by_id[k.shelter]
            y = _youth(instance, k.youth)
            req = y.request(k.service)
            cost[c] = instance.assignment_cost(y, s, k.service)
            if s.kind != REFERRAL and req.earliest <= k.time <= req.latest + req.duration:
                benefit[c] = youth_benefit(instance, y, k.time, k.service)
        elif k.kind == "nu":
            s = by_id[k.shelter]
            benefit[c] = instance.partial_return(s)
            cost[c] = instance.opening_cost(s)
        elif k.kind == "E":
            s = by_id[k.shelter]
            cost[c] = s.expansion_cost[k.service][k.time]

    A = rows.matrix(n)
    lp = LinearProgram(np.zeros(n), A, np.array(rows.senses), np.array(rows.rhs),
                       np.array(lb), np.array(ub), True)
    mip = MixedIntegerProgram(lp, np.array(kind))
    fm = FractionalModel(mip, AffineForm(benefit), AffineForm(cost))

    families = defaultdict(int)
    for f in rows.family:
        families[f] += 1
    n_bin = int(np.sum(np.array(kind) == BINARY))
    n_action = sum(families[f] for f in ACTION_FAMILIES)
    counts = ModelCounts(n, n_bin, len(rows.rhs), n_action, n_x)
    built = BuiltModel(instance, mode, lam, bool(status_quo_only), fm, idx, counts,
                       dict(families), rows.family, diagnostics)
    problems = check_count_bounds(built)
    if problems:
        raise AssertionError("; ".join(problems))
    return built


def _check_parameters(instance):
    missing = []
    for s in instance.shelters:
        if s.kind == REFERRAL:
            continue
        for i in s.capacity:
            if i not in s.max_capacity:
                missing.append(f"mu[{s.id},{i}]")
            if i not in s.expansion_cost:
                missing.append(f"gamma[{s.id},{i}]")
        if s.kind == CANDIDATE and s.beds <= 0:
            missing.append(f"beds[{s.id}]")
    for s in instance.shelters:
        if s.borough not in instance.boroughs:
            missing.append(f"L[{s.borough}]")
    if missing:
        raise MissingParameter("missing parameter(s): " + ", ".join(missing))


def count_bounds(instance):
    """Upper bounds on variables, binaries and action constraints."""
    S = len(instance.shelters)
    I = len(instance.services)
    T = instance.horizon
    Y = len(instance.youth)
    new = len(instance.candidates)
    L = len(instance.boroughs)
    return {
        "num_vars": S * (I * (T * Y + Y + T) + Y) + new,
        "num_binaries": Y * S * (I * T + 1) + new,
        "num_action_constraints": 2 * new + L + Y * S,
        "num_x": Y * S * I * T,
    }


def check_count_bounds(built):
    bounds = count_bounds(built.instance)
    c = built.counts
    out = []
    for name in ("num_vars", "num_binaries", "num_action_constraints", "num_x"):
        if getattr(c, name) > bounds[name]:
            out.append(f"{name}={getattr(c, name)} exceeds the bound {bounds[name]}")
    return out


# -- plans -------------------------------------------------------------------

@dataclass
class AssignmentPlan:
    """A decoded solution in youth/shelter/service/time terms."""

    assignments: list          # (youth, shelter, service, t), sorted
    opened: tuple              # candidate ids with nu = 1
    expansion: dict            # (shelter, service, t) -> units, nonzero only
    utilization_share: dict    # (youth, shelter, service) -> U
    placed: dict               # (youth, shelter) -> pi, nonzero only
    referral_ids: frozenset = frozenset()

    @property
    def referrals(self):
        return [a for a in self.assignments if a[1] in self.referral_ids]

    @property
    def in_house(self):
        return [a for a in self.assignments if a[1] not in self.referral_ids]

    def youth_counts(self):
        """Distinct youth served per shelter."""
        seen = defaultdict(set)
        for y, s, _, _ in self.assignments:
            seen[s].add(y)
        return {s: len(v) for s, v in sorted(seen.items())}

    def load(self):
        out = defaultdict(int)
        for _, s, i, t in self.assignments:
            out[(s, i, t)] += 1
        return dict(out)


def decode(built, x, tol=1e-6):
    x = np.asarray(x, dtype=float)
    if x.size != len(built.index):
        raise DimensionMismatch(f"vector has {x.size} entries, model has {len(built.index)}")
    assignments, opened, expansion, share, placed = [], [], {}, {}, {}
    for c in range(x.size):
        k = built.index.key(c)
        v = x[c]
        if k.kind == "X":
            if v > 0.5:
                assignments.append((k.youth, k.shelter, k.service, k.time))
        elif k.kind == "nu":
            if v > 0.5:
                opened.append(k.shelter)
        elif k.kind == "E":
            units = int(round(v))
            if units:
                expansion[(k.shelter, k.service, k.time)] = units
        elif k.kind == "U":
            if abs(v) > tol:
                share[(k.youth, k.shelter, k.service)] = float(v)
        elif k.kind == "pi":
            if v > 0.5:
                placed[(k.youth, k.shelter)] = 1
    refs = frozenset(s.id for s in built.instance.shelters if s.kind == REFERRAL)
    return AssignmentPlan(sorted(assignments), tuple(sorted(opened)), expansion, share, placed, refs)


def encode(built, plan):
    x = np.zeros(len(built.index))
    col = built.index.column
    for y, s, i, t in plan.assignments:
        x[col(Var("X", y, s, i, t))] = 1.0
    for s in plan.opened:
        x[col(Var("nu", shelter=s))] = 1.0
    for (s, i, t), units in plan.expansion.items():
        x[col(Var("E", shelter=s, service=i, time=t))] = units
    for (y, s, i), v in plan.utilization_share.items():
        x[col(Var("U", y, s, i))] = v
    for (y, s) in plan.placed:
        x[col(Var("pi", y, s))] = 1.0
    return x


def complete_plan(built, assignments, opened=None):
    """Smallest consistent U, pi, E and nu for a given set of assignments.

    Returns the encoded vector; feasibility is left to the caller to check.
    """
    inst = built.instance
    T = inst.horizon
    by_id = {s.id: s for s in inst.shelters}
    counts = defaultdict(int)
    load = defaultdict(int)
    users = defaultdict(set)
    for y, s, i, t in assignments:
        counts[(y, s, i)] += 1
        load[(s, i, t)] += 1
        users[s].add(y)
    share = {k: v / T for k, v in counts.items()}
    placed = {(y, s): 1 for s, ys in users.items() for y in ys}
    expansion = {}
    for (s, i, t), n in load.items():
        sh = by_id[s]
        if sh.kind == REFERRAL:
            continue
        need = math.ceil(n - inst.capacity(sh, i, t) - 1e-9)
        if need > 0:
            expansion[(s, i, t)] = need
    if opened is None:
        opened = tuple(sorted(s for s in users if by_id[s].kind == CANDIDATE))
    refs = frozenset(s.id for s in inst.shelters if s.kind == REFERRAL)
    plan = AssignmentPlan(sorted(assignments), tuple(sorted(opened)), expansion, share, placed, refs)
    return encode(built, plan)
