"""Exhaustive and random plan generators that bypass the MIP builder.

These work from the instance data alone: a plan is a choice of
``(shelter, period)`` provisions for every requested service, and the
remaining variables (expansion units, openings, placement flags) follow
from it.  The ratio oracle enumerates every such plan of a tiny instance
together with every admissible set of openings; the cheapest expansion is
always the best one for the ratio, so it is not enumerated.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationTooLarge
from .instance import CANDIDATE, REFERRAL


def _fits(youth, shelter):
    for has, accepts in zip(youth.attributes, shelter.attributes):
        if has and not accepts:
            return False
    return True


def _windows(req, flex, horizon):
    lo, hi = req.earliest, min(req.latest + req.duration, horizon - 1)
    return [[t for t in range(req.earliest + j * req.gap - flex, req.earliest + j * req.gap + flex + 1)
             if lo <= t <= hi] for j in range(req.frequency)]


def request_options(instance, youth, req, shelters=None):
    """Every admissible provision pattern for one request.

    Each option is a tuple of ``(shelter_id, t)`` pairs, at most one per
    period, all inside the service span, at least one starting in
    ``[a, b]``.
    """
    service = instance.service(req.service)
    pool = [s.id for s in (shelters or instance.shelters)
            if s.offers(req.service) and _fits(youth, s)]
    a, b = req.earliest, req.latest
    hi = min(req.latest + req.duration, instance.horizon - 1)
    if service.periodic:
        wins = _windows(req, service.flexibility, instance.horizon)
        flat = [t for w in wins for t in w]
        if len(flat) != len(set(flat)):
            raise ValueError("overlapping periodic windows are not supported by the oracle")
        time_sets = itertools.product(*wins)
    else:
        time_sets = itertools.combinations(range(a, hi + 1), req.frequency)
    out = []
    for times in time_sets:
        if not any(a <= t <= b for t in times):
            continue
        for where in itertools.product(pool, repeat=len(times)):
            out.append(tuple(zip(where, times)))
    return out


@dataclass
class OracleResult:
    ratio: float
    assignments: list
    opened: tuple
    benefit: float
    cost: float
    points: int


def _benefit(instance, req, t):
    return instance.benefit.per_request / ((1 + t - req.earliest) * req.frequency)


def ratio_oracle(instance, lam=1, status_quo_only=False, cap=300_000):
    """Best ratio over all feasible integer plans, by enumeration."""
    by_id = {s.id: s for s in instance.shelters}
    cands = [s for s in instance.shelters if s.kind == CANDIDATE]
    cand_pos = {s.id: k for k, s in enumerate(cands)}
    cells = {}
    for s in instance.shelters:
        if s.kind == REFERRAL:
            continue
        for i in s.capacity:
            for t in range(instance.horizon):
                cells[(s.id, i, t)] = len(cells)
    pairs = []
    for yk, y in enumerate(instance.youth):
        for req in y.requests:
            opts = request_options(instance, y, req)
            pairs.append((yk, y, req, opts))
    total = math.prod(len(p[3]) for p in pairs)
    if total > cap:
        raise EnumerationTooLarge(f"{total} plans exceed the cap {cap}")

    n_cells, n_cand = len(cells), len(cands)
    ben = np.zeros(1)
    cst = np.zeros(1)
    load = np.zeros((1, n_cells), dtype=np.int16)
    users = np.zeros((1, max(n_cand, 1)), dtype=np.int64)
    choice = np.zeros((1, 0), dtype=np.int32)
    for yk, y, req, opts in pairs:
        k = len(opts)
        ob = np.zeros(k)
        oc = np.zeros(k)
        ol = np.zeros((k, n_cells), dtype=np.int16)
        ou = np.zeros((k, max(n_cand, 1)), dtype=np.int64)
        for j, opt in enumerate(opts):
            for sid, t in opt:
                s = by_id[sid]
                if s.kind == REFERRAL:
                    oc[j] += instance.cost.assignment_referral
                    continue
                oc[j] += instance.cost.assignment_in_house
                ob[j] += _benefit(instance, req, t)
                ol[j, cells[(sid, req.service, t)]] += 1
                if sid in cand_pos:
                    ou[j, cand_pos[sid]] |= 1 << yk
        n = ben.size
        ben = (ben[:, None] + ob[None, :]).ravel()
        cst = (cst[:, None] + oc[None, :]).ravel()
        load = (load[:, None, :] + ol[None, :, :]).reshape(n * k, n_cells)
        users = (users[:, None, :] | ou[None, :, :]).reshape(n * k, -1)
        choice = np.concatenate([np.repeat(choice, k, axis=0),
                                 np.tile(np.arange(k, dtype=np.int32), n)[:, None]], axis=1)

    cap_vec = np.zeros(n_cells)
    room = np.zeros(n_cells)
    gamma = np.zeros(n_cells)
    for (sid, i, t), c in cells.items():
        s = by_id[sid]
        cap_vec[c] = instance.capacity(s, i, t)
        room[c] = 0.0 if status_quo_only else math.floor(s.max_capacity[i] - cap_vec[c] + 1e-9)
        gamma[c] = s.expansion_cost[i][t]
    need = np.maximum(0.0, np.ceil(load - cap_vec[None, :] - 1e-9))
    ok = np.all(need <= room[None, :], axis=1)
    ecost = need @ gamma

    counts = np.zeros((users.shape[0], n_cand), dtype=np.int64)
    for c in range(n_cand):
        counts[:, c] = [bin(int(v)).count("1") for v in users[:, c]]

    best = None
    lam_total = lam if not isinstance(lam, dict) else None
    for mask in itertools.product((0, 1), repeat=n_cand):
        if status_quo_only and any(mask):
            continue
        if isinstance(lam, dict):
            if any(sum(m for m, s in zip(mask, cands) if s.borough == b) < v for b, v in lam.items()):
                continue
        elif not status_quo_only and sum(mask) < lam_total:
            continue
        feas = ok.copy()
        add_b = add_c = 0.0
        for c, (m, s) in enumerate(zip(mask, cands)):
            if m:
                feas &= counts[:, c] >= s.critical_mass
                add_b += instance.partial_return(s)
                add_c += instance.opening_cost(s)
            else:
                feas &= counts[:, c] == 0
        if not feas.any():
            continue
        q = np.where(feas, (ben + add_b) / (cst + ecost + add_c), -np.inf)
        j = int(np.argmax(q))
        if best is None or q[j] > best[0]:
            best = (float(q[j]), j, mask, float(ben[j] + add_b), float(cst[j] + ecost[j] + add_c))
    if best is None:
        return None
    q, j, mask, b, c = best
    assignments = []
    for (yk, y, req, opts), pick in zip(pairs, choice[j]):
        for sid, t in opts[pick]:
            assignments.append((y.id, sid, req.service, t))
    opened = tuple(sorted(s.id for m, s in zip(mask, cands) if m))
    return OracleResult(q, sorted(assignments), opened, b, c, int(ben.size))


def sample_plan(instance, rng, lam=1, max_tries=200):
    """A random feasible plan as ``(assignments, opened)``.

    Openings are drawn first, then each provision goes to a random shelter
    with room left; candidates that end up below critical mass are closed
    and their youth referred when the opening minimum allows it.
    """
    by_id = {s.id: s for s in instance.shelters}
    cands = [s for s in instance.shelters if s.kind == CANDIDATE]
    refs = [s for s in instance.shelters if s.kind == REFERRAL]
    lam_total = sum(lam.values()) if isinstance(lam, dict) else int(lam)
    for _ in range(max_tries):
        n_open = int(rng.integers(lam_total, len(cands) + 1))
        pick = rng.permutation(len(cands))[:n_open]
        opened = {cands[k].id for k in pick}
        if isinstance(lam, dict) and any(
                sum(1 for s in cands if s.id in opened and s.borough == b) < v for b, v in lam.items()):
            continue
        active = [s for s in instance.shelters if s.kind != CANDIDATE or s.id in opened]
        limit = {}
        for s in active:
            if s.kind == REFERRAL:
                continue
            for i in s.capacity:
                for t in range(instance.horizon):
                    c = instance.capacity(s, i, t)
                    limit[(s.id, i, t)] = math.floor(c + math.floor(s.max_capacity[i] - c + 1e-9) + 1e-9)
        load = {}
        assignments = []
        for y in instance.youth:
            for req in y.requests:
                assignments.extend(_sample_request(instance, y, req, active, limit, load, rng))
        users = {}
        for yid, sid, _, _ in assignments:
            users.setdefault(sid, set()).add(yid)
        short = [sid for sid in opened if len(users.get(sid, ())) < by_id[sid].critical_mass]
        if short:
            if len(opened) - len(short) < lam_total:
                continue
            ref = refs[0].id
            assignments = [(y, ref if s in short else s, i, t) for y, s, i, t in assignments]
            opened -= set(short)
            if isinstance(lam, dict) and any(
                    sum(1 for s in cands if s.id in opened and s.borough == b) < v for b, v in lam.items()):
                continue
        return sorted(assignments), tuple(sorted(opened))
    raise RuntimeError("could not draw a feasible plan")


def _sample_request(instance, y, req, active, limit, load, rng):
    service = instance.service(req.service)
    a, b = req.earliest, req.latest
    hi = min(req.latest + req.duration, instance.horizon - 1)
    if service.periodic:
        wins = _windows(req, service.flexibility, instance.horizon)
        while True:
            times = [w[int(rng.integers(len(w)))] for w in wins]
            if any(a <= t <= b for t in times):
                break
    else:
        span = list(range(a, hi + 1))
        while True:
            times = sorted(int(v) for v in rng.choice(span, size=req.frequency, replace=False))
            if any(a <= t <= b for t in times):
                break
    pool = [s for s in active if s.offers(req.service) and _fits(y, s)]
    out = []
    for t in times:
        order = rng.permutation(len(pool))
        for k in order:
            s = pool[k]
            if s.kind == REFERRAL:
                break
            key = (s.id, req.service, t)
            if load.get(key, 0) < limit[key]:
                break
        load[(s.id, req.service, t)] = load.get((s.id, req.service, t), 0) + 1
        out.append((y.id, s.id, req.service, t))
    return out
