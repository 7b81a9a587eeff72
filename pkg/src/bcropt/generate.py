"""Seeded synthetic instances.

All draws go through ``numpy.random.Generator.integers`` so a seed yields the
same instance on every platform.
"""

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigInvalid
from .instance import (BOROUGH_MULTIPLIERS, CANDIDATE, REFERRAL, STATUS_QUO,
                       BenefitParams, CostParams, Instance, Service, ServiceRequest,
                       ShelterProfile, YouthProfile)

# name, periodic, flexibility (weeks)
SERVICE_CATALOG = (
    ("beds", False, 0),
    ("mental_health", True, 1),
    ("physical_health", True, 1),
    ("substance_abuse", True, 1),
    ("crisis_response", False, 0),
    ("long_term_housing", False, 0),
    ("legal_assistance", True, 0),
    ("service_coordination", False, 0),
    ("practical_assistance", False, 0),
    ("financial_assistance", True, 0),
    ("life_skills", True, 1),
    ("employment_assistance", True, 1),
    ("education_assistance", True, 1),
    ("childcare_parenting", False, 0),
)

# weekly cost of one extra unit of each service
EXPANSION_COST = {
    "beds": 1050.0,
    "mental_health": 300.0,
    "physical_health": 300.0,
    "substance_abuse": 300.0,
    "crisis_response": 450.0,
    "long_term_housing": 1050.0,
    "legal_assistance": 400.0,
    "service_coordination": 200.0,
    "practical_assistance": 150.0,
    "financial_assistance": 150.0,
    "life_skills": 150.0,
    "employment_assistance": 200.0,
    "education_assistance": 200.0,
    "childcare_parenting": 350.0,
}

# average beds per shelter for the eight organization archetypes
ORGANIZATION_BEDS = (6, 8, 8, 20, 9, 12, 20, 12)

ATTRIBUTES = ("female", "male", "gender_expansive", "parenting", "over_21")


@dataclass(frozen=True)
class GeneratorConfig:
    n_youth: int = 20
    n_services: int = 13
    horizon: int = 26
    n_status_quo: int = 8
    n_candidates: int = 10
    candidate_policy: str = "fixed"
    baseline_youth: int = 500
    n_referral: int = 1
    extra_services: tuple = (1, 3)
    start_slack: tuple = (0, 2)
    stay: tuple = (1, 4)
    service_capacity: tuple = (2, 6)
    expansion_headroom: float = 0.5
    capacity_scale: float = 1.0
    critical_mass: int = 2
    delta: float = 0.1
    rho: float = 4.0
    bed_cost: float = 10000.0
    assignment_in_house: float = 1.0
    assignment_referral: float = 20.0
    medicaid_inflation: float = 1.0

    def __post_init__(self):
        problems = []
        if self.n_youth < 1:
            problems.append("n_youth")
        if not 1 <= self.n_services <= len(SERVICE_CATALOG):
            problems.append("n_services")
        if self.horizon < 2:
            problems.append("horizon")
        if self.n_status_quo < 0:
            problems.append("n_status_quo")
        if self.n_candidates < 0:
            problems.append("n_candidates")
        if self.candidate_policy not in ("fixed", "scaled"):
            problems.append("candidate_policy")
        if self.n_referral < 1:
            problems.append("n_referral")
        for name in ("extra_services", "start_slack", "stay", "service_capacity"):
            lo_hi = getattr(self, name)
            if len(lo_hi) != 2 or lo_hi[0] > lo_hi[1] or lo_hi[0] < 0:
                problems.append(name)
        if not 0.0 < self.delta <= 1.0:
            problems.append("delta")
        if self.rho < 0:
            problems.append("rho")
        if self.critical_mass < 0:
            problems.append("critical_mass")
        if not self.capacity_scale > 0:
            problems.append("capacity_scale")
        if self.expansion_headroom < 0:
            problems.append("expansion_headroom")
        if problems:
            raise ConfigInvalid("invalid generator setting(s): " + ", ".join(problems))

    @classmethod
    def from_mapping(cls, data):
        """Build from a plain mapping, rejecting unknown keys by name."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigInvalid(f"unknown generator key(s): {', '.join(unknown)}")
        kwargs = {}
        for k, v in data.items():
            kwargs[k] = tuple(v) if isinstance(v, list) else v
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc

    @property
    def candidate_count(self):
        if self.candidate_policy == "scaled":
            return int(round(self.n_candidates * self.n_youth / self.baseline_youth))
        return self.n_candidates


def _between(rng, lo_hi):
    return int(rng.integers(lo_hi[0], lo_hi[1] + 1))


def archetype_beds(rng, organization):
    """Bed count centred on the archetype's average (symmetric integer range)."""
    mean = ORGANIZATION_BEDS[organization]
    half = mean // 2
    return int(rng.integers(mean - half, mean + half + 1))


def generate_instance(cfg, seed):
    """Draw an instance; identical ``(cfg, seed)`` gives an identical instance."""
    if not isinstance(cfg, GeneratorConfig):
        raise ConfigInvalid("cfg must be a GeneratorConfig")
    rng = np.random.default_rng(int(seed))
    T = cfg.horizon
    catalog = SERVICE_CATALOG[: cfg.n_services]
    services = tuple(Service(n, p, k) for n, p, k in catalog)
    names = [s.name for s in services]
    boroughs = dict(BOROUGH_MULTIPLIERS)
    borough_names = list(boroughs)

    youth = tuple(_youth(rng, f"y{k:03d}", services, cfg) for k in range(cfg.n_youth))

    shelters = []
    for k in range(cfg.n_status_quo):
        org = k % len(ORGANIZATION_BEDS)
        shelters.append(_shelter(rng, f"sq{k:02d}", STATUS_QUO, org,
                                 borough_names[int(rng.integers(len(borough_names)))],
                                 names, cfg))
    for k in range(cfg.candidate_count):
        org = int(rng.integers(len(ORGANIZATION_BEDS)))
        shelters.append(_shelter(rng, f"new{k:02d}", CANDIDATE, org,
                                 borough_names[int(rng.integers(len(borough_names)))],
                                 names, cfg))
    for k in range(cfg.n_referral):
        shelters.append(ShelterProfile(f"ref{k:02d}", REFERRAL,
                                       borough_names[int(rng.integers(len(borough_names)))],
                                       (1,) * len(ATTRIBUTES)))

    inst = Instance(
        horizon=T, services=services, attributes=ATTRIBUTES, boroughs=boroughs,
        youth=youth, shelters=tuple(shelters),
        benefit=BenefitParams(rho=cfg.rho, medicaid_inflation=cfg.medicaid_inflation),
        cost=CostParams(cfg.bed_cost, cfg.assignment_in_house, cfg.assignment_referral),
        delta=cfg.delta, seed=int(seed))
    return inst.validate()


def _youth(rng, yid, services, cfg):
    T = cfg.horizon
    gender = int(rng.integers(3))
    attrs = [0, 0, 0, int(rng.integers(10) == 0), int(rng.integers(10) < 3)]
    attrs[gender] = 1
    arrival = int(rng.integers(0, max(1, T // 2)))
    others = list(range(1, len(services)))
    n_extra = min(_between(rng, cfg.extra_services), len(others))
    picked = sorted(int(v) for v in rng.choice(others, size=n_extra, replace=False)) if n_extra else []
    requests = []
    for idx in [0] + picked:
        req = _request(rng, services[idx], arrival, cfg)
        if req is not None:
            requests.append(req)
    return YouthProfile(yid, arrival, tuple(attrs), tuple(requests))


def _request(rng, service, arrival, cfg):
    T = cfg.horizon
    earliest = arrival + int(rng.integers(0, 2))
    if earliest > T - 1:
        earliest = arrival
    latest = min(earliest + _between(rng, cfg.start_slack), T - 1)
    duration = min(_between(rng, cfg.stay), T - 1 - latest)
    span = latest + duration - earliest + 1
    if service.name == "beds":
        # a bed every week of the stay
        return ServiceRequest(service.name, earliest, latest, duration, max(1, duration))
    if not service.periodic:
        freq = min(int(rng.integers(1, 3)), span)
        return ServiceRequest(service.name, earliest, latest, duration, freq)
    k = service.flexibility
    gap = int(rng.integers(2 * k + 1, 2 * k + 3))
    # windows centred on earliest + j*gap must start inside the service span
    max_freq = 1 + max(0, (latest + duration - earliest - 0) // gap)
    freq = min(int(rng.integers(1, 4)), max_freq)
    return ServiceRequest(service.name, earliest, latest, duration, freq, gap)


def _shelter(rng, sid, kind, org, borough, names, cfg):
    T = cfg.horizon
    beds = max(1, int(round(cfg.capacity_scale * archetype_beds(rng, org))))
    offered = ["beds"] + [n for n in names[1:] if rng.integers(2) == 1]
    capacity, max_capacity, gamma = {}, {}, {}
    for name in offered:
        cap = beds if name == "beds" else _between(rng, cfg.service_capacity)
        capacity[name] = (cap,) * T
        max_capacity[name] = cap + int(math.ceil(cfg.expansion_headroom * cap))
        gamma[name] = (EXPANSION_COST[name],) * T
    gender = [int(rng.integers(4) > 0) for _ in range(3)]
    if not any(gender):
        gender[int(rng.integers(3))] = 1
    attrs = tuple(gender + [int(rng.integers(2)), int(rng.integers(2))])
    return ShelterProfile(sid, kind, borough, attrs, capacity, max_capacity, gamma,
                          beds, cfg.critical_mass if kind == CANDIDATE else 0, org)


def reassign_boroughs(instance, variant):
    """Copy of ``instance`` with candidate boroughs re-drawn uniformly.

    Only opening costs change; ``variant`` seeds the draw.
    """
    rng = np.random.default_rng(int(variant))
    names = sorted(instance.boroughs)
    shelters = tuple(
        replace(s, borough=names[int(rng.integers(len(names)))]) if s.kind == CANDIDATE else s
        for s in instance.shelters)
    return replace(instance, shelters=shelters)
