"""Small hand-built instances and the standard generator settings."""

from .generate import GeneratorConfig, generate_instance
from .instance import (BOROUGH_MULTIPLIERS, CANDIDATE, REFERRAL, STATUS_QUO,
                       BenefitParams, CostParams, Instance, Service, ServiceRequest,
                       ShelterProfile, YouthProfile)

TOY_HORIZON = 4


def toy_instance(n_candidates=1, critical_mass=1, rho=4.0, delta=0.1):
    """Two youth, one status-quo shelter, one referral, ``n_candidates`` new.

    Youth ``y0`` requests beds and weekly counselling every second week;
    youth ``y1`` only needs a bed and is excluded by the status-quo shelter.
    Built so that every constraint family appears at least once.
    """
    T = TOY_HORIZON
    services = (Service("beds"), Service("counseling", periodic=True, flexibility=0))
    attrs = ("female", "male")
    youth = (
        YouthProfile("y0", 0, (1, 0), (
            ServiceRequest("beds", 0, 1, 1, 2),
            ServiceRequest("counseling", 1, 1, 2, 2, gap=2),
        )),
        YouthProfile("y1", 1, (0, 1), (
            ServiceRequest("beds", 1, 2, 1, 1),
        )),
    )
    shelters = [
        ShelterProfile("sq0", STATUS_QUO, "Queens", (1, 0),
                       capacity={"beds": (10,) * T, "counseling": (5,) * T},
                       max_capacity={"beds": 12, "counseling": 6},
                       expansion_cost={"beds": (1050.0,) * T, "counseling": (300.0,) * T},
                       beds=10),
    ]
    for k in range(n_candidates):
        shelters.append(ShelterProfile(
            f"new{k}", CANDIDATE, "Queens", (1, 1),
            capacity={"beds": (2 + k,) * T},
            max_capacity={"beds": 3 + k},
            expansion_cost={"beds": (1050.0,) * T},
            beds=2 + k, critical_mass=critical_mass, organization=k))
    shelters.append(ShelterProfile("ref0", REFERRAL, "Queens", (1, 1)))
    inst = Instance(
        horizon=T, services=services, attributes=attrs,
        boroughs={"Queens": BOROUGH_MULTIPLIERS["Queens"]},
        youth=youth, shelters=tuple(shelters),
        benefit=BenefitParams(rho=rho), cost=CostParams(), delta=delta, seed=None)
    return inst.validate()


def crowded_toy(rho=4.0):
    """Two one-bed candidates and three youth the status-quo shelter turns away.

    Candidates cannot expand, so every candidate is needed to serve everyone.
    """
    base = toy_instance(n_candidates=2, rho=rho)
    T = TOY_HORIZON
    extra = tuple(YouthProfile(f"y{k}", 1, (0, 1), (ServiceRequest("beds", 1, 1, 1, 1),))
                  for k in (2, 3))
    shelters = []
    for s in base.shelters:
        if s.kind == CANDIDATE:
            s = ShelterProfile(s.id, CANDIDATE, s.borough, s.attributes,
                               capacity={"beds": (1,) * T}, max_capacity={"beds": 1},
                               expansion_cost={"beds": (1050.0,) * T}, beds=1,
                               critical_mass=1, organization=s.organization)
        shelters.append(s)
    inst = Instance(
        horizon=T, services=base.services, attributes=base.attributes, boroughs=base.boroughs,
        youth=base.youth + extra, shelters=tuple(shelters), benefit=base.benefit,
        cost=base.cost, delta=base.delta, seed=None)
    return inst.validate()


# 40 youth, 10 candidates over five boroughs, 12 weeks, 6 services.  Beds are
# scaled by 40/500 so shelters are as crowded as with the full population.
STUDY = GeneratorConfig(
    n_youth=40, n_services=6, horizon=12, n_status_quo=8, n_candidates=10,
    n_referral=1, extra_services=(1, 2), start_slack=(0, 1), stay=(1, 3),
    service_capacity=(1, 3), critical_mass=2, capacity_scale=0.08,
    expansion_headroom=0.0)

# the scalability run: 100 youth, 10 candidates, 26 weeks
DESK_SCALE = GeneratorConfig(
    n_youth=100, n_services=13, horizon=26, n_status_quo=8, n_candidates=10)

# random tiny instances for exhaustive cross-checks
TINY = GeneratorConfig(
    n_youth=3, n_services=2, horizon=5, n_status_quo=1, n_candidates=2,
    n_referral=1, extra_services=(0, 1), start_slack=(0, 1), stay=(0, 1),
    service_capacity=(1, 2), critical_mass=1)


def study_instance(seed):
    return generate_instance(STUDY, seed)
