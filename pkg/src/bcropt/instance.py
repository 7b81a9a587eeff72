"""Problem data for the shelter capacity-expansion model, plus file I/O.

Times are 0-based weekly periods ``0 .. horizon-1``.  Capacities stored on a
status-quo shelter are its full capacities; :meth:`Instance.capacity`
applies the free-capacity fraction ``delta`` when the model reads them.
"""

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import InstanceValidationError, NotACandidate, SchemaVersionMismatch

SCHEMA_NAME = "bcropt.instance"
SCHEMA_VERSION = 1

STATUS_QUO, CANDIDATE, REFERRAL = "status_quo", "new_candidate", "referral"
SHELTER_KINDS = (STATUS_QUO, CANDIDATE, REFERRAL)

# real-estate cost multipliers relative to Queens
BOROUGH_MULTIPLIERS = {
    "Manhattan": 1.85,
    "Brooklyn": 1.38,
    "Queens": 1.0,
    "Staten Island": 0.830,
    "Bronx": 0.789,
}


@dataclass(frozen=True)
class Service:
    name: str
    periodic: bool = False
    flexibility: int = 0


@dataclass(frozen=True)
class ServiceRequest:
    service: str
    earliest: int
    latest: int
    duration: int
    frequency: int
    gap: int | None = None


@dataclass(frozen=True)
class YouthProfile:
    id: str
    arrival: int
    attributes: tuple
    requests: tuple

    def request(self, service):
        for r in self.requests:
            if r.service == service:
                return r
        return None


@dataclass(frozen=True)
class ShelterProfile:
    id: str
    kind: str
    borough: str
    attributes: tuple
    capacity: dict = field(default_factory=dict)
    max_capacity: dict = field(default_factory=dict)
    expansion_cost: dict = field(default_factory=dict)
    beds: int = 0
    critical_mass: int = 0
    organization: int | None = None

    def offers(self, service):
        return self.kind == REFERRAL or service in self.capacity


@dataclass(frozen=True)
class BenefitParams:
    medicaid_savings: float = 4763.0
    labor_productivity: float = 194732.0
    rho: float = 4.0
    medicaid_inflation: float = 1.0

    @property
    def per_request(self):
        """Medicaid savings plus labor productivity for one fulfilled request."""
        return self.medicaid_savings * self.medicaid_inflation + self.labor_productivity


@dataclass(frozen=True)
class CostParams:
    bed_cost: float = 10000.0
    assignment_in_house: float = 1.0
    assignment_referral: float = 20.0


@dataclass(frozen=True)
class Instance:
    horizon: int
    services: tuple
    attributes: tuple
    boroughs: dict
    youth: tuple
    shelters: tuple
    benefit: BenefitParams = BenefitParams()
    cost: CostParams = CostParams()
    delta: float = 0.1
    seed: int | None = None

    # -- lookups -----------------------------------------------------------
    @property
    def service_names(self):
        return tuple(s.name for s in self.services)

    def service(self, name):
        for s in self.services:
            if s.name == name:
                return s
        raise KeyError(name)

    def shelters_of(self, kind):
        return tuple(s for s in self.shelters if s.kind == kind)

    @property
    def candidates(self):
        return self.shelters_of(CANDIDATE)

    def capacity(self, shelter, service, t):
        """Capacity ``c[s, i, t]`` available to the model."""
        if shelter.kind == REFERRAL:
            return float(len(self.youth))
        base = shelter.capacity.get(service)
        if base is None:
            return 0.0
        value = float(base[t])
        return self.delta * value if shelter.kind == STATUS_QUO else value

    def opening_cost(self, shelter):
        return opening_cost(shelter, self.cost, self.boroughs[shelter.borough])

    def partial_return(self, shelter):
        return partial_return(self.opening_cost(shelter), self.benefit.rho)

    def assignment_cost(self, youth, shelter, service):
        if shelter.kind == REFERRAL:
            return self.cost.assignment_referral
        return self.cost.assignment_in_house

    def with_rho(self, rho):
        return replace(self, benefit=replace(self.benefit, rho=float(rho)))

    def with_delta(self, delta):
        return replace(self, delta=float(delta))

    # -- validation ----------------------------------------------------------
    def validate(self):
        errors = []
        T = self.horizon
        if T < 1:
            errors.append("horizon must be at least 1")
        if not 0.0 < self.delta <= 1.0:
            errors.append(f"delta={self.delta} must lie in (0, 1]")
        if self.benefit.rho < 0:
            errors.append(f"rho={self.benefit.rho} must be nonnegative")
        for b, mult in self.boroughs.items():
            if not mult > 0:
                errors.append(f"borough {b!r} has nonpositive cost multiplier {mult}")
        names = set(self.service_names)
        if len(names) != len(self.services):
            errors.append("duplicate service names")
        n_attr = len(self.attributes)
        ids = [y.id for y in self.youth]
        if len(set(ids)) != len(ids):
            errors.append("duplicate youth ids")
        for y in self.youth:
            if len(y.attributes) != n_attr:
                errors.append(f"youth {y.id}: {len(y.attributes)} attributes, expected {n_attr}")
            seen = set()
            for r in y.requests:
                where = f"youth {y.id}, service {r.service!r}"
                if r.service not in names:
                    errors.append(f"{where}: service does not exist")
                    continue
                if r.service in seen:
                    errors.append(f"{where}: requested twice")
                seen.add(r.service)
                if not y.arrival <= r.earliest <= r.latest:
                    errors.append(f"{where}: needs arrival <= earliest <= latest "
                                  f"({y.arrival}, {r.earliest}, {r.latest})")
                if r.duration < 0 or r.latest + r.duration > T:
                    errors.append(f"{where}: latest + duration exceeds the horizon {T}")
                if r.frequency < 1:
                    errors.append(f"{where}: frequency must be >= 1")
                if self.service(r.service).periodic and (r.gap is None or r.gap < 1):
                    errors.append(f"{where}: periodic service needs a gap >= 1")
        sids = [s.id for s in self.shelters]
        if len(set(sids)) != len(sids):
            errors.append("duplicate shelter ids")
        if not self.shelters_of(REFERRAL):
            errors.append("at least one referral organization is required")
        for s in self.shelters:
            where = f"shelter {s.id}"
            if s.kind not in SHELTER_KINDS:
                errors.append(f"{where}: unknown kind {s.kind!r}")
            if s.borough not in self.boroughs:
                errors.append(f"{where}: unknown borough {s.borough!r}")
            if len(s.attributes) != n_attr:
                errors.append(f"{where}: {len(s.attributes)} attributes, expected {n_attr}")
            for i, caps in s.capacity.items():
                if i not in names:
                    errors.append(f"{where}: offers unknown service {i!r}")
                    continue
                if len(caps) != T:
                    errors.append(f"{where}, service {i!r}: capacity series length {len(caps)} != {T}")
                mu = s.max_capacity.get(i)
                if mu is None:
                    errors.append(f"{where}, service {i!r}: missing maximum capacity")
                elif any(c > mu or c < 0 for c in caps):
                    errors.append(f"{where}, service {i!r}: capacity outside [0, {mu}]")
                gam = s.expansion_cost.get(i)
                if gam is None or len(gam) != T or any(g < 0 for g in gam):
                    errors.append(f"{where}, service {i!r}: expansion costs missing or negative")
            if s.kind == CANDIDATE:
                if s.beds <= 0:
                    errors.append(f"{where}: candidate shelter needs a positive bed count")
                if s.critical_mass < 0:
                    errors.append(f"{where}: negative critical mass")
        if errors:
            raise InstanceValidationError("; ".join(errors))
        return self


def opening_cost(shelter, params, multiplier):
    """Annual bed cost times bed count times the borough multiplier."""
    if shelter.kind != CANDIDATE:
        raise NotACandidate(f"shelter {shelter.id} is {shelter.kind}, not a new candidate")
    if shelter.beds <= 0:
        raise NotACandidate(f"shelter {shelter.id} has no beds")
    return params.bed_cost * shelter.beds * multiplier


def partial_return(opening, rho):
    return rho * opening


# -- serialization -------------------------------------------------------------

def instance_to_dict(inst):
    d = asdict(inst)
    return {"schema": SCHEMA_NAME, "version": SCHEMA_VERSION, "instance": d}


def instance_from_dict(doc):
    if doc.get("schema") != SCHEMA_NAME or doc.get("version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"expected {SCHEMA_NAME} v{SCHEMA_VERSION}, got "
            f"{doc.get('schema')!r} v{doc.get('version')!r}")
    d = doc["instance"]
    try:
        services = tuple(Service(**s) for s in d["services"])
        youth = tuple(
            YouthProfile(y["id"], int(y["arrival"]), tuple(y["attributes"]),
                         tuple(ServiceRequest(**r) for r in y["requests"]))
            for y in d["youth"])
        shelters = tuple(
            ShelterProfile(
                s["id"], s["kind"], s["borough"], tuple(s["attributes"]),
                {k: tuple(v) for k, v in s["capacity"].items()},
                dict(s["max_capacity"]),
                {k: tuple(v) for k, v in s["expansion_cost"].items()},
                s["beds"], s["critical_mass"], s.get("organization"))
            for s in d["shelters"])
        inst = Instance(
            horizon=int(d["horizon"]), services=services, attributes=tuple(d["attributes"]),
            boroughs=dict(d["boroughs"]), youth=youth, shelters=shelters,
            benefit=BenefitParams(**d["benefit"]), cost=CostParams(**d["cost"]),
            delta=d["delta"], seed=d.get("seed"))
    except (KeyError, TypeError) as exc:
        raise InstanceValidationError(f"malformed instance document: {exc!r}") from exc
    return inst.validate()


def dumps_instance(inst):
    return json.dumps(instance_to_dict(inst), indent=1, sort_keys=True) + "\n"


def save_instance(inst, path):
    Path(path).write_text(dumps_instance(inst))


def load_instance(path):
    return instance_from_dict(json.loads(Path(path).read_text()))
