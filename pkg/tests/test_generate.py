import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bcropt.errors import ConfigInvalid
from bcropt.fixtures import DESK_SCALE, STUDY, TINY
from bcropt.generate import (ORGANIZATION_BEDS, GeneratorConfig, archetype_beds, generate_instance,
                             reassign_boroughs)
from bcropt.instance import CANDIDATE, dumps_instance, instance_from_dict, instance_to_dict


def test_same_seed_same_bytes():
    cfg = GeneratorConfig()
    assert dumps_instance(generate_instance(cfg, 7)) == dumps_instance(generate_instance(cfg, 7))
    assert dumps_instance(generate_instance(cfg, 7)) != dumps_instance(generate_instance(cfg, 8))


def test_twenty_youth_thirteen_services_validate():
    for seed in range(20):
        inst = generate_instance(GeneratorConfig(n_youth=20, n_services=13), seed)
        assert len(inst.youth) == 20 and len(inst.services) == 13


def test_average_bed_table():
    assert ORGANIZATION_BEDS == (6, 8, 8, 20, 9, 12, 20, 12)


def test_archetype_mean():
    rng = np.random.default_rng(0)
    draws = [archetype_beds(rng, 3) for _ in range(1000)]
    assert np.mean(draws) == pytest.approx(20, rel=0.10)


def test_round_trip():
    inst = generate_instance(STUDY, 3)
    assert instance_from_dict(instance_to_dict(inst)) == inst


def test_fixture_shapes():
    inst = generate_instance(STUDY, 0)
    assert (len(inst.youth), inst.horizon, len(inst.services), len(inst.candidates)) == (40, 12, 6, 10)
    inst = generate_instance(DESK_SCALE, 0)
    assert (len(inst.youth), inst.horizon, len(inst.candidates)) == (100, 26, 10)


def test_every_youth_requests_a_bed():
    inst = generate_instance(GeneratorConfig(), 1)
    for y in inst.youth:
        assert y.request("beds") is not None


def test_scaled_candidate_policy():
    cfg = GeneratorConfig(n_youth=250, candidate_policy="scaled")
    assert cfg.candidate_count == 5


@pytest.mark.parametrize("bad", [dict(n_youth=0), dict(delta=0.0), dict(delta=1.5), dict(rho=-1),
                                 dict(stay=(3, 1)), dict(candidate_policy="huge"),
                                 dict(n_services=99), dict(capacity_scale=0)])
def test_bad_settings_named(bad):
    with pytest.raises(ConfigInvalid, match=next(iter(bad))):
        GeneratorConfig(**bad)


def test_unknown_key_named():
    with pytest.raises(ConfigInvalid, match="n_yuoth"):
        GeneratorConfig.from_mapping({"n_yuoth": 3})


def test_mapping_lists_become_tuples():
    cfg = GeneratorConfig.from_mapping({"stay": [1, 2]})
    assert cfg.stay == (1, 2)


def test_reassign_changes_only_candidate_boroughs():
    inst = generate_instance(STUDY, 0)
    other = reassign_boroughs(inst, 5)
    assert other.youth == inst.youth
    for a, b in zip(inst.shelters, other.shelters):
        if a.kind != CANDIDATE:
            assert a == b
        else:
            assert a.beds == b.beds and a.capacity == b.capacity
    assert reassign_boroughs(inst, 5) == other


@settings(max_examples=30)
@given(st.integers(0, 2**31 - 1), st.integers(1, 12), st.integers(1, 14), st.integers(2, 30),
       st.integers(0, 4), st.integers(0, 6))
def test_generated_instances_validate(seed, n_youth, n_services, horizon, n_sq, n_cand):
    cfg = GeneratorConfig(n_youth=n_youth, n_services=n_services, horizon=horizon,
                          n_status_quo=n_sq, n_candidates=n_cand)
    inst = generate_instance(cfg, seed)
    for y in inst.youth:
        for r in y.requests:
            assert y.arrival <= r.earliest <= r.latest
            assert r.latest + r.duration <= inst.horizon
            assert r.frequency >= 1


@settings(max_examples=30)
@given(st.integers(0, 2**31 - 1))
def test_tiny_fixture_within_oracle_limits(seed):
    inst = generate_instance(TINY, seed)
    assert len(inst.youth) <= 4 and len(inst.candidates) <= 2
    assert inst.horizon <= 6 and len(inst.services) <= 2
