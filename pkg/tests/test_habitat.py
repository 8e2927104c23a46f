import math

import pytest
from hypothesis import given, strategies as st

from digieco.config import ScenarioConfig
from digieco.habitat import (Ecosystem, Habitat, MigrationOutcome, PendingMigration,
                             generate_request, hebbian_update, select_migration_targets)
from digieco.model import Agent, AgentSequence, Request, derive_stream

S, F = MigrationOutcome.SUCCESS, MigrationOutcome.FAILURE


def test_hebbian_examples():
    assert hebbian_update(0.5, S, 0.1) == pytest.approx(0.55, abs=1e-15)
    assert hebbian_update(0.5, F, 0.1) == pytest.approx(0.45, abs=1e-15)
    assert hebbian_update(0.99, S, 0.1) == 0.99
    assert hebbian_update(0.01, F, 0.1) == 0.01


@given(st.floats(0.01, 0.99), st.lists(st.booleans(), max_size=200), st.floats(0.01, 0.99))
def test_hebbian_stays_in_bounds(p, outcomes, eta):
    for ok in outcomes:
        new = hebbian_update(p, S if ok else F, eta)
        assert 0.01 <= new <= 0.99
        if ok:
            assert new > p or new == 0.99
        else:
            assert new < p or new == 0.01
        p = new


def test_hebbian_converges_towards_bounds():
    p = 0.5
    for _ in range(50):
        p = hebbian_update(p, S, 0.1)
    assert 0.99 - p <= 0.1 * (1 - p)
    q = 0.5
    for _ in range(100):
        q = hebbian_update(q, F, 0.1)
    assert q == 0.01


def test_migration_targets_degenerate_cases():
    assert select_migration_targets(Habitat(0), derive_stream(1, "m")) == []
    h = Habitat(0, outgoing={1: 1e-12, 2: 1e-12})
    assert select_migration_targets(h, derive_stream(1, "m")) == []


def test_migration_targets_binomial():
    h = Habitat(0, outgoing={1: 0.99})
    rng = derive_stream(9, "m")
    hits = sum(len(select_migration_targets(h, rng)) for _ in range(100_000))
    assert abs(hits - 99_000) <= 3 * math.sqrt(100_000 * 0.99 * 0.01)


def test_migration_targets_in_id_order():
    h = Habitat(0, outgoing={5: 0.999999, 2: 0.999999, 9: 0.999999})
    assert select_migration_targets(h, derive_stream(1, "m")) == [2, 5, 9]


PROFILE = ((10, 10), (20, 20), (30, 30), (40, 40))


def test_generate_request_zero_noise():
    r = generate_request(PROFILE, 0.0, 3, derive_stream(1, "r"), per_segment=2)
    assert len(r.segments) == 3
    assert all(a in PROFILE for a in r.flat)
    i = PROFILE.index(r.flat[0])
    assert list(r.flat) == [PROFILE[(i + k) % 4] for k in range(6)]


def test_generate_request_clamped_and_deterministic():
    edge = ((0, 100), (100, 0))
    r = generate_request(edge, 30.0, 3, derive_stream(2, "r"))
    assert all(0 <= c <= 100 for a in r.flat for c in a)
    assert generate_request(PROFILE, 2.0, 3, derive_stream(3, "r")) == \
        generate_request(PROFILE, 2.0, 3, derive_stream(3, "r"))


def test_initial_setup_deploys_five_agents_per_user():
    eco = Ecosystem(ScenarioConfig(), 1)
    assert len(eco.users) == 100
    assert eco.agents_created == 500
    assert eco.services_available == 500
    assert all(len(h.agents) == 5 for h in eco.habitats.values())


def test_deployment_every_third_request():
    eco = Ecosystem(ScenarioConfig(users=5, communities=1), 1)
    user = eco.users[0]
    deployed = []
    for k in range(1, 10):
        before = eco.agents_created
        eco.record_request(user)
        deployed.append(eco.agents_created - before)
    assert deployed == [0, 0, 1, 0, 0, 1, 0, 0, 1]


def test_deployed_agent_without_noise_matches_profile():
    eco = Ecosystem(ScenarioConfig(users=3, communities=1, sigma=0.0), 4)
    user = eco.users[1]
    agent = eco.deploy_agent(user)
    assert all(a in user.profile for a in agent.attributes)
    assert agent.origin_user == user.id
    assert agent.id in eco.habitats[user.habitat].agents
    assert eco.registry.location(agent.id) == user.habitat


def test_random_topology_is_consistent():
    eco = Ecosystem(ScenarioConfig(), 2)
    for h in eco.habitats.values():
        assert h.id not in h.outgoing
        for t, p in h.outgoing.items():
            assert t in eco.habitats
            assert h.id in eco.habitats[t].outgoing
            assert p == 0.5
        assert sorted(eco.registry.nodes[h.id].redirects) == sorted(h.outgoing)
    # each habitat after the first four links to four earlier ones
    assert sum(len(h.outgoing) for h in eco.habitats.values()) == 2 * (6 + 4 * 96)


def test_small_world_topology_clusters_more():
    sw = Ecosystem(ScenarioConfig(topology="small_world"), 3)
    rnd = Ecosystem(ScenarioConfig(), 3)
    assert sw.clustering_coefficient() > 0.3
    assert sw.clustering_coefficient() > rnd.clustering_coefficient()


def _pair(p=0.5):
    """Two connected habitats with hand-built pools."""
    eco = Ecosystem(ScenarioConfig(users=2, communities=1, initial_agents_per_user=1), 1)
    eco.habitats[0].outgoing[1] = p
    eco.habitats[1].outgoing[0] = p
    return eco


def test_first_request_has_no_hebbian_updates():
    eco = Ecosystem(ScenarioConfig(users=10, communities=2), 1)
    user = eco.users[3]
    before = {h.id: dict(h.outgoing) for h in eco.habitats.values()}
    eco.handle_request(user, eco.generate_request(user, derive_stream(1, "r")), derive_stream(1, "g"))
    assert eco.hebbian_updates == {S: 0, F: 0}
    assert {h.id: dict(h.outgoing) for h in eco.habitats.values()} == before


def test_migrant_used_next_request_reinforces_both_edges():
    eco = _pair()
    dest = eco.habitats[1]
    x = Agent(1000, [(50, 50)])
    dest.agents = {x.id: x}
    dest.pending_migrations.append(PendingMigration(0, AgentSequence([x]), 0, 5))
    eco.handle_request(eco.users[1], Request([[(50, 50)]]), derive_stream(1, "g"))
    assert eco.habitats[0].outgoing[1] == pytest.approx(0.55)
    assert eco.habitats[1].outgoing[0] == pytest.approx(0.55)
    assert dest.pending_migrations == []


def test_unused_migrant_fails_after_window():
    eco = _pair()
    dest = eco.habitats[1]
    good, useless = Agent(1000, [(50, 50)]), Agent(1001, [(0, 100)])
    dest.agents = {good.id: good, useless.id: useless}
    dest.pending_migrations.append(PendingMigration(0, AgentSequence([useless]), 0, 5))
    eco.habitats[1].outgoing[0] = 0.01  # no migrants back to the source
    eco.habitats[0].outgoing[1] = 0.5
    for k in range(5):
        eco.handle_request(eco.users[1], Request([[(50, 50)]]), derive_stream(k, "g"))
        if k < 4:
            assert eco.habitats[0].outgoing[1] == 0.5
    assert eco.habitats[0].outgoing[1] == pytest.approx(0.45)
    assert eco.habitats[1].outgoing[0] == 0.01
    assert eco.hebbian_updates[F] == 1
    assert not any(pm.migration_id == 0 for pm in dest.pending_migrations)


def test_handle_request_stores_and_migrates_best():
    eco = _pair(p=0.99)
    src = eco.habitats[0]
    resp = eco.handle_request(eco.users[0], eco.generate_request(eco.users[0], derive_stream(1, "r")),
                              derive_stream(1, "g"))
    assert resp.best_sequence.key in src.sequences
    if resp.migration_targets:
        dest = eco.habitats[1]
        assert resp.best_sequence.key in dest.sequences
        assert dest.pending_migrations[-1].source == 0
        assert dest.pending_migrations[-1].requests_remaining == 5
        # migrants are copies: the source keeps its sequence
        assert resp.best_sequence.key in src.sequences


def test_empty_habitat_pool_rejected():
    eco = _pair()
    eco.habitats[0].agents.clear()
    with pytest.raises(ValueError):
        eco.handle_request(eco.users[0], Request([[(1, 1)]]), derive_stream(1, "g"))


def test_churn_disabled_is_a_no_op():
    eco = Ecosystem(ScenarioConfig(users=10, communities=2, churn_rate=0.0), 1)
    before = eco.snapshot()
    assert not any(eco.churn_step() for _ in range(100))
    assert eco.snapshot() == before


@pytest.mark.parametrize("topology", ["random", "small_world"])
def test_churn_replaces_a_user(topology):
    eco = Ecosystem(ScenarioConfig(users=20, communities=2, churn_rate=1.0, topology=topology), 5)
    for _ in range(10):
        old = set(eco.users)
        assert eco.churn_step()
        gone = old - set(eco.users)
        assert len(eco.users) == 20 and len(gone) == 1
        removed = gone.pop()
        assert all(removed not in h.outgoing for h in eco.habitats.values())
        assert removed not in eco.registry.nodes
        assert all(removed not in n.redirects for n in eco.registry.nodes.values())
        assert set(eco.registry.nodes) == set(eco.habitats)
        newest = max(eco.users)
        assert len(eco.habitats[newest].agents) == 5
        assert all(p == 0.5 for p in eco.habitats[newest].outgoing.values())
        for h in eco.habitats.values():
            assert all(t in eco.habitats for t in h.outgoing)
    assert eco.services_available == 100


def test_prune_rewires_dead_links():
    eco = _pair(p=0.01)
    eco.cfg = eco.cfg.replace(prune_edges=True)
    eco._reinforce(0, 1, F)
    assert 1 not in eco.habitats[0].outgoing  # only two habitats: nowhere to rewire


def test_ecosystem_state_is_deterministic():
    cfg = ScenarioConfig(users=10, communities=2, churn_rate=0.2)

    def run(seed):
        eco = Ecosystem(cfg, seed)
        rng = derive_stream(seed, "users")
        for i in range(30):
            ids = sorted(eco.users)
            u = eco.users[ids[int(rng.integers(len(ids)))]]
            eco.handle_request(u, eco.generate_request(u, rng), derive_stream(seed, f"g{i}"))
            eco.record_request(u)
            eco.churn_step()
        return eco.snapshot()

    assert run(3) == run(3)
    assert run(3) != run(4)


def test_prune_rewires_to_a_new_partner():
    eco = Ecosystem(ScenarioConfig(users=10, communities=2, prune_edges=True), 2)
    a = 5
    b = sorted(eco.habitats[a].outgoing)[0]
    eco.habitats[a].outgoing[b] = 0.01
    eco.habitats[b].outgoing[a] = 0.01
    degree = len(eco.habitats[a].outgoing)
    eco._reinforce(a, b, F)
    assert b not in eco.habitats[a].outgoing and a not in eco.habitats[b].outgoing
    assert len(eco.habitats[a].outgoing) == degree
    assert b not in eco.registry.nodes[a].redirects
