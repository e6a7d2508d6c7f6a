from dsdnsim.topo import ROLE_CLIENT, build_testbed_topology, build_topology, host
from dsdnsim.traffic import (
    ATTACK_ICMP,
    ATTACK_TCP,
    ATTACK_UDP,
    AttackSpec,
    NormalTrafficSpec,
    attack_problems,
    schedule_attack,
    schedule_normal,
)


def tcp_spec(rate=20000, start=0.0, duration=600.0, attackers=("h1", "h9", "h13"), target="h6"):
    return AttackSpec(
        kind=ATTACK_TCP,
        attackers=tuple(host(int(a[1:])) for a in attackers),
        target=host(int(target[1:])),
        rate_pps=rate,
        packet_bytes=60,
        start_s=start,
        duration_s=duration,
    )


def test_normal_stream_deterministic():
    t = build_testbed_topology()
    spec = NormalTrafficSpec(rng_seed=99)
    a = schedule_normal(spec, t, 300.0)
    b = schedule_normal(spec, t, 300.0)
    assert a == b
    assert len(a) > 0


def test_normal_stream_zero_clients():
    t = build_topology(2, 0, wiring=[(1, 2)])
    assert schedule_normal(NormalTrafficSpec(), t, 100.0) == []


def test_normal_flows_target_servers_only():
    t = build_testbed_topology()  # 13 clients, no attackers
    assert len([h for h in t.all_hosts() if t.role_of(h) == ROLE_CLIENT]) == 13
    stream = schedule_normal(NormalTrafficSpec(rng_seed=5), t, 600.0)
    servers = {host(5), host(6), host(7)}
    for e in stream:
        assert not e.is_attack
        # requests go client->server; responses server->client
        assert e.dst in servers or e.src in servers


def test_attack_total_packet_count():
    t = build_testbed_topology(attackers=["h1", "h9", "h13"])
    stream = schedule_attack(tcp_spec(), t)
    assert sum(e.count for e in stream) == 12_000_000
    assert all(e.is_attack and e.fresh_flow for e in stream)


def test_udp_one_second_count():
    t = build_testbed_topology(attackers=["h1", "h9", "h13"])
    spec = AttackSpec(
        kind=ATTACK_UDP,
        attackers=(host(1), host(9), host(13)),
        target=host(7),
        rate_pps=66_666,
        packet_bytes=1470,
        start_s=0.0,
        duration_s=1.0,
    )
    total = sum(e.count for e in schedule_attack(spec, t))
    assert abs(total - 66_666) <= 1


def test_attack_zero_duration_or_rate_is_empty():
    t = build_testbed_topology(attackers=["h1"])
    assert schedule_attack(tcp_spec(duration=0.0, attackers=("h1",)), t) == []
    assert schedule_attack(tcp_spec(rate=0, attackers=("h1",)), t) == []


def test_rate_accuracy_within_any_full_window():
    t = build_testbed_topology(attackers=["h1", "h9", "h13"])
    stream = schedule_attack(tcp_spec(rate=20000, start=60.0, duration=120.0), t)
    for w0 in (60.0, 70.0, 100.0, 163.0):
        window_total = sum(e.count for e in stream if w0 <= e.t < w0 + 10.0)
        assert abs(window_total - 200_000) <= 200_000 * 0.001


def test_per_second_exactness():
    t = build_testbed_topology(attackers=["h1", "h9", "h13"])
    stream = schedule_attack(tcp_spec(rate=66_666, start=0.0, duration=10.0, target="h6"), t)
    for sec in range(10):
        total = sum(e.count for e in stream if sec <= e.t < sec + 1)
        assert abs(total - 66_666) <= 1


def test_attack_problems_role_pairing():
    t = build_testbed_topology(attackers=["h1"])
    ok = tcp_spec(attackers=("h1",), target="h6")
    assert attack_problems(ok, t) == []
    wrong_target = AttackSpec(ATTACK_ICMP, (host(1),), host(6), 1000, 64, 0.0, 10.0)
    problems = attack_problems(wrong_target, t)
    assert any("expected http_server" in p for p in problems)


def test_every_packet_is_ground_truth_labeled():
    t = build_testbed_topology(attackers=["h1", "h9", "h13"])
    attack = schedule_attack(tcp_spec(duration=30.0), t)
    normal = schedule_normal(NormalTrafficSpec(rng_seed=1), t, 30.0)
    assert all(e.is_attack for e in attack)
    assert all(not e.is_attack for e in normal)
