import random

import pytest

from dsdnsim.dataplane import (
    DELIVERED,
    DROPPED,
    FORWARDED,
    PACKET_IN,
    DataPlane,
    PortCounters,
    SimPacket,
)
from dsdnsim.topo import build_testbed_topology, host, switch


def fabric():
    return DataPlane(build_testbed_topology())


def pkt(src=1, dst=6, labels=(), size=100, count=1, is_attack=False, proto="tcp", spread=0.0):
    return SimPacket(
        src_host=host(src),
        dst_host=host(dst),
        proto=proto,
        size_bytes=size,
        labels=tuple(labels),
        is_attack=is_attack,
        count=count,
        spread_s=spread,
    )


def test_single_label_pop_to_host():
    dp = fabric()
    out = dp.ingest(switch(1), 5, pkt(labels=[2]), 0.0)
    assert out.kind == DELIVERED
    assert out.host == host(2)
    assert dp.read_counters(switch(1), 5) == PortCounters(1, 100, 0, 0)
    assert dp.read_counters(switch(1), 2) == PortCounters(0, 0, 1, 100)


def test_single_label_pop_to_switch():
    dp = fabric()
    out = dp.ingest(switch(1), 1, pkt(labels=[5, 2]), 0.0)
    assert out.kind == FORWARDED
    assert out.next_switch == switch(2)
    assert out.packet.labels == (2,)
    assert dp.read_counters(switch(1), 5).tx_packets == 1


def test_empty_stack_raises_packet_in():
    dp = fabric()
    out = dp.ingest(switch(1), 1, pkt(), 0.0)
    assert out.kind == PACKET_IN
    assert out.reason == "no_route"
    assert out.pktin_count == 1


def test_invalid_label_is_misroute():
    dp = fabric()
    out = dp.ingest(switch(1), 1, pkt(labels=[99]), 0.0)
    assert out.kind == PACKET_IN
    assert out.reason == "misroute"


def test_drop_rule_discards_but_counts_rx():
    dp = fabric()
    dp.install_drop(switch(1), 1, 0.0)
    for i in range(5):
        out = dp.ingest(switch(1), 1, pkt(labels=[5, 2]), float(i))
        assert out.kind == DROPPED
    c = dp.read_counters(switch(1), 1)
    assert c.rx_packets == 5
    # nothing was transmitted anywhere
    assert dp.read_counters(switch(1), 5).tx_packets == 0


def test_three_packet_script_counter_table():
    # Hand-computed table: p1 forwarded s1->s2 (100 B), p2 has no route,
    # p3 arrives after a drop rule lands on its ingress port.
    dp = fabric()
    dp.ingest(switch(1), 1, pkt(labels=[5, 3], size=100), 0.0)
    dp.ingest(switch(1), 1, pkt(size=60), 1.0)
    dp.install_drop(switch(1), 1, 1.5)
    dp.ingest(switch(1), 1, pkt(labels=[5, 3], size=80), 2.0)

    assert dp.read_counters(switch(1), 1) == PortCounters(3, 240, 0, 0)
    assert dp.read_counters(switch(1), 5) == PortCounters(0, 0, 1, 100)


def test_install_remove_restores_forwarding():
    dp = fabric()
    dp.install_drop(switch(1), 1, 0.0)
    dp.remove_drop(switch(1), 1)
    out = dp.ingest(switch(1), 1, pkt(labels=[2]), 1.0)
    assert out.kind == DELIVERED


def test_double_install_single_remove_unblocks():
    dp = fabric()
    dp.install_drop(switch(1), 1, 0.0)
    rule = dp.install_drop(switch(1), 1, 5.0)  # refreshes installed_at
    assert rule.installed_at == 5.0
    dp.remove_drop(switch(1), 1)
    assert dp.active_drop(switch(1), 1) is None
    # removing an absent rule is a no-op
    dp.remove_drop(switch(1), 1)


def test_unknown_port_is_hard_error():
    dp = fabric()
    with pytest.raises(KeyError):
        dp.read_counters(switch(1), 42)
    with pytest.raises(KeyError):
        dp.install_drop(switch(1), 42, 0.0)


def test_fresh_port_counters_zero():
    dp = fabric()
    assert dp.read_counters(switch(3), 2) == PortCounters(0, 0, 0, 0)


def test_delivery_counts_tx():
    dp = fabric()
    dp.ingest(switch(1), 5, pkt(labels=[3], size=100), 0.0)
    c = dp.read_counters(switch(1), 3)
    assert (c.tx_packets, c.tx_bytes) == (1, 100)


def test_scripted_replay_matches_exemplar_totals():
    # 1313 full-size packets plus one 1300-byte straggler add up to the
    # first stock exemplar's counters.
    dp = fabric()
    dp.ingest(switch(1), 1, pkt(labels=[2], size=1464, count=1313), 0.0)
    dp.ingest(switch(1), 1, pkt(labels=[2], size=1300, count=1), 1.0)
    c = dp.read_counters(switch(1), 1)
    assert (c.rx_packets, c.rx_bytes) == (1314, 1923532)


def test_forwarding_is_label_determined():
    dp = fabric()
    a = dp.ingest(switch(1), 1, pkt(src=1, dst=6, labels=[5, 2]), 0.0)
    b = dp.ingest(switch(1), 2, pkt(src=2, dst=11, labels=[5, 2]), 0.0)
    assert (a.kind, a.egress_port_no, a.next_switch) == (b.kind, b.egress_port_no, b.next_switch)


def test_counter_conservation_random_script():
    rng = random.Random(42)
    dp = fabric()
    s1 = switch(1)
    valid_ports = sorted(dp.topology.ports[s1])
    for i in range(300):
        labels = rng.choice([(), (rng.choice(valid_ports),), (99,)])
        dp.ingest(s1, rng.choice(valid_ports[:4]), pkt(labels=labels, count=rng.randint(1, 5)), float(i))
        if rng.random() < 0.1:
            dp.install_drop(s1, rng.choice(valid_ports[:4]), float(i))
        if rng.random() < 0.1:
            dp.remove_drop(s1, rng.choice(valid_ports[:4]))
    rx = sum(dp.read_counters(s1, p).rx_packets for p in valid_ports)
    tx = sum(dp.read_counters(s1, p).tx_packets for p in valid_ports)
    assert tx <= rx


def test_conservation_equality_without_drops_or_packet_ins():
    dp = fabric()
    s1 = switch(1)
    for i in range(50):
        dp.ingest(s1, 1, pkt(labels=[2], count=3), float(i))
    rx = sum(dp.read_counters(s1, p).rx_packets for p in dp.topology.ports[s1])
    tx = sum(dp.read_counters(s1, p).tx_packets for p in dp.topology.ports[s1])
    assert rx == tx == 150


def test_attack_touch_tracks_both_directions():
    dp = fabric()
    dp.ingest(switch(1), 1, pkt(labels=[2], is_attack=True, proto="udp", count=7), 0.0)
    assert dp.read_attack_touch(switch(1), 1) == {"udp": 7}  # rx side
    assert dp.read_attack_touch(switch(1), 2) == {"udp": 7}  # tx side
    assert dp.read_attack_touch(switch(1), 3) == {}


def test_pktin_rate_limiter_buckets():
    dp = fabric()
    s1 = switch(1)
    # one packet per millisecond on the same port: only one packet-in per
    # 10 ms bucket gets through
    granted = 0
    for i in range(100):
        out = dp.ingest(s1, 1, pkt(), i * 0.001)
        granted += out.pktin_count
    assert granted == 10
    # a batch spread over 100 ms covers ten fresh buckets
    out = dp.ingest(s1, 1, pkt(count=2222, spread=0.1), 1.0)
    assert out.pktin_count == 10
