"""Workload generation: seeded benign client-server traffic and rate-exact
flood attacks.

Streams are materialized up front as plain emission lists, so the same spec,
topology, and seed always produce byte-identical schedules regardless of what
else happens in the simulation.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from dsdnsim.dataplane import PROTO_HTTP, PROTO_ICMP, PROTO_TCP, PROTO_UDP
from dsdnsim.topo import (
    ROLE_CLIENT,
    ROLE_HTTP_SERVER,
    ROLE_TCP_SERVER,
    ROLE_UDP_SERVER,
    NodeId,
    Topology,
)

ATTACK_TCP = "tcp_flood"
ATTACK_UDP = "udp_flood"
ATTACK_ICMP = "icmp_flood"

ATTACK_KINDS = (ATTACK_TCP, ATTACK_UDP, ATTACK_ICMP)

ATTACK_PROTO = {ATTACK_TCP: PROTO_TCP, ATTACK_UDP: PROTO_UDP, ATTACK_ICMP: PROTO_ICMP}

# Conventional flood tool packet sizes: bare SYN, large UDP datagram, echo.
DEFAULT_FLOOD_BYTES = {ATTACK_TCP: 60, ATTACK_UDP: 1470, ATTACK_ICMP: 64}

# Which server role each flood kind targets.
ATTACK_TARGET_ROLE = {
    ATTACK_TCP: ROLE_TCP_SERVER,
    ATTACK_UDP: ROLE_UDP_SERVER,
    ATTACK_ICMP: ROLE_HTTP_SERVER,
}

SPLIT_AGGREGATE = "aggregate"
SPLIT_PER_ATTACKER = "per_attacker"

_LEAD_GAP_S = 0.05  # remainder of a flow's first second trails the route request
_RESPONSE_DELAY_S = 0.06


@dataclass(frozen=True)
class Emission:
    """A batch of identical packets a host injects at time t."""

    t: float
    src: NodeId
    dst: NodeId
    proto: str
    count: int
    size_bytes: int
    is_attack: bool = False
    fresh_flow: bool = False
    spread_s: float = 0.0


@dataclass(frozen=True)
class FlowProfile:
    rate_min_pps: int
    rate_max_pps: int
    duration_min_s: int
    duration_max_s: int
    request_bytes: int
    response_per_request: float
    response_bytes: int


DEFAULT_PROFILES: dict[str, FlowProfile] = {
    PROTO_TCP: FlowProfile(30, 90, 2, 8, 1464, 1.0, 66),
    PROTO_UDP: FlowProfile(30, 90, 2, 8, 1470, 0.0, 0),
    PROTO_ICMP: FlowProfile(1, 2, 2, 6, 64, 1.0, 64),
    PROTO_HTTP: FlowProfile(6, 6, 1, 1, 300, 2.0, 1200),
}

DEFAULT_MIX = {PROTO_TCP: 0.45, PROTO_UDP: 0.30, PROTO_ICMP: 0.10, PROTO_HTTP: 0.15}


@dataclass(frozen=True)
class NormalTrafficSpec:
    rng_seed: int = 0
    flow_interarrival_s: float = 6.0
    warmup_s: float = 2.0
    mix: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MIX))
    profiles: dict[str, FlowProfile] = field(default_factory=lambda: dict(DEFAULT_PROFILES))


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    attackers: tuple[NodeId, ...]
    target: NodeId
    rate_pps: int
    packet_bytes: int
    start_s: float
    duration_s: float
    rate_split: str = SPLIT_AGGREGATE


def attack_problems(spec: AttackSpec, topology: Topology) -> list[str]:
    """Validation findings for an attack spec against a topology."""
    problems = []
    if spec.kind not in ATTACK_KINDS:
        problems.append(f"unknown attack kind {spec.kind!r}")
        return problems
    hosts = set(topology.all_hosts())
    for a in spec.attackers:
        if a not in hosts:
            problems.append(f"attacker {a} not in topology")
    if spec.target not in hosts:
        problems.append(f"target {spec.target} not in topology")
    else:
        want = ATTACK_TARGET_ROLE[spec.kind]
        got = topology.role_of(spec.target)
        if got != want:
            problems.append(f"{spec.kind} target {spec.target} has role {got}, expected {want}")
    if spec.rate_pps < 0 or spec.duration_s < 0 or spec.packet_bytes <= 0:
        problems.append("attack rate/duration/packet size out of range")
    if spec.rate_split not in (SPLIT_AGGREGATE, SPLIT_PER_ATTACKER):
        problems.append(f"unknown rate_split {spec.rate_split!r}")
    return problems


def schedule_attack(
    spec: AttackSpec,
    topology: Topology,
    batch_tick_s: float = 0.1,
) -> list[Emission]:
    """Rate-exact flood batches from each attacker toward the target.

    The aggregate packet count over any whole second inside the attack
    interval equals rate_pps exactly (integer accumulator batching); the
    per-tick total is split evenly across attackers with a rotating
    remainder.
    """
    hosts = set(topology.all_hosts())
    for a in spec.attackers:
        if a not in hosts:
            raise ValueError(f"attacker {a} not in topology")
    if spec.rate_pps == 0 or spec.duration_s <= 0 or not spec.attackers:
        return []

    attackers = sorted(spec.attackers)
    k = len(attackers)
    rate = spec.rate_pps * (k if spec.rate_split == SPLIT_PER_ATTACKER else 1)
    proto = ATTACK_PROTO[spec.kind]

    emissions: list[Emission] = []
    ticks = int(round(spec.duration_s / batch_tick_s))
    sent = 0
    for i in range(ticks):
        t = spec.start_s + i * batch_tick_s
        due = round(rate * batch_tick_s * (i + 1))
        n = due - sent
        sent = due
        if n <= 0:
            continue
        base, extra = divmod(n, k)
        for j, attacker in enumerate(attackers):
            share = base + (1 if (j - i) % k < extra else 0)
            if share == 0:
                continue
            emissions.append(
                Emission(
                    t=t,
                    src=attacker,
                    dst=spec.target,
                    proto=proto,
                    count=share,
                    size_bytes=spec.packet_bytes,
                    is_attack=True,
                    fresh_flow=True,
                    spread_s=batch_tick_s,
                )
            )
    return emissions


def schedule_normal(spec: NormalTrafficSpec, topology: Topology, horizon_s: float) -> list[Emission]:
    """Seeded stream of benign flows from every client toward the servers.

    Each client runs sequential flows (next flow starts an exponential gap
    after the previous one ends). A flow's first packet goes out alone so the
    control plane can assign its route; the rest follows in per-second
    batches, with response batches flowing back from the server.
    """
    rng = random.Random(spec.rng_seed)
    clients = sorted(h for h in topology.all_hosts() if topology.role_of(h) == ROLE_CLIENT)
    servers = {
        PROTO_TCP: sorted(topology.hosts_with_role(ROLE_TCP_SERVER)),
        PROTO_UDP: sorted(topology.hosts_with_role(ROLE_UDP_SERVER)),
        PROTO_HTTP: sorted(topology.hosts_with_role(ROLE_HTTP_SERVER)),
    }
    all_servers = sorted(set(servers[PROTO_TCP] + servers[PROTO_UDP] + servers[PROTO_HTTP]))

    protos = [p for p, w in sorted(spec.mix.items()) if w > 0]
    weights = [spec.mix[p] for p in protos]
    # A proto without a live server cannot be scheduled.
    protos_ok = [
        p for p in protos if (all_servers if p == PROTO_ICMP else servers.get(p))
    ]
    if not clients or not protos_ok or sum(weights) <= 0:
        return []
    weights = [spec.mix[p] for p in protos_ok]

    emissions: list[Emission] = []
    for client in clients:
        cursor = spec.warmup_s
        while True:
            cursor += rng.expovariate(1.0 / spec.flow_interarrival_s)
            if cursor >= horizon_s:
                break
            proto = rng.choices(protos_ok, weights=weights)[0]
            pool = all_servers if proto == PROTO_ICMP else servers[proto]
            server = pool[rng.randrange(len(pool))]
            profile = spec.profiles[proto]
            rate = rng.randint(profile.rate_min_pps, profile.rate_max_pps)
            duration = rng.randint(profile.duration_min_s, profile.duration_max_s)
            _emit_flow(emissions, client, server, proto, rate, duration, cursor, profile)
            cursor += duration
    emissions.sort(key=lambda e: e.t)
    return emissions


def _emit_flow(
    out: list[Emission],
    client: NodeId,
    server: NodeId,
    proto: str,
    rate: int,
    duration: int,
    t0: float,
    profile: FlowProfile,
) -> None:
    first_response = True
    for k in range(duration):
        t = t0 + k
        if k == 0:
            out.append(Emission(t, client, server, proto, 1, profile.request_bytes))
            if rate > 1:
                out.append(
                    Emission(t + _LEAD_GAP_S, client, server, proto, rate - 1, profile.request_bytes, spread_s=1.0)
                )
        else:
            out.append(Emission(t, client, server, proto, rate, profile.request_bytes, spread_s=1.0))

        n_resp = round(rate * profile.response_per_request)
        if n_resp <= 0:
            continue
        rt = t + _RESPONSE_DELAY_S
        if first_response:
            out.append(Emission(rt, server, client, proto, 1, profile.response_bytes))
            if n_resp > 1:
                out.append(
                    Emission(rt + _LEAD_GAP_S, server, client, proto, n_resp - 1, profile.response_bytes, spread_s=1.0)
                )
            first_response = False
        else:
            out.append(Emission(rt, server, client, proto, n_resp, profile.response_bytes, spread_s=1.0))
