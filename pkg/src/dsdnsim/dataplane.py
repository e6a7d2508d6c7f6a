"""Simulated switches: label-stack forwarding, per-port counters, drop rules,
and packet-in generation.

Forwarding is strictly label-determined: a switch pops the top label of the
packet's stack and emits the packet out that port. There is no destination
lookup. A packet arriving with an empty stack has no usable route and raises
a packet-in toward the domain controller.

Traffic is carried as batches: a SimPacket stands for `count` identical
packets, and counters are updated arithmetically, which keeps flood-scale
runs cheap while staying exact at the counter level.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from dsdnsim.topo import KIND_HOST, KIND_SWITCH, NodeId, Topology

PROTO_ICMP = "icmp"
PROTO_TCP = "tcp"
PROTO_UDP = "udp"
PROTO_HTTP = "http"

PROTOCOLS = (PROTO_ICMP, PROTO_TCP, PROTO_UDP, PROTO_HTTP)


@dataclass(frozen=True)
class SimPacket:
    """A batch of `count` identical packets.

    `is_attack` is ground-truth metadata: forwarding and detection never read
    it; only labeling and telemetry do. `fresh_flow` marks traffic whose flow
    identity changes per packet (flood style), which bypasses route caching.
    `spread_s` is the arrival interval the batch covers, used by the
    packet-in rate limiter.
    """

    src_host: NodeId
    dst_host: NodeId
    proto: str
    size_bytes: int
    labels: tuple[int, ...] = ()
    is_attack: bool = False
    count: int = 1
    fresh_flow: bool = False
    spread_s: float = 0.0


@dataclass(frozen=True)
class PortCounters:
    rx_packets: int = 0
    rx_bytes: int = 0
    tx_packets: int = 0
    tx_bytes: int = 0


@dataclass(frozen=True)
class DropRule:
    switch: NodeId
    port_no: int
    installed_at: float


# Forwarding outcomes ------------------------------------------------------

FORWARDED = "forwarded"
DELIVERED = "delivered"
DROPPED = "dropped"
PACKET_IN = "packet_in"


@dataclass(frozen=True)
class Outcome:
    kind: str
    packet: SimPacket
    egress_port_no: int | None = None
    next_switch: NodeId | None = None
    next_port_no: int | None = None
    host: NodeId | None = None
    rule: DropRule | None = None
    pktin_count: int = 0
    reason: str | None = None  # "no_route" | "misroute" for packet_in


class _PortState:
    __slots__ = (
        "rx_packets",
        "rx_bytes",
        "tx_packets",
        "tx_bytes",
        "attack_rx",
        "attack_tx",
        "pktin_last_bucket",
    )

    def __init__(self) -> None:
        self.rx_packets = 0
        self.rx_bytes = 0
        self.tx_packets = 0
        self.tx_bytes = 0
        self.attack_rx: dict[str, int] = {}
        self.attack_tx: dict[str, int] = {}
        self.pktin_last_bucket = -1


@dataclass
class DataPlane:
    """All switches of one simulation, keyed by switch NodeId."""

    topology: Topology
    pktin_bucket_s: float = 0.01
    _ports: dict[NodeId, dict[int, _PortState]] = field(default_factory=dict)
    _drops: dict[tuple[NodeId, int], DropRule] = field(default_factory=dict)
    pktin_suppressed: int = 0

    def __post_init__(self) -> None:
        for sw in self.topology.all_switches():
            self._ports[sw] = {p: _PortState() for p in self.topology.ports[sw]}

    # -- port state ------------------------------------------------------

    def _port(self, sw: NodeId, port_no: int) -> _PortState:
        try:
            return self._ports[sw][port_no]
        except KeyError:
            raise KeyError(f"unknown port {sw}:{port_no}") from None

    def read_counters(self, sw: NodeId, port_no: int) -> PortCounters:
        p = self._port(sw, port_no)
        return PortCounters(p.rx_packets, p.rx_bytes, p.tx_packets, p.tx_bytes)

    def read_attack_touch(self, sw: NodeId, port_no: int) -> dict[str, int]:
        """Cumulative ground-truth attack packets that touched the port,
        by attack protocol (received from the host or sent to it)."""
        p = self._port(sw, port_no)
        merged: dict[str, int] = dict(p.attack_rx)
        for proto, n in p.attack_tx.items():
            merged[proto] = merged.get(proto, 0) + n
        return merged

    # -- drop rules ------------------------------------------------------

    def install_drop(self, sw: NodeId, port_no: int, now: float) -> DropRule:
        self._port(sw, port_no)  # unknown port is a programming bug
        rule = DropRule(sw, port_no, now)
        self._drops[(sw, port_no)] = rule
        return rule

    def remove_drop(self, sw: NodeId, port_no: int) -> None:
        self._port(sw, port_no)
        self._drops.pop((sw, port_no), None)

    def active_drop(self, sw: NodeId, port_no: int) -> DropRule | None:
        return self._drops.get((sw, port_no))

    # -- forwarding ------------------------------------------------------

    def ingest(self, sw: NodeId, port_no: int, packet: SimPacket, now: float) -> Outcome:
        """Process a batch arriving at a switch port.

        Ingress counters increment before the drop-rule check, so a blocked
        port still observes the traffic it discards.
        """
        state = self._port(sw, port_no)
        state.rx_packets += packet.count
        state.rx_bytes += packet.count * packet.size_bytes
        if packet.is_attack:
            state.attack_rx[packet.proto] = state.attack_rx.get(packet.proto, 0) + packet.count

        rule = self._drops.get((sw, port_no))
        if rule is not None:
            return Outcome(DROPPED, packet, rule=rule)

        if not packet.labels:
            k = self._pktin_quota(state, now, packet.count, packet.spread_s)
            return Outcome(PACKET_IN, packet, pktin_count=k, reason="no_route")

        return self._pop_and_emit(sw, packet, now)

    def forward(self, sw: NodeId, packet: SimPacket, now: float) -> Outcome:
        """Emit a controller-reinjected batch. Ingress was already counted."""
        if not packet.labels:
            raise ValueError("reinjected packet needs a label stack")
        return self._pop_and_emit(sw, packet, now)

    def _pop_and_emit(self, sw: NodeId, packet: SimPacket, now: float) -> Outcome:
        label = packet.labels[0]
        port = self.topology.ports[sw].get(label)
        if port is None:
            return Outcome(PACKET_IN, packet, pktin_count=1, reason="misroute")

        out = self._ports[sw][label]
        out.tx_packets += packet.count
        out.tx_bytes += packet.count * packet.size_bytes
        if packet.is_attack:
            out.attack_tx[packet.proto] = out.attack_tx.get(packet.proto, 0) + packet.count

        remaining = replace(packet, labels=packet.labels[1:])
        if port.peer.kind == KIND_HOST:
            return Outcome(DELIVERED, remaining, egress_port_no=label, host=port.peer)
        if port.peer.kind == KIND_SWITCH:
            return Outcome(
                FORWARDED,
                remaining,
                egress_port_no=label,
                next_switch=port.peer,
                next_port_no=port.peer_port_no,
            )
        raise ValueError(f"port {sw}:{label} peers a {port.peer.kind}")

    # -- packet-in rate limiting ------------------------------------------

    def _pktin_quota(self, state: _PortState, now: float, count: int, spread_s: float) -> int:
        """Packet-ins granted for an unrouted arrival: one per bucket, with a
        batch spread over its arrival interval covering several buckets."""
        b = self.pktin_bucket_s
        first = int(now / b)
        buckets = max(1, round(spread_s / b)) if spread_s > 0 else 1
        start = max(first, state.pktin_last_bucket + 1)
        quota = min(count, first + buckets - start)
        if quota > 0:
            state.pktin_last_bucket = first + buckets - 1
            return quota
        self.pktin_suppressed += count
        return 0
