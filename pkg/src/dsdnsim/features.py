"""Windowed aggregation of cumulative port counters into per-window deltas,
the four-feature vector behind detection."""
from __future__ import annotations

from dataclasses import dataclass

from dsdnsim.dataplane import PortCounters
from dsdnsim.topo import Domain, NodeId, Topology

DEFAULT_WINDOW_LEN_S = 10.0


@dataclass(frozen=True)
class PortWindow:
    """One port's four counter deltas over one aggregation window."""

    switch: NodeId
    port_no: int
    window_start_s: float
    window_len_s: float
    rx_packets: int
    rx_bytes: int
    tx_packets: int
    tx_bytes: int


def snapshot_delta(
    sw: NodeId,
    port_no: int,
    prev: PortCounters,
    curr: PortCounters,
    window_start_s: float,
    window_len_s: float = DEFAULT_WINDOW_LEN_S,
) -> PortWindow:
    """Componentwise counter difference packed with window metadata.

    Counters are cumulative and monotone; a negative delta is a simulator
    bug, not data.
    """
    if window_len_s <= 0:
        raise ValueError("window_len_s must be positive")
    deltas = (
        curr.rx_packets - prev.rx_packets,
        curr.rx_bytes - prev.rx_bytes,
        curr.tx_packets - prev.tx_packets,
        curr.tx_bytes - prev.tx_bytes,
    )
    if any(d < 0 for d in deltas):
        raise ValueError(
            f"counter monotonicity violated at {sw}:{port_no} "
            f"(prev={prev}, curr={curr})"
        )
    return PortWindow(sw, port_no, window_start_s, window_len_s, *deltas)


def monitored_ports(topology: Topology, domain: Domain) -> list[tuple[NodeId, int, NodeId]]:
    """Host-facing (switch, port_no, host) triples of a domain, in port order.

    Inter-switch ports aggregate many hosts and would defeat source
    attribution, so they are excluded from detection (telemetry still counts
    them).
    """
    out = []
    for sw in domain.switches:
        for port_no, h in topology.host_facing_ports(sw):
            out.append((sw, port_no, h))
    return out
