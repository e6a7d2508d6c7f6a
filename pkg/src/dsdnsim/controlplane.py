"""Local controllers: per-domain views, peer synchronization into a global
view, and strict source-route computation as label stacks.

Only the owning controller ever mutates its LocalView, so per-domain version
counters are enough for conflict-free last-writer-wins merging.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from dsdnsim.topo import KIND_HOST, KIND_SWITCH, Domain, NodeId, Topology

ADMIN_UP = "up"
ADMIN_BLOCKED = "blocked"


class RoutingError(Exception):
    """Destination unreachable or unknown in the merged graph."""


@dataclass(eq=True)
class LocalView:
    """One domain's port-level topology state.

    version strictly increases on every mutation; peers adopt whole views by
    version comparison.
    """

    domain_id: int
    version: int
    # switch -> {port_no: (peer, peer_port_no or None for hosts)}
    switch_ports: dict[NodeId, dict[int, tuple[NodeId, int | None]]]
    # host -> (switch, port_no)
    host_ports: dict[NodeId, tuple[NodeId, int]]
    # (switch, port_no) -> admin state
    port_admin: dict[tuple[NodeId, int], str]

    def clone(self) -> "LocalView":
        return LocalView(
            domain_id=self.domain_id,
            version=self.version,
            switch_ports={sw: dict(ports) for sw, ports in self.switch_ports.items()},
            host_ports=dict(self.host_ports),
            port_admin=dict(self.port_admin),
        )

    @staticmethod
    def from_domain(topology: Topology, domain: Domain) -> "LocalView":
        switch_ports: dict[NodeId, dict[int, tuple[NodeId, int | None]]] = {}
        host_ports: dict[NodeId, tuple[NodeId, int]] = {}
        port_admin: dict[tuple[NodeId, int], str] = {}
        for sw in domain.switches:
            switch_ports[sw] = {}
            for port_no, port in topology.ports[sw].items():
                switch_ports[sw][port_no] = (port.peer, port.peer_port_no)
                port_admin[(sw, port_no)] = ADMIN_UP
                if port.peer.kind == KIND_HOST:
                    host_ports[port.peer] = (sw, port_no)
        return LocalView(
            domain_id=domain.domain_id,
            version=1,
            switch_ports=switch_ports,
            host_ports=host_ports,
            port_admin=port_admin,
        )


@dataclass(frozen=True)
class SyncMessage:
    sender: int
    entries: dict[int, LocalView]
    sent_at: float


class GlobalView:
    """A controller's merged copy of every known domain's LocalView."""

    def __init__(self) -> None:
        self.views: dict[int, LocalView] = {}
        self._graph_sig: object = None

    def adopt_local(self, view: LocalView) -> None:
        self.views[view.domain_id] = view
        self._graph_sig = self._signature()

    def merge(self, msg: SyncMessage) -> tuple[list[tuple[int, int]], bool]:
        """Adopt every carried view that is newer than what we know.

        Returns (adopted (domain_id, version) pairs, merged-graph-changed).
        Unknown domains are adopted outright (dynamic discovery).
        """
        adopted = []
        for domain_id in sorted(msg.entries):
            view = msg.entries[domain_id]
            mine = self.views.get(domain_id)
            if mine is None or view.version > mine.version:
                self.views[domain_id] = view
                adopted.append((domain_id, view.version))
        graph_changed = False
        if adopted:
            sig = self._signature()
            graph_changed = sig != self._graph_sig
            self._graph_sig = sig
        return adopted, graph_changed

    def _signature(self) -> object:
        """Merged switch graph identity: inter-switch edges and host seats.
        Port admin state is excluded; blocking a port does not reshape the
        graph."""
        edges = set()
        hosts = []
        for view in self.views.values():
            for sw, ports in view.switch_ports.items():
                for port_no, (peer, _) in ports.items():
                    if peer.kind == KIND_SWITCH:
                        edges.add((sw, port_no, peer))
            hosts.extend(view.host_ports.items())
        return frozenset(edges), frozenset(hosts)

    # -- merged graph ------------------------------------------------------

    def adjacency(self) -> dict[NodeId, dict[NodeId, int]]:
        """switch -> {neighbor switch: smallest egress port_no}."""
        adj: dict[NodeId, dict[NodeId, int]] = {}
        for view in self.views.values():
            for sw, ports in view.switch_ports.items():
                mine = adj.setdefault(sw, {})
                for port_no in sorted(ports):
                    peer, _ = ports[port_no]
                    if peer.kind == KIND_SWITCH and peer not in mine:
                        mine[peer] = port_no
        return adj

    def host_seat(self, h: NodeId) -> tuple[NodeId, int]:
        for view in self.views.values():
            if h in view.host_ports:
                return view.host_ports[h]
        raise RoutingError(f"host {h} unknown to this controller")

    def deep_equal(self, other: "GlobalView") -> bool:
        return self.views == other.views


def compute_path(global_view: GlobalView, src_host: NodeId, dst_host: NodeId) -> tuple[int, ...]:
    """Shortest path by hop count over the merged switch graph, tie-broken by
    the lexicographically smallest switch sequence, translated into the label
    stack of egress port numbers (last label = destination's host port)."""
    src_sw, _ = global_view.host_seat(src_host)
    dst_sw, dst_port = global_view.host_seat(dst_host)
    if src_sw == dst_sw:
        return (dst_port,)

    adj = global_view.adjacency()
    heap: list[tuple[int, tuple[NodeId, ...]]] = [(0, (src_sw,))]
    done: set[NodeId] = set()
    best: tuple[NodeId, ...] | None = None
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done.add(node)
        if node == dst_sw:
            best = path
            break
        for nbr in sorted(adj.get(node, {})):
            if nbr not in done:
                heapq.heappush(heap, (dist + 1, path + (nbr,)))
    if best is None:
        raise RoutingError(f"no switch path {src_sw} -> {dst_sw}")

    labels = [adj[a][b] for a, b in zip(best, best[1:])]
    labels.append(dst_port)
    return tuple(labels)


@dataclass
class Controller:
    """One domain's control-plane actor."""

    domain: Domain
    topology: Topology
    local: LocalView = field(init=False)
    global_view: GlobalView = field(init=False)
    flow_cache: dict[tuple[NodeId, NodeId, str], tuple[int, ...]] = field(default_factory=dict)
    packet_in_total: int = 0
    packet_in_by_sec: dict[int, int] = field(default_factory=dict)
    unroutable_discards: int = 0

    def __post_init__(self) -> None:
        self.local = LocalView.from_domain(self.topology, self.domain)
        self.global_view = GlobalView()
        self.global_view.adopt_local(self.local)

    @property
    def domain_id(self) -> int:
        return self.domain.domain_id

    # -- synchronization ---------------------------------------------------

    def sync_tick(self, now: float, peers: list["Controller"]) -> list[tuple["Controller", SyncMessage]]:
        """Broadcast the full known-version map to every peer."""
        entries = dict(self.global_view.views)
        entries[self.domain_id] = self.local.clone()
        return [(peer, SyncMessage(self.domain_id, entries, now)) for peer in peers]

    def merge(self, msg: SyncMessage) -> list[tuple[int, int]]:
        adopted, graph_changed = self.global_view.merge(msg)
        if graph_changed:
            # Stale source routes would silently misroute.
            self.flow_cache.clear()
        return adopted

    # -- local mutations -----------------------------------------------------

    def set_port_admin(self, sw: NodeId, port_no: int, state: str) -> int:
        """Record a port block/unblock in the local view. Returns the new
        version, which the sync layer tracks for propagation delay."""
        self.local.port_admin[(sw, port_no)] = state
        self.local.version += 1
        return self.local.version

    # -- routing -------------------------------------------------------------

    def route_for(self, packet_src: NodeId, packet_dst: NodeId, proto: str, fresh_flow: bool) -> tuple[int, ...]:
        """Label stack for a flow; cached per (src, dst, proto) except for
        fresh-flow traffic whose identity never repeats."""
        if fresh_flow:
            return compute_path(self.global_view, packet_src, packet_dst)
        key = (packet_src, packet_dst, proto)
        labels = self.flow_cache.get(key)
        if labels is None:
            labels = compute_path(self.global_view, packet_src, packet_dst)
            self.flow_cache[key] = labels
        return labels

    def record_packet_ins(self, count: int, now: float) -> None:
        self.packet_in_total += count
        sec = int(now)
        self.packet_in_by_sec[sec] = self.packet_in_by_sec.get(sec, 0) + count
