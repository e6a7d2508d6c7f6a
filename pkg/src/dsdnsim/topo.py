"""Static model of the multi-domain network: domains, controllers, switches,
hosts, ports, links, and host roles.

The topology is immutable after construction; runtime port state (drop rules,
admin changes) lives in the data plane and controller views.
"""
from __future__ import annotations

from dataclasses import dataclass, field

KIND_CONTROLLER = "controller"
KIND_SWITCH = "switch"
KIND_HOST = "host"

_PREFIX = {KIND_CONTROLLER: "c", KIND_SWITCH: "s", KIND_HOST: "h"}
_KIND_BY_PREFIX = {v: k for k, v in _PREFIX.items()}

ROLE_CLIENT = "client"
ROLE_HTTP_SERVER = "http_server"
ROLE_TCP_SERVER = "tcp_server"
ROLE_UDP_SERVER = "udp_server"
ROLE_ATTACKER = "attacker"

ROLES = (ROLE_CLIENT, ROLE_HTTP_SERVER, ROLE_TCP_SERVER, ROLE_UDP_SERVER, ROLE_ATTACKER)

SERVER_ROLES = (ROLE_HTTP_SERVER, ROLE_TCP_SERVER, ROLE_UDP_SERVER)


@dataclass(frozen=True, order=True)
class NodeId:
    """Stable node identity, totally ordered by (kind, index)."""

    kind: str
    index: int

    def __str__(self) -> str:
        return f"{_PREFIX[self.kind]}{self.index}"

    @staticmethod
    def parse(name: str) -> "NodeId":
        kind = _KIND_BY_PREFIX.get(name[:1])
        if kind is None or not name[1:].isdigit():
            raise ValueError(f"not a node name: {name!r}")
        return NodeId(kind, int(name[1:]))


def switch(i: int) -> NodeId:
    return NodeId(KIND_SWITCH, i)


def host(i: int) -> NodeId:
    return NodeId(KIND_HOST, i)


def controller(i: int) -> NodeId:
    return NodeId(KIND_CONTROLLER, i)


@dataclass(frozen=True)
class Port:
    """One switch port and what it connects to.

    peer_port_no is None when the peer is a host (hosts have a single
    implicit NIC).
    """

    owner: NodeId
    port_no: int
    peer: NodeId
    peer_port_no: int | None


@dataclass(frozen=True)
class Domain:
    domain_id: int
    controller: NodeId
    switches: tuple[NodeId, ...]
    hosts: tuple[NodeId, ...]
    host_roles: dict[NodeId, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Topology:
    domains: tuple[Domain, ...]
    # switch -> {port_no: Port}
    ports: dict[NodeId, dict[int, Port]]

    # -- lookups ---------------------------------------------------------

    def all_switches(self) -> list[NodeId]:
        return [s for d in self.domains for s in d.switches]

    def all_hosts(self) -> list[NodeId]:
        return [h for d in self.domains for h in d.hosts]

    def all_controllers(self) -> list[NodeId]:
        return [d.controller for d in self.domains]

    def domain_of_switch(self, sw: NodeId) -> Domain:
        for d in self.domains:
            if sw in d.switches:
                return d
        raise KeyError(f"switch {sw} belongs to no domain")

    def domain_of_host(self, h: NodeId) -> Domain:
        for d in self.domains:
            if h in d.hosts:
                return d
        raise KeyError(f"host {h} belongs to no domain")

    def host_attachment(self, h: NodeId) -> tuple[NodeId, int]:
        """Return (switch, port_no) the host hangs off."""
        for sw, ports in self.ports.items():
            for port in ports.values():
                if port.peer == h:
                    return sw, port.port_no
        raise KeyError(f"host {h} is not attached")

    def attached_host(self, sw: NodeId, port_no: int) -> NodeId | None:
        port = self.ports[sw][port_no]
        return port.peer if port.peer.kind == KIND_HOST else None

    def host_facing_ports(self, sw: NodeId) -> list[tuple[int, NodeId]]:
        """(port_no, host) pairs for a switch, in port order."""
        out = []
        for port_no in sorted(self.ports[sw]):
            port = self.ports[sw][port_no]
            if port.peer.kind == KIND_HOST:
                out.append((port_no, port.peer))
        return out

    def role_of(self, h: NodeId) -> str:
        return self.domain_of_host(h).host_roles.get(h, ROLE_CLIENT)

    def hosts_with_role(self, role: str) -> list[NodeId]:
        return [h for h in self.all_hosts() if self.role_of(h) == role]

    def inter_switch_edges(self) -> list[tuple[NodeId, NodeId]]:
        edges = set()
        for sw, ports in self.ports.items():
            for port in ports.values():
                if port.peer.kind == KIND_SWITCH:
                    edges.add(tuple(sorted((sw, port.peer))))
        return sorted(edges)


def build_topology(
    n_domains: int,
    hosts_per_domain: int,
    wiring: str | list[tuple[int, int]] = "ring",
    host_roles: dict[str, str] | None = None,
) -> Topology:
    """Build an n-domain topology, one controller and one switch per domain.

    Hosts are numbered globally in domain order (domain 1 gets h1..h_k).
    Host-facing ports come first (port i <-> i-th host of the domain), then
    inter-switch ports in link-creation order. `wiring` is "ring", "mesh",
    or an explicit list of (switch_index, switch_index) pairs.
    """
    if n_domains < 1 or hosts_per_domain < 0:
        raise ValueError("need at least one domain and non-negative hosts per domain")

    roles = {NodeId.parse(name): role for name, role in (host_roles or {}).items()}

    domains = []
    ports: dict[NodeId, dict[int, Port]] = {}
    for d in range(1, n_domains + 1):
        sw = switch(d)
        hosts = tuple(host((d - 1) * hosts_per_domain + i) for i in range(1, hosts_per_domain + 1))
        ports[sw] = {}
        for i, h in enumerate(hosts, start=1):
            ports[sw][i] = Port(owner=sw, port_no=i, peer=h, peer_port_no=None)
        domain_roles = {h: roles[h] for h in hosts if h in roles}
        domains.append(
            Domain(
                domain_id=d,
                controller=controller(d),
                switches=(sw,),
                hosts=hosts,
                host_roles=domain_roles,
            )
        )

    if wiring == "ring":
        edges = [(d, d % n_domains + 1) for d in range(1, n_domains + 1)]
        if n_domains == 2:
            edges = [(1, 2)]
        elif n_domains == 1:
            edges = []
    elif wiring == "mesh":
        edges = [(a, b) for a in range(1, n_domains + 1) for b in range(a + 1, n_domains + 1)]
    else:
        edges = [tuple(sorted(e)) for e in wiring]

    for a, b in edges:
        sa, sb = switch(a), switch(b)
        pa = max(ports[sa], default=0) + 1
        pb = max(ports[sb], default=0) + 1
        ports[sa][pa] = Port(owner=sa, port_no=pa, peer=sb, peer_port_no=pb)
        ports[sb][pb] = Port(owner=sb, port_no=pb, peer=sa, peer_port_no=pa)

    return Topology(domains=tuple(domains), ports=ports)


def build_testbed_topology(
    wiring: str = "ring",
    attackers: list[str] | None = None,
) -> Topology:
    """The canonical 4-domain evaluation topology.

    Four domains, each one controller + one switch + four hosts; switches
    wired in a ring (s1-s2-s3-s4-s1) by default. h5 is the HTTP server,
    h6 the TCP server, h7 the UDP server; everything else is a client
    unless named in `attackers`.
    """
    roles = {"h5": ROLE_HTTP_SERVER, "h6": ROLE_TCP_SERVER, "h7": ROLE_UDP_SERVER}
    for name in attackers or []:
        if name in roles:
            raise ValueError(f"{name} is a server and cannot attack")
        roles[name] = ROLE_ATTACKER
    return build_topology(4, 4, wiring=wiring, host_roles=roles)


def validate(topology: Topology) -> list[str]:
    """Return every invariant violation with a human-readable locator.

    An empty list means the topology is well-formed. Violations are data,
    not failures.
    """
    problems: list[str] = []

    seen_hosts: dict[NodeId, int] = {}
    seen_switches: dict[NodeId, int] = {}
    for d in topology.domains:
        for h in d.hosts:
            if h in seen_hosts:
                problems.append(f"host {h} in domains {seen_hosts[h]} and {d.domain_id}")
            seen_hosts[h] = d.domain_id
        for sw in d.switches:
            if sw in seen_switches:
                problems.append(f"switch {sw} in domains {seen_switches[sw]} and {d.domain_id}")
            seen_switches[sw] = d.domain_id
        for h, role in d.host_roles.items():
            if role not in ROLES:
                problems.append(f"host {h}: unknown role {role!r}")

    controllers = topology.all_controllers()
    if len(set(controllers)) != len(controllers):
        problems.append("controller shared between domains")

    # Port uniqueness and link symmetry.
    attachments: dict[NodeId, list[tuple[NodeId, int]]] = {}
    for sw, ports in topology.ports.items():
        if sw not in seen_switches:
            problems.append(f"switch {sw} has ports but no domain")
        for port_no, port in ports.items():
            if port.port_no != port_no or port.owner != sw:
                problems.append(f"{sw} port {port_no}: inconsistent port record")
            if port.peer.kind == KIND_HOST:
                attachments.setdefault(port.peer, []).append((sw, port_no))
            elif port.peer.kind == KIND_SWITCH:
                back = topology.ports.get(port.peer, {}).get(port.peer_port_no)
                if back is None or back.peer != sw or back.peer_port_no != port_no:
                    problems.append(f"link asymmetry: {sw} port {port_no} -> {port.peer}")
            else:
                problems.append(f"{sw} port {port_no}: peer {port.peer} is not a switch or host")

    for h in seen_hosts:
        points = attachments.get(h, [])
        if not points:
            problems.append(f"host {h} is not attached to any switch port")
        elif len(points) > 1:
            where = ", ".join(f"{sw} port {p}" for sw, p in points)
            problems.append(f"host {h} multi-attached: {where}")
    for h in attachments:
        if h not in seen_hosts:
            problems.append(f"attached host {h} belongs to no domain")

    # Switch graph connectivity.
    switches = topology.all_switches()
    if switches:
        adj: dict[NodeId, set[NodeId]] = {sw: set() for sw in switches}
        for a, b in topology.inter_switch_edges():
            if a in adj and b in adj:
                adj[a].add(b)
                adj[b].add(a)
        seen = {switches[0]}
        stack = [switches[0]]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if len(seen) != len(switches):
            missing = sorted(set(switches) - seen)
            problems.append(f"switch graph disconnected: unreachable {missing}")

    return problems
