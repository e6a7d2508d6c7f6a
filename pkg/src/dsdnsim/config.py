"""Scenario configuration: JSON schema, defaults, and validation.

A scenario is one topology plus one or more runs; each run has its own attack
schedule and executes in a fresh simulation. See README for the full schema.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from dsdnsim import topo
from dsdnsim.topo import NodeId, Topology
from dsdnsim.traffic import (
    ATTACK_KINDS,
    DEFAULT_FLOOD_BYTES,
    SPLIT_AGGREGATE,
    AttackSpec,
    NormalTrafficSpec,
    attack_problems,
)

DEFAULT_TESTBED_ROLES = {
    "h5": topo.ROLE_HTTP_SERVER,
    "h6": topo.ROLE_TCP_SERVER,
    "h7": topo.ROLE_UDP_SERVER,
}


@dataclass
class TopologyConfig:
    domains: int = 4
    hosts_per_domain: int = 4
    wiring: str = "ring"
    roles: dict[str, str] = field(default_factory=dict)


@dataclass
class DetectionConfig:
    window_len_s: float = 10.0
    recovery_windows: int = 3
    recovery_mode: str = "inactivity"
    mitigation: bool = True
    backend: dict = field(default_factory=lambda: {"kind": "threshold_oracle"})
    exemplars: object = "builtin"
    parallel_requests: int = 4


@dataclass
class SimConfig:
    duration_s: float = 600.0
    seed: int = 7
    telemetry: bool = True
    attacks_enabled: bool = True
    batch_tick_s: float = 0.1
    hop_latency_s: float = 0.001
    ctrl_latency_s: float = 0.002
    sync_interval_s: float = 1.0
    sync_latency_s: float = 0.002
    pktin_bucket_s: float = 0.01
    cpu_base_pct: float = 2.0
    cpu_pct_per_pktin: float = 0.9


@dataclass
class ExportConfig:
    dataset_csv: str | None = None
    report_json: str | None = None
    telemetry_csv: str | None = None


@dataclass
class RunSpec:
    name: str
    attacks: list[AttackSpec] = field(default_factory=list)
    mitigation: bool | None = None  # None = inherit detection.mitigation


@dataclass
class ScenarioConfig:
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    normal: NormalTrafficSpec = field(default_factory=NormalTrafficSpec)
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    export: ExportConfig = field(default_factory=ExportConfig)
    runs: list[RunSpec] = field(default_factory=lambda: [RunSpec(name="run")])

    def build_topology(self) -> Topology:
        """Topology with server roles from config and attacker roles derived
        from the attack schedule (attackers never generate client traffic,
        whether or not attacks are enabled, so baseline runs stay
        comparable)."""
        roles = dict(self.topology.roles)
        if not roles:
            n_hosts = self.topology.domains * self.topology.hosts_per_domain
            roles = {h: r for h, r in DEFAULT_TESTBED_ROLES.items() if int(h[1:]) <= n_hosts}
        for run in self.runs:
            for atk in run.attacks:
                roles.setdefault(str(atk.target), DEFAULT_TESTBED_ROLES.get(str(atk.target), topo.ROLE_CLIENT))
                for a in atk.attackers:
                    roles[str(a)] = topo.ROLE_ATTACKER
        return topo.build_topology(
            self.topology.domains,
            self.topology.hosts_per_domain,
            wiring=self.topology.wiring,
            host_roles=roles,
        )


def _attack_from_dict(d: dict) -> AttackSpec:
    kind = d["kind"]
    return AttackSpec(
        kind=kind,
        attackers=tuple(sorted(NodeId.parse(a) for a in d["attackers"])),
        target=NodeId.parse(d["target"]),
        rate_pps=int(d["rate_pps"]),
        packet_bytes=int(d.get("packet_bytes", DEFAULT_FLOOD_BYTES.get(kind, 64))),
        start_s=float(d.get("start_s", 0.0)),
        duration_s=float(d.get("duration_s", 0.0)),
        rate_split=d.get("rate_split", SPLIT_AGGREGATE),
    )


def _normal_from_dict(d: dict) -> NormalTrafficSpec:
    base = NormalTrafficSpec()
    return NormalTrafficSpec(
        rng_seed=int(d.get("rng_seed", base.rng_seed)),
        flow_interarrival_s=float(d.get("flow_interarrival_s", base.flow_interarrival_s)),
        warmup_s=float(d.get("warmup_s", base.warmup_s)),
        mix={k: float(v) for k, v in d.get("mix", base.mix).items()},
    )


def scenario_from_dict(d: dict) -> ScenarioConfig:
    cfg = ScenarioConfig()
    t = d.get("topology", {})
    cfg.topology = TopologyConfig(
        domains=int(t.get("domains", 4)),
        hosts_per_domain=int(t.get("hosts_per_domain", 4)),
        wiring=t.get("wiring", "ring"),
        roles=dict(t.get("roles", {})),
    )
    cfg.normal = _normal_from_dict(d.get("normal", {}))

    det = d.get("detection", {})
    base_det = DetectionConfig()
    cfg.detection = DetectionConfig(
        window_len_s=float(det.get("window_len_s", base_det.window_len_s)),
        recovery_windows=int(det.get("recovery_windows", base_det.recovery_windows)),
        recovery_mode=det.get("recovery_mode", base_det.recovery_mode),
        mitigation=bool(det.get("mitigation", base_det.mitigation)),
        backend=dict(det.get("backend", base_det.backend)),
        exemplars=det.get("exemplars", "builtin"),
        parallel_requests=int(det.get("parallel_requests", base_det.parallel_requests)),
    )

    s = d.get("sim", {})
    base_sim = SimConfig()
    cfg.sim = SimConfig(
        duration_s=float(s.get("duration_s", base_sim.duration_s)),
        seed=int(s.get("seed", base_sim.seed)),
        telemetry=bool(s.get("telemetry", base_sim.telemetry)),
        attacks_enabled=bool(s.get("attacks_enabled", base_sim.attacks_enabled)),
        batch_tick_s=float(s.get("batch_tick_s", base_sim.batch_tick_s)),
        hop_latency_s=float(s.get("hop_latency_s", base_sim.hop_latency_s)),
        ctrl_latency_s=float(s.get("ctrl_latency_s", base_sim.ctrl_latency_s)),
        sync_interval_s=float(s.get("sync_interval_s", base_sim.sync_interval_s)),
        sync_latency_s=float(s.get("sync_latency_s", base_sim.sync_latency_s)),
        pktin_bucket_s=float(s.get("pktin_bucket_s", base_sim.pktin_bucket_s)),
        cpu_base_pct=float(s.get("cpu_base_pct", base_sim.cpu_base_pct)),
        cpu_pct_per_pktin=float(s.get("cpu_pct_per_pktin", base_sim.cpu_pct_per_pktin)),
    )

    e = d.get("export", {})
    cfg.export = ExportConfig(
        dataset_csv=e.get("dataset_csv"),
        report_json=e.get("report_json"),
        telemetry_csv=e.get("telemetry_csv"),
    )

    if "runs" in d:
        cfg.runs = [
            RunSpec(
                name=r.get("name", f"run{i + 1}"),
                attacks=[_attack_from_dict(a) for a in r.get("attacks", [])],
                mitigation=r.get("mitigation"),
            )
            for i, r in enumerate(d["runs"])
        ]
    else:
        cfg.runs = [RunSpec(name="run", attacks=[_attack_from_dict(a) for a in d.get("attacks", [])])]
    return cfg


def load_scenario(path: str) -> ScenarioConfig:
    with open(path) as f:
        return scenario_from_dict(json.load(f))


def config_problems(cfg: ScenarioConfig) -> list[str]:
    """Every validation failure, collected before any simulation starts."""
    problems: list[str] = []
    if cfg.detection.window_len_s <= 0:
        problems.append("detection.window_len_s must be positive")
    if cfg.detection.recovery_windows < 1:
        problems.append("detection.recovery_windows must be at least 1")
    if cfg.detection.recovery_mode not in ("inactivity", "fixed"):
        problems.append(f"unknown recovery_mode {cfg.detection.recovery_mode!r}")
    if cfg.sim.duration_s < 0:
        problems.append("sim.duration_s must be non-negative")
    if any(w < 0 for w in cfg.normal.mix.values()) or sum(cfg.normal.mix.values()) <= 0:
        problems.append("normal.mix weights must be non-negative and sum > 0")

    try:
        topology = cfg.build_topology()
    except (ValueError, KeyError) as e:
        problems.append(f"topology: {e}")
        return problems
    problems += [f"topology: {p}" for p in topo.validate(topology)]

    names = {run.name for run in cfg.runs}
    if len(names) != len(cfg.runs):
        problems.append("run names must be unique")
    for run in cfg.runs:
        for atk in run.attacks:
            problems += [f"run {run.name}: {p}" for p in attack_problems(atk, topology)]
            if atk.start_s + atk.duration_s > cfg.sim.duration_s:
                problems.append(f"run {run.name}: attack extends past sim.duration_s")
    return problems


def config_warnings(cfg: ScenarioConfig) -> list[str]:
    warnings = []
    if cfg.sim.duration_s % cfg.detection.window_len_s != 0:
        warnings.append("sim.duration_s is not a multiple of the window length; the tail is never scored")
    return warnings
