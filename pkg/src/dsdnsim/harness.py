"""Experiment orchestration: wires topology, data plane, controllers, guard,
and traffic into a deterministic discrete-event run; exports the prediction
dataset, metrics report, and telemetry.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from dsdnsim import dataplane, guard, metrics
from dsdnsim.classifier import BackendUnavailable, ParseFailure, Verdict, make_backend
from dsdnsim.config import RunSpec, ScenarioConfig, config_problems
from dsdnsim.controlplane import ADMIN_BLOCKED, ADMIN_UP, Controller, RoutingError, SyncMessage
from dsdnsim.dataplane import DataPlane, Outcome, SimPacket
from dsdnsim.features import PortWindow, monitored_ports, snapshot_delta
from dsdnsim.guard import GuardAction, PortGuardState
from dsdnsim.promptgen import ExemplarSet, build_prompt, load_exemplars, prompt_hash
from dsdnsim.scheduler import Scheduler
from dsdnsim.topo import Domain, NodeId, Topology
from dsdnsim.traffic import Emission, schedule_attack, schedule_normal

logger = logging.getLogger(__name__)

CSV_HEADER = [
    "t_window_start_s",
    "domain_id",
    "switch",
    "port_no",
    "host",
    "rx_packets",
    "rx_bytes",
    "tx_packets",
    "tx_bytes",
    "prompt_hash",
    "prediction",
    "label",
    "attack_kind",
    "backend_id",
    "latency_s",
]

ATTACK_KIND_NONE = "none"


class ConfigError(ValueError):
    """Scenario config failed validation; .problems lists every finding."""

    def __init__(self, problems: list[str]) -> None:
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class PredictionRecord:
    t_window_start_s: float
    domain_id: int
    switch: str
    port_no: int
    host: str
    rx_packets: int
    rx_bytes: int
    tx_packets: int
    tx_bytes: int
    prompt_hash: str
    prediction: int | None
    label: int
    attack_kind: str
    backend_id: str
    latency_s: float


@dataclass
class RunResult:
    name: str
    records: list[PredictionRecord]
    actions: list[GuardAction]
    sync_events: list[dict]
    sync_probes: list[dict]
    telemetry: list[metrics.TelemetrySeries]
    delivered_total: dict[str, dict[str, int]]
    delivered_by_sec: dict[str, dict[int, int]]
    attack_delivered_by_sec: dict[str, dict[int, int]]
    gaps: int
    unroutable_discards: int
    pktin_suppressed: int

    def series(self, metric: str, scope: str) -> metrics.TelemetrySeries:
        for s in self.telemetry:
            if s.metric == metric and s.scope == scope:
                return s
        raise KeyError(f"no series {metric}/{scope}")


class Simulation:
    """One run: a fresh data plane and control plane over a shared topology,
    driven by precomputed traffic streams."""

    def __init__(
        self,
        cfg: ScenarioConfig,
        run: RunSpec,
        topology: Topology,
        normal_stream: list[Emission],
        backend,
        exemplars: ExemplarSet,
    ) -> None:
        self.cfg = cfg
        self.run_spec = run
        self.topology = topology
        self.backend = backend
        self.exemplars = exemplars
        self.mitigation = run.mitigation if run.mitigation is not None else cfg.detection.mitigation

        self.sched = Scheduler()
        self.fabric = DataPlane(topology, pktin_bucket_s=cfg.sim.pktin_bucket_s)
        self.controllers: dict[int, Controller] = {
            d.domain_id: Controller(d, topology) for d in topology.domains
        }
        self._peers = {
            did: [self.controllers[o] for o in sorted(self.controllers) if o != did]
            for did in self.controllers
        }
        self._ctrl_of_switch: dict[NodeId, Controller] = {}
        for d in topology.domains:
            for sw in d.switches:
                self._ctrl_of_switch[sw] = self.controllers[d.domain_id]

        self._monitored: dict[int, list[tuple[NodeId, int, NodeId]]] = {
            d.domain_id: monitored_ports(topology, d) for d in topology.domains
        }
        self._prev_counters: dict[tuple[NodeId, int], dataplane.PortCounters] = {}
        self._prev_touch: dict[tuple[NodeId, int], dict[str, int]] = {}
        self.guards: dict[tuple[NodeId, int], PortGuardState] = {}
        for did, ports in self._monitored.items():
            for sw, port_no, h in ports:
                self._prev_counters[(sw, port_no)] = dataplane.PortCounters()
                self._prev_touch[(sw, port_no)] = {}
                self.guards[(sw, port_no)] = PortGuardState(sw, port_no, h)

        self.records: list[PredictionRecord] = []
        self.actions: list[GuardAction] = []
        self.gaps = 0
        self.sync_events: list[dict] = []
        self.sync_probes: list[dict] = []
        self._pending_sync: dict[int, list[dict]] = {}

        self.delivered_total: dict[NodeId, dict[str, int]] = {
            h: {"benign": 0, "attack": 0} for h in topology.all_hosts()
        }
        self.delivered_by_sec: dict[NodeId, dict[int, int]] = {h: {} for h in topology.all_hosts()}
        self.attack_delivered_by_sec: dict[NodeId, dict[int, int]] = {
            h: {} for h in topology.all_hosts()
        }

        self._normal_stream = normal_stream
        self._attack_stream: list[Emission] = []
        if cfg.sim.attacks_enabled:
            for spec in run.attacks:
                self._attack_stream += schedule_attack(spec, topology, cfg.sim.batch_tick_s)

    # -- setup -------------------------------------------------------------

    def execute(self) -> None:
        cfg = self.cfg.sim
        w = self.cfg.detection.window_len_s
        duration = cfg.duration_s

        # Monitor ticks go first so same-instant mitigation applies before
        # traffic scheduled at a window boundary.
        n_ticks = int(duration // w)
        for i in range(1, n_ticks + 1):
            t = i * w
            for d in self.topology.domains:
                self.sched.at(t, self._monitor_tick, d, t)

        t = 0.0
        k = 0
        while t < duration:
            for did in sorted(self.controllers):
                self.sched.at(t, self._sync_tick, self.controllers[did])
            k += 1
            t = k * cfg.sync_interval_s

        # Initial views start propagating at t=0.
        for did in sorted(self.controllers):
            self._register_mutation(did, self.controllers[did].local.version, 0.0)

        for e in self._normal_stream:
            self.sched.at(e.t, self._on_emission, e)
        for e in self._attack_stream:
            self.sched.at(e.t, self._on_emission, e)

        self.sched.run(duration)

    # -- control plane events ------------------------------------------------

    def _sync_tick(self, ctl: Controller) -> None:
        now = self.sched.now
        for peer, msg in ctl.sync_tick(now, self._peers[ctl.domain_id]):
            self.sched.at(now + self.cfg.sim.sync_latency_s, self._deliver_sync, peer, msg)

    def _deliver_sync(self, peer: Controller, msg: SyncMessage) -> None:
        now = self.sched.now
        adopted = peer.merge(msg)
        for domain_id, version in adopted:
            entries = self._pending_sync.get(domain_id)
            if not entries:
                continue
            finished = []
            for entry in entries:
                if entry["version"] <= version:
                    entry["remaining"].discard(peer.domain_id)
                    if not entry["remaining"]:
                        finished.append(entry)
                        self.sync_events.append(
                            {
                                "domain_id": domain_id,
                                "version": entry["version"],
                                "t_mutation": entry["t"],
                                "t_converged": now,
                                "delay_s": now - entry["t"],
                            }
                        )
            for entry in finished:
                entries.remove(entry)

    def _register_mutation(self, domain_id: int, version: int, t: float) -> None:
        remaining = {d for d in self.controllers if d != domain_id}
        if not remaining:
            return
        self._pending_sync.setdefault(domain_id, []).append(
            {"version": version, "t": t, "remaining": remaining}
        )
        probe_at = t + 2 * self.cfg.sim.sync_interval_s
        if version > 1 and probe_at <= self.cfg.sim.duration_s:
            self.sched.at(probe_at, self._sync_probe, domain_id, version, t)

    def _sync_probe(self, domain_id: int, version: int, t_event: float) -> None:
        views = [self.controllers[d].global_view for d in sorted(self.controllers)]
        equal = all(views[0].deep_equal(v) for v in views[1:])
        self.sync_probes.append(
            {
                "domain_id": domain_id,
                "version": version,
                "t_event": t_event,
                "t_checked": self.sched.now,
                "views_equal": equal,
            }
        )

    # -- data plane events -----------------------------------------------------

    def _on_emission(self, e: Emission) -> None:
        sw, port_no = self.topology.host_attachment(e.src)
        labels: tuple[int, ...] = ()
        if not e.fresh_flow:
            ctl = self.controllers[self.topology.domain_of_host(e.src).domain_id]
            labels = ctl.flow_cache.get((e.src, e.dst, e.proto), ())
        packet = SimPacket(
            src_host=e.src,
            dst_host=e.dst,
            proto=e.proto,
            size_bytes=e.size_bytes,
            labels=labels,
            is_attack=e.is_attack,
            count=e.count,
            fresh_flow=e.fresh_flow,
            spread_s=e.spread_s,
        )
        self._dispatch(sw, self.fabric.ingest(sw, port_no, packet, self.sched.now))

    def _arrive(self, sw: NodeId, port_no: int, packet: SimPacket) -> None:
        self._dispatch(sw, self.fabric.ingest(sw, port_no, packet, self.sched.now))

    def _dispatch(self, sw: NodeId, out: Outcome) -> None:
        now = self.sched.now
        if out.kind == dataplane.FORWARDED:
            self.sched.at(now + self.cfg.sim.hop_latency_s, self._arrive, out.next_switch, out.next_port_no, out.packet)
        elif out.kind == dataplane.DELIVERED:
            self._credit_delivery(out.host, out.packet, now + self.cfg.sim.hop_latency_s)
        elif out.kind == dataplane.PACKET_IN:
            ctl = self._ctrl_of_switch[sw]
            if out.pktin_count > 0:
                ctl.record_packet_ins(out.pktin_count, now)
                if out.reason == "no_route":
                    self.sched.at(now + self.cfg.sim.ctrl_latency_s, self._route_and_reinject, ctl, sw, out.packet)
            # misroutes and rate-suppressed arrivals are discarded
        # DROPPED needs no action: ingress was counted, nothing propagates.

    def _route_and_reinject(self, ctl: Controller, sw: NodeId, packet: SimPacket) -> None:
        try:
            labels = ctl.route_for(packet.src_host, packet.dst_host, packet.proto, packet.fresh_flow)
        except RoutingError:
            ctl.unroutable_discards += 1
            return
        out = self.fabric.forward(sw, replace(packet, labels=labels), self.sched.now)
        self._dispatch(sw, out)

    def _credit_delivery(self, h: NodeId, packet: SimPacket, t: float) -> None:
        sec = int(t)
        kind = "attack" if packet.is_attack else "benign"
        self.delivered_total[h][kind] += packet.count
        table = self.delivered_by_sec[h]
        table[sec] = table.get(sec, 0) + packet.count
        if packet.is_attack:
            atk = self.attack_delivered_by_sec[h]
            atk[sec] = atk.get(sec, 0) + packet.count

    # -- detection tick ----------------------------------------------------------

    def _monitor_tick(self, domain: Domain, t: float) -> None:
        w = self.cfg.detection.window_len_s
        port_rows = []
        for sw, port_no, h in self._monitored[domain.domain_id]:
            curr = self.fabric.read_counters(sw, port_no)
            window = snapshot_delta(sw, port_no, self._prev_counters[(sw, port_no)], curr, t - w, w)
            self._prev_counters[(sw, port_no)] = curr

            touch = self.fabric.read_attack_touch(sw, port_no)
            prev = self._prev_touch[(sw, port_no)]
            delta = {k: v - prev.get(k, 0) for k, v in touch.items() if v - prev.get(k, 0) > 0}
            self._prev_touch[(sw, port_no)] = touch
            label = 1 if delta else 0
            kind = max(delta, key=lambda k: (delta[k], k)) if delta else ATTACK_KIND_NONE
            port_rows.append((window, h, label, kind))

        prompts = [build_prompt(window, self.exemplars) for window, _, _, _ in port_rows]
        verdicts = self._classify(prompts)

        for (window, h, label, kind), prompt, verdict in zip(port_rows, prompts, verdicts):
            prediction = verdict.label if verdict is not None else None
            if verdict is None:
                self.gaps += 1
            if self.mitigation:
                state = self.guards[(window.switch, window.port_no)]
                actions = guard.on_window(
                    state,
                    window,
                    prediction,
                    t,
                    recovery_windows=self.cfg.detection.recovery_windows,
                    recovery_mode=self.cfg.detection.recovery_mode,
                )
                for action in actions:
                    self._apply_action(action)

            self.records.append(
                PredictionRecord(
                    t_window_start_s=window.window_start_s,
                    domain_id=domain.domain_id,
                    switch=str(window.switch),
                    port_no=window.port_no,
                    host=str(h),
                    rx_packets=window.rx_packets,
                    rx_bytes=window.rx_bytes,
                    tx_packets=window.tx_packets,
                    tx_bytes=window.tx_bytes,
                    prompt_hash=prompt_hash(prompt.text),
                    prediction=prediction,
                    label=label,
                    attack_kind=kind,
                    backend_id=verdict.backend_id if verdict else self._backend_id(),
                    latency_s=verdict.latency_s if verdict else 0.0,
                )
            )

    def _backend_id(self) -> str:
        return getattr(self.backend, "backend_id", "unknown")

    def _classify(self, prompts) -> list[Verdict | None]:
        parallel = self.cfg.detection.parallel_requests
        use_pool = parallel > 1 and getattr(self.backend, "endpoint", None) is not None

        def one(prompt):
            try:
                return self.backend.classify(prompt)
            except (BackendUnavailable, ParseFailure) as e:
                logger.warning("no verdict for a window: %s", e)
                return None

        if use_pool:
            with ThreadPoolExecutor(max_workers=parallel) as pool:
                return list(pool.map(one, prompts))
        return [one(p) for p in prompts]

    def _apply_action(self, action: GuardAction) -> None:
        now = self.sched.now
        ctl = self._ctrl_of_switch[action.switch]
        if action.kind == guard.INSTALL_DROP:
            self.fabric.install_drop(action.switch, action.port_no, now)
            version = ctl.set_port_admin(action.switch, action.port_no, ADMIN_BLOCKED)
        else:
            self.fabric.remove_drop(action.switch, action.port_no)
            version = ctl.set_port_admin(action.switch, action.port_no, ADMIN_UP)
        self._register_mutation(ctl.domain_id, version, now)
        self.actions.append(action)
        logger.info("t=%.1f %s %s:%d (%s)", now, action.kind, action.switch, action.port_no, action.host)

    # -- results ------------------------------------------------------------------

    def result(self) -> RunResult:
        return RunResult(
            name=self.run_spec.name,
            records=self.records,
            actions=self.actions,
            sync_events=self.sync_events,
            sync_probes=self.sync_probes,
            telemetry=self._build_telemetry() if self.cfg.sim.telemetry else [],
            delivered_total={str(h): dict(v) for h, v in sorted(self.delivered_total.items())},
            delivered_by_sec={str(h): dict(v) for h, v in sorted(self.delivered_by_sec.items())},
            attack_delivered_by_sec={
                str(h): dict(v) for h, v in sorted(self.attack_delivered_by_sec.items())
            },
            gaps=self.gaps,
            unroutable_discards=sum(c.unroutable_discards for c in self.controllers.values()),
            pktin_suppressed=self.fabric.pktin_suppressed,
        )

    def _build_telemetry(self) -> list[metrics.TelemetrySeries]:
        sim = self.cfg.sim
        duration = int(sim.duration_s)
        series: list[metrics.TelemetrySeries] = []
        for did in sorted(self.controllers):
            ctl = self.controllers[did]
            pktin = tuple((s, float(ctl.packet_in_by_sec.get(s, 0))) for s in range(duration))
            series.append(metrics.TelemetrySeries(metrics.METRIC_PACKET_IN_RATE, str(ctl.domain.controller), pktin))
            cpu = tuple(
                (s, min(100.0, sim.cpu_base_pct + sim.cpu_pct_per_pktin * v)) for s, v in pktin
            )
            series.append(metrics.TelemetrySeries(metrics.METRIC_CPU_PROXY, str(ctl.domain.controller), cpu))

            events = sorted(
                (e["t_converged"], e["delay_s"]) for e in self.sync_events if e["domain_id"] == did
            )
            samples = []
            value = 0.0
            i = 0
            for s in range(duration):
                while i < len(events) and events[i][0] < s + 1:
                    value = events[i][1]
                    i += 1
                samples.append((s, value))
            series.append(metrics.TelemetrySeries(metrics.METRIC_SYNC_DELAY, str(ctl.domain.controller), tuple(samples)))

        watched = sorted(
            {h for h in self.topology.all_hosts() if self.topology.role_of(h).endswith("server")}
            | {atk.target for atk in self.run_spec.attacks}
        )
        for h in watched:
            table = self.delivered_by_sec[h]
            samples = tuple((s, float(table.get(s, 0))) for s in range(duration))
            series.append(metrics.TelemetrySeries(metrics.METRIC_VICTIM_INGRESS, str(h), samples))
        return series


# Scenario-level API ----------------------------------------------------------


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    runs: list[RunResult]
    report: dict = field(default_factory=dict)

    @property
    def records(self) -> list[PredictionRecord]:
        return [r for run in self.runs for r in run.records]

    def run(self, name: str) -> RunResult:
        for r in self.runs:
            if r.name == name:
                return r
        raise KeyError(name)


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Execute every run of a scenario and export dataset/report/telemetry.

    Deterministic given (config, seed) under rule-based or replay backends:
    two invocations produce byte-identical dataset CSV and report JSON.
    """
    problems = config_problems(cfg)
    if problems:
        raise ConfigError(problems)

    topology = cfg.build_topology()
    normal_seed = cfg.sim.seed * 65537 + cfg.normal.rng_seed
    normal_spec = replace(cfg.normal, rng_seed=normal_seed)
    normal_stream = schedule_normal(normal_spec, topology, cfg.sim.duration_s)
    exemplars = load_exemplars(cfg.detection.exemplars)
    backend = make_backend(cfg.detection.backend, cfg.detection.window_len_s)

    results = []
    for run in cfg.runs:
        sim = Simulation(cfg, run, topology, normal_stream, backend, exemplars)
        sim.execute()
        results.append(sim.result())

    scenario = ScenarioResult(config=cfg, runs=results)
    scenario.report = _build_report(scenario)

    if cfg.export.dataset_csv:
        write_dataset(scenario.records, cfg.export.dataset_csv)
    if cfg.export.report_json:
        with open(cfg.export.report_json, "w") as f:
            f.write(report_json(scenario.report))
    if cfg.export.telemetry_csv:
        write_telemetry(scenario, cfg.export.telemetry_csv)
    return scenario


def _build_report(scenario: ScenarioResult) -> dict:
    pairs = [(r.prediction, r.label) for r in scenario.records]
    report = {
        "rows": len(scenario.records),
        "metrics": metrics.metrics_report(pairs),
        "runs": [],
    }
    for run in scenario.runs:
        report["runs"].append(
            {
                "name": run.name,
                "rows": len(run.records),
                "gaps": run.gaps,
                "actions": [
                    {
                        "t": a.t,
                        "action": a.kind,
                        "switch": str(a.switch),
                        "port_no": a.port_no,
                        "host": str(a.host),
                    }
                    for a in run.actions
                ],
                "sync_events": run.sync_events,
                "sync_probes": run.sync_probes,
                "deliveries": run.delivered_total,
                "unroutable_discards": run.unroutable_discards,
                "pktin_suppressed": run.pktin_suppressed,
                "telemetry": [metrics.summarize(s) for s in run.telemetry],
            }
        )
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# Dataset CSV -----------------------------------------------------------------


def _fmt(value: float) -> str:
    v = float(value)
    return str(int(v)) if v.is_integer() else repr(v)


def write_dataset(records: list[PredictionRecord], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    _fmt(r.t_window_start_s),
                    r.domain_id,
                    r.switch,
                    r.port_no,
                    r.host,
                    r.rx_packets,
                    r.rx_bytes,
                    r.tx_packets,
                    r.tx_bytes,
                    r.prompt_hash,
                    "" if r.prediction is None else r.prediction,
                    r.label,
                    r.attack_kind,
                    r.backend_id,
                    _fmt(r.latency_s),
                ]
            )


def read_dataset(path: str) -> tuple[list[PredictionRecord], int]:
    """Parse a dataset CSV; malformed rows are skipped and counted."""
    records: list[PredictionRecord] = []
    skipped = 0
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected dataset header: {header}")
        for row in reader:
            if len(row) != len(CSV_HEADER):
                skipped += 1
                continue
            try:
                records.append(
                    PredictionRecord(
                        t_window_start_s=float(row[0]),
                        domain_id=int(row[1]),
                        switch=row[2],
                        port_no=int(row[3]),
                        host=row[4],
                        rx_packets=int(row[5]),
                        rx_bytes=int(row[6]),
                        tx_packets=int(row[7]),
                        tx_bytes=int(row[8]),
                        prompt_hash=row[9],
                        prediction=None if row[10] == "" else int(row[10]),
                        label=int(row[11]),
                        attack_kind=row[12],
                        backend_id=row[13],
                        latency_s=float(row[14]),
                    )
                )
            except ValueError:
                skipped += 1
    return records, skipped


def write_verdict_file(records: list[PredictionRecord], path: str) -> None:
    """Dump (prompt_hash, prediction) rows for the replay backend."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["prompt_hash", "label"])
        for r in records:
            if r.prediction is not None:
                writer.writerow([r.prompt_hash, r.prediction])


def write_telemetry(scenario: ScenarioResult, path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["run", "metric", "scope", "t_s", "value"])
        for run in scenario.runs:
            for s in run.telemetry:
                for t, v in s.samples:
                    writer.writerow([run.name, s.metric, s.scope, t, _fmt(v)])


def replay_dataset(
    csv_path: str,
    backend,
    exemplars: ExemplarSet | None = None,
    window_len_s: float = 10.0,
) -> dict:
    """Rebuild each row's prompt from its four features, classify it with the
    given backend, and score against the stored labels."""
    exemplars = exemplars or load_exemplars("builtin")
    records, skipped = read_dataset(csv_path)
    pairs: list[tuple[int | None, int]] = []
    for r in records:
        window = PortWindow(
            switch=NodeId.parse(r.switch),
            port_no=r.port_no,
            window_start_s=r.t_window_start_s,
            window_len_s=window_len_s,
            rx_packets=r.rx_packets,
            rx_bytes=r.rx_bytes,
            tx_packets=r.tx_packets,
            tx_bytes=r.tx_bytes,
        )
        prompt = build_prompt(window, exemplars)
        try:
            verdict = backend.classify(prompt)
            pairs.append((verdict.label, r.label))
        except (BackendUnavailable, ParseFailure):
            pairs.append((None, r.label))
    report = metrics.metrics_report(pairs)
    report["rows"] = len(records)
    report["skipped"] = skipped
    return report
