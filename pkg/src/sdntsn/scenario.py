"""Experiment description, network assembly and scenario runs."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .controlplane import (ControlTimeline, Controller, EditGcl, InjectEditFailure, ProbeConfig,
                           RunLog)
from .engine import RngStream, Simulator, format_duration, parse_duration
from .ethernet import Link, PortRef, mac_to_int, mac_to_str
from .hosts import Host, LatencyRecord, TrafficSource
from .messages import TalkerAdvertise
from .switch import ConfigError, FlowEntry, SwitchConfig, Switch
from .trace import trace_to_csv


class ScenarioError(ValueError):
    """The scenario is inconsistent; raised before any event executes."""


@dataclass(frozen=True)
class LinkSpec:
    a: PortRef
    b: PortRef
    bitrate: int = 100_000_000
    propagation_delay: int = 0


@dataclass(frozen=True)
class SrpTalker:
    host: str
    at: int
    advert: TalkerAdvertise


@dataclass(frozen=True)
class SrpListener:
    host: str
    stream_id: str


@dataclass
class ScenarioConfig:
    name: str
    hosts: dict[str, int]
    switches: dict[str, SwitchConfig]
    links: list[LinkSpec]
    traffic: list[TrafficSource] = field(default_factory=list)
    timeline: ControlTimeline = field(default_factory=ControlTimeline)
    duration: int = 1_000_000_000
    seed: int = 1
    controller: str | None = "controller"
    control_latency: int = 0
    srp_talkers: list[SrpTalker] = field(default_factory=list)
    srp_listeners: list[SrpListener] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    # -- validation -----------------------------------------------------------------------
    def validate(self) -> None:
        nodes = set(self.hosts) | set(self.switches)
        if len(nodes) != len(self.hosts) + len(self.switches):
            raise ScenarioError("host and switch names overlap")
        used: set[PortRef] = set()
        adjacency: dict[str, set[str]] = {n: set() for n in nodes}
        for ln in self.links:
            if ln.bitrate <= 0 or ln.propagation_delay < 0:
                raise ScenarioError(f"bad link parameters {ln}")
            for end in (ln.a, ln.b):
                if end.node not in nodes:
                    raise ScenarioError(f"link endpoint {end} names unknown node")
                if end.node in self.switches and end.port not in self.switches[end.node].ports:
                    raise ScenarioError(f"{end.node} has no port {end.port}")
                if end.node in self.hosts and end.port != 0:
                    raise ScenarioError(f"hosts have a single port 0, got {end}")
                if end in used:
                    raise ScenarioError(f"port {end} is attached to more than one link")
                used.add(end)
            adjacency[ln.a.node].add(ln.b.node)
            adjacency[ln.b.node].add(ln.a.node)
        if nodes:
            seen, todo = set(), deque([sorted(nodes)[0]])
            while todo:
                n = todo.popleft()
                if n not in seen:
                    seen.add(n)
                    todo.extend(adjacency[n] - seen)
            if seen != nodes:
                raise ScenarioError(f"topology is not connected: {sorted(nodes - seen)} unreachable")
        for h in self.hosts:
            if PortRef(h, 0) not in used:
                raise ScenarioError(f"host {h} is not attached")
        for name, sw in self.switches.items():
            if sw.name != name:
                raise ScenarioError(f"switch config name {sw.name!r} filed under {name!r}")
            try:
                sw.validate()
            except ConfigError as exc:
                raise ScenarioError(str(exc)) from None
        for src in self.traffic:
            if src.host not in self.hosts:
                raise ScenarioError(f"traffic source on unknown host {src.host!r}")
        flows = [s.flow_id or s.host for s in self.traffic]
        if len(set(flows)) != len(flows):
            raise ScenarioError("flow ids must be unique")
        for _, action in self.timeline:
            if action.switch not in self.switches:
                raise ScenarioError(f"timeline targets unknown switch {action.switch!r}")
            if self.controller is None:
                raise ScenarioError("timeline requires a controller")
            if isinstance(action, EditGcl):
                bad = set(action.ports) - set(self.switches[action.switch].ports)
                if bad:
                    raise ScenarioError(f"timeline edits unknown ports {sorted(bad)} on {action.switch}")
        for t in self.srp_talkers:
            if t.host not in self.hosts:
                raise ScenarioError(f"SRP talker on unknown host {t.host!r}")
        for ls in self.srp_listeners:
            if ls.host not in self.hosts:
                raise ScenarioError(f"SRP listener on unknown host {ls.host!r}")
        if self.duration <= 0:
            raise ScenarioError("duration must be > 0")

    # -- convenience ----------------------------------------------------------------------
    def with_params(self, **kw) -> "ScenarioConfig":
        """Copy with top-level fields replaced; ``processing_delay``/``policy`` apply to every switch."""
        delay = kw.pop("processing_delay", None)
        policy = kw.pop("policy", None)
        cfg = replace(self, **kw)
        if delay is not None or policy is not None:
            cfg.switches = {
                n: replace(sw, processing_delay=sw.processing_delay if delay is None else delay,
                           policy=sw.policy if policy is None else policy)
                for n, sw in self.switches.items()}
        return cfg

    # -- file form ------------------------------------------------------------------------
    def to_dict(self) -> dict:
        d: dict = {"name": self.name}
        if self.notes:
            d["notes"] = list(self.notes)
        d["params"] = {
            "duration": format_duration(self.duration),
            "seed": self.seed,
            "controller": self.controller,
            "control_latency": format_duration(self.control_latency),
        }
        d["nodes"] = {
            "hosts": {h: mac_to_str(m) for h, m in self.hosts.items()},
            "switches": {n: {
                "ports": list(sw.ports), "policy": sw.policy,
                "processing_delay": format_duration(sw.processing_delay),
                "cycle": format_duration(sw.cycle)} for n, sw in self.switches.items()},
        }
        d["links"] = [{"a": str(ln.a), "b": str(ln.b), "bitrate": ln.bitrate,
                       "propagation_delay": format_duration(ln.propagation_delay)}
                      for ln in self.links]
        d["gcl"] = {n: {int(p): t for p, t in sorted(sw.gcls.items())}
                    for n, sw in self.switches.items() if sw.gcls}
        d["flows"] = {n: [e.to_text() for e in sw.flows]
                      for n, sw in self.switches.items() if sw.flows}
        d["traffic"] = [{
            "host": s.host, "flow_id": s.flow_id, "pcp": s.pcp, "size": s.wire_size,
            "period": format_duration(s.period), "jitter": format_duration(s.jitter_stddev),
            "start": format_duration(s.start_at), "offset": format_duration(s.offset),
            "dst_mac": mac_to_str(s.dst_mac)} for s in self.traffic]
        tl = []
        for at, a in self.timeline:
            item = {"at": format_duration(at), "switch": a.switch}
            if isinstance(a, EditGcl):
                item.update(action="edit-gcl", ports=list(a.ports), gcl=a.gcl)
            elif isinstance(a, InjectEditFailure):
                item["action"] = "inject-edit-failure"
            else:
                item["action"] = "get-config"
            tl.append(item)
        d["timeline"] = tl
        if self.srp_talkers or self.srp_listeners:
            d["srp"] = {
                "talkers": [{"host": t.host, "at": format_duration(t.at),
                             "stream_id": t.advert.stream_id,
                             "dst_mac": mac_to_str(t.advert.dst_mac), "pcp": t.advert.pcp,
                             "max_frame": t.advert.max_frame_size,
                             "interval": format_duration(t.advert.interval)}
                            for t in self.srp_talkers],
                "listeners": [{"host": ls.host, "stream_id": ls.stream_id}
                              for ls in self.srp_listeners],
            }
        return d

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None, width=100)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        try:
            return cls._from_dict(d)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"malformed scenario: {exc!r}") from None

    @classmethod
    def _from_dict(cls, d: dict) -> "ScenarioConfig":
        params = d.get("params", {})
        nodes = d["nodes"]
        hosts = {h: mac_to_int(m) for h, m in nodes.get("hosts", {}).items()}
        gcl = d.get("gcl", {}) or {}
        flows = d.get("flows", {}) or {}
        switches = {}
        for n, s in (nodes.get("switches") or {}).items():
            ports = tuple(int(p) for p in s["ports"])
            switches[n] = SwitchConfig(
                name=n, ports=ports, policy=s.get("policy", "gate-open-at-start"),
                processing_delay=parse_duration(s.get("processing_delay", 0)),
                cycle=parse_duration(s.get("cycle", "1ms")),
                gcls=_expand_gcl(gcl.get(n, {}), ports),
                flows=[FlowEntry.parse(f) for f in flows.get(n, [])])
        links = [LinkSpec(PortRef.parse(ln["a"]), PortRef.parse(ln["b"]),
                          int(ln.get("bitrate", 100_000_000)),
                          parse_duration(ln.get("propagation_delay", 0)))
                 for ln in d.get("links", [])]
        traffic = [TrafficSource(
            host=t["host"], pcp=int(t["pcp"]), wire_size=int(t["size"]),
            period=parse_duration(t["period"]), dst_mac=mac_to_int(t["dst_mac"]),
            flow_id=t.get("flow_id", ""), jitter_stddev=parse_duration(t.get("jitter", 0)),
            start_at=parse_duration(t.get("start", 0)), offset=parse_duration(t.get("offset", 0)))
            for t in d.get("traffic", [])]
        items = []
        for item in d.get("timeline", []) or []:
            at, sw, kind = parse_duration(item["at"]), item["switch"], item["action"]
            if kind == "edit-gcl":
                ports = item.get("ports", "*")
                if ports == "*":
                    if sw not in switches:
                        raise ScenarioError(f"timeline targets unknown switch {sw!r}")
                    ports = switches[sw].ports
                items.append((at, EditGcl(sw, tuple(int(p) for p in ports), item["gcl"])))
            elif kind == "inject-edit-failure":
                items.append((at, InjectEditFailure(sw)))
            elif kind == "get-config":
                items.append((at, ProbeConfig(sw)))
            else:
                raise ScenarioError(f"unknown timeline action {kind!r}")
        srp = d.get("srp", {}) or {}
        talkers = [SrpTalker(t["host"], parse_duration(t.get("at", 0)), TalkerAdvertise(
            t["stream_id"], mac_to_int(t["dst_mac"]), int(t.get("pcp", 5)),
            int(t.get("max_frame", 1522)), parse_duration(t.get("interval", "1ms"))))
            for t in srp.get("talkers", [])]
        listeners = [SrpListener(ls["host"], ls["stream_id"]) for ls in srp.get("listeners", [])]
        try:
            timeline = ControlTimeline(items)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
        return cls(
            name=d.get("name", "scenario"), hosts=hosts, switches=switches, links=links,
            traffic=traffic, timeline=timeline,
            duration=parse_duration(params.get("duration", "1s")),
            seed=int(params.get("seed", 1)), controller=params.get("controller", "controller"),
            control_latency=parse_duration(params.get("control_latency", 0)),
            srp_talkers=talkers, srp_listeners=listeners, notes=list(d.get("notes", [])))

    @classmethod
    def from_yaml(cls, text: str) -> "ScenarioConfig":
        return cls.from_dict(yaml.safe_load(text))

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_yaml(Path(path).read_text())


def _expand_gcl(spec, ports) -> dict[int, str]:
    if isinstance(spec, str):
        return {p: spec for p in ports}
    out = {}
    for key, text in spec.items():
        if key == "*":
            out.update({p: text for p in ports})
        else:
            out[int(key)] = text
    return out


def host_seed(seed: int, index: int) -> int:
    """Independent per-host stream seed derived from the scenario seed."""
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class Network:
    """All simulator components for one ScenarioConfig, wired and ready to run."""

    def __init__(self, cfg: ScenarioConfig, record_tx: bool = False):
        cfg.validate()
        self.cfg = cfg
        self.sim = Simulator()
        self.trace: list[LatencyRecord] = []
        self.switches: dict[str, Switch] = {}
        self.hosts: dict[str, Host] = {}
        self.links: list[Link] = []
        for i, (name, mac) in enumerate(sorted(cfg.hosts.items())):
            self.hosts[name] = Host(self.sim, name, mac, RngStream(host_seed(cfg.seed, i)),
                                    self.trace.append)
        for name, sc in cfg.switches.items():
            self.switches[name] = Switch(self.sim, name, sc.ports, sc.policy, sc.processing_delay,
                                         sc.cycle, record=record_tx)
        for spec in cfg.links:
            link = Link(self.sim, spec.a, spec.b, spec.bitrate, spec.propagation_delay)
            self.links.append(link)
            for end in (spec.a, spec.b):
                if end.node in self.hosts:
                    self.hosts[end.node].attach(link)
                else:
                    self.switches[end.node].attach(end.port, link)
        for name, sc in cfg.switches.items():
            self.switches[name].import_launch_config(sc)
        self.controller: Controller | None = None
        if cfg.controller:
            self.controller = Controller(self.sim, cfg.controller)
            for name in sorted(self.switches):
                self.controller.connect(self.switches[name], cfg.control_latency)
            self.controller.fault_injector = self._arm_failure
            self.controller.start()
            self.controller.gcl_programmer.program(cfg.timeline)
        for src in cfg.traffic:
            self.hosts[src.host].add_source(src)
        for ls in cfg.srp_listeners:
            self.hosts[ls.host].subscribe(ls.stream_id)
        for t in cfg.srp_talkers:
            self.hosts[t.host].advertise(t.at, t.advert)

    def _arm_failure(self, switch: str) -> None:
        self.switches[switch].netconf.fail_next_edit = True

    @property
    def now(self) -> int:
        return self.sim.now

    def run_until(self, t: int) -> None:
        self.sim.run_until(t)

    def run(self) -> "RunResult":
        self.sim.run_until(self.cfg.duration)
        return RunResult(self.trace, self.controller.log if self.controller else RunLog(), self)

    # -- accounting -----------------------------------------------------------------------
    def frames_sent(self) -> int:
        return sum(h.sent for h in self.hosts.values())

    def frames_received(self) -> int:
        return sum(h.received for h in self.hosts.values())

    def frames_dropped(self) -> int:
        return sum(sum(sw.dropped.values()) for sw in self.switches.values())

    def frames_in_network(self) -> int:
        """Data frames queued at ports, awaiting relay, or on a wire right now."""
        queued = sum(sw.queued() for sw in self.switches.values())
        queued += sum(h.port.queued() for h in self.hosts.values())
        relays = sum(sw.pending_relays for sw in self.switches.values())
        wire = sum(1 for e in self.sim.queued_events()
                   if isinstance(e.payload, tuple) and e.payload[0] == "rx"
                   and not e.payload[1].is_srp)
        return queued + relays + wire


@dataclass
class RunResult:
    trace: list[LatencyRecord]
    log: RunLog
    network: Network

    def trace_csv(self) -> str:
        return trace_to_csv(self.trace)

    def log_csv(self) -> str:
        return self.log.to_csv()

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace_path, log_path = out / "trace.csv", out / "control_log.csv"
        trace_path.write_text(self.trace_csv())
        log_path.write_text(self.log_csv())
        return trace_path, log_path


def run(cfg: ScenarioConfig, record_tx: bool = False) -> RunResult:
    return Network(cfg, record_tx).run()
