"""Programmable real-time switch: flow-table relay, SR table, 802.1Qbv egress
ports, a NetConf server for the GCL datastore and an OpenFlow agent."""
from __future__ import annotations

import configparser
import io
import logging
from collections import Counter
from dataclasses import dataclass, field

from .engine import Simulator
from .ethernet import Frame, Link, PortRef, mac_to_int, mac_to_str
from .messages import (EditConfig, FeaturesReply, FeaturesRequest, FlowMod, GetConfig, Hello,
                       ListenerReady, NetconfHello, PacketIn, PacketOut, Rpc, RpcReply,
                       TalkerAdvertise)
from .qbv import GATE_OPEN_AT_START, POLICIES, GateControlList, GclError, QbvPort

log = logging.getLogger(__name__)

OUTPUT, TO_CONTROLLER, DROP = "output", "controller", "drop"


class ConfigError(ValueError):
    """Invalid launch configuration or NetConf payload."""


@dataclass(frozen=True)
class FlowMatch:
    in_port: int | None = None
    dst_mac: int | None = None
    ethertype: int | None = None
    pcp: int | None = None

    def matches(self, frame: Frame, in_port: int) -> bool:
        return ((self.in_port is None or self.in_port == in_port)
                and (self.dst_mac is None or self.dst_mac == frame.dst_mac)
                and (self.ethertype is None or self.ethertype == frame.ethertype)
                and (self.pcp is None or self.pcp == frame.pcp))

    def to_text(self) -> str:
        return " ".join([
            f"in_port={'*' if self.in_port is None else self.in_port}",
            f"dst_mac={'*' if self.dst_mac is None else mac_to_str(self.dst_mac)}",
            f"ethertype={'*' if self.ethertype is None else f'0x{self.ethertype:04x}'}",
            f"pcp={'*' if self.pcp is None else self.pcp}",
        ])


@dataclass(frozen=True)
class FlowAction:
    kind: str
    port: int | None = None

    def __post_init__(self):
        if self.kind not in (OUTPUT, TO_CONTROLLER, DROP):
            raise ConfigError(f"unknown action {self.kind!r}")
        if (self.kind == OUTPUT) != (self.port is not None):
            raise ConfigError("only output actions carry a port")

    @classmethod
    def output(cls, port: int) -> "FlowAction":
        return cls(OUTPUT, port)

    @classmethod
    def parse(cls, text: str) -> "FlowAction":
        kind, _, port = text.strip().partition(":")
        return cls(kind, int(port)) if kind == OUTPUT else cls(kind)

    def to_text(self) -> str:
        return f"output:{self.port}" if self.kind == OUTPUT else self.kind


@dataclass
class FlowEntry:
    priority: int
    match: FlowMatch
    actions: tuple[FlowAction, ...]
    entry_id: int = -1
    packet_count: int = 0
    byte_count: int = 0

    def to_text(self) -> str:
        acts = ",".join(a.to_text() for a in self.actions) or DROP
        return f"priority={self.priority} {self.match.to_text()} actions={acts}"

    @classmethod
    def parse(cls, text: str) -> "FlowEntry":
        fields = dict(tok.split("=", 1) for tok in text.split())
        def opt(key, conv):
            raw = fields.get(key, "*")
            return None if raw == "*" else conv(raw)
        match = FlowMatch(opt("in_port", int), opt("dst_mac", mac_to_int),
                          opt("ethertype", lambda s: int(s, 0)), opt("pcp", int))
        actions = tuple(FlowAction.parse(a) for a in fields.get("actions", DROP).split(","))
        return cls(int(fields["priority"]), match, actions)


class FlowTable:
    """Prioritized match-action table.  Misses return ``None`` (caller drops)."""

    def __init__(self):
        self.entries: list[FlowEntry] = []
        self._next_id = 0

    def add(self, entry: FlowEntry) -> FlowEntry:
        for i, old in enumerate(self.entries):
            if old.priority == entry.priority and old.match == entry.match:
                entry.entry_id = old.entry_id
                self.entries[i] = entry
                return entry
        entry.entry_id = self._next_id
        self._next_id += 1
        self.entries.append(entry)
        self.entries.sort(key=lambda e: (-e.priority, e.entry_id))
        return entry

    def lookup(self, frame: Frame, in_port: int) -> FlowEntry | None:
        for entry in self.entries:
            if entry.match.matches(frame, in_port):
                return entry
        return None

    def by_dst(self, dst_mac: int) -> list[FlowEntry]:
        return [e for e in self.entries if e.match.dst_mac == dst_mac]

    def __len__(self):
        return len(self.entries)


@dataclass
class SrTableEntry:
    stream_id: str
    dst_mac: int
    pcp: int
    talker_port: int
    listener_ports: set[int] = field(default_factory=set)

    def to_text(self) -> str:
        listeners = ",".join(str(p) for p in sorted(self.listener_ports)) or "-"
        return (f"dst_mac={mac_to_str(self.dst_mac)} pcp={self.pcp} "
                f"talker_port={self.talker_port} listener_ports={listeners}")

    @classmethod
    def parse(cls, stream_id: str, text: str) -> "SrTableEntry":
        f = dict(tok.split("=", 1) for tok in text.split())
        listeners = set() if f["listener_ports"] == "-" else {
            int(p) for p in f["listener_ports"].split(",")}
        entry = cls(stream_id, mac_to_int(f["dst_mac"]), int(f["pcp"]),
                    int(f["talker_port"]), listeners)
        if entry.talker_port in entry.listener_ports:
            raise ConfigError(f"stream {stream_id}: talker port is also a listener port")
        return entry


def parse_gcl_payload(text: str) -> dict[int, str]:
    """``"1=G:15;Y:860;R:125 5=R:10;..."`` -> ``{1: "G:15;...", 5: "R:10;..."}``."""
    out: dict[int, str] = {}
    for token in text.split():
        port, sep, gcl = token.partition("=")
        if not sep or not gcl:
            raise ConfigError(f"malformed payload token {token!r}")
        try:
            out[int(port)] = gcl
        except ValueError:
            raise ConfigError(f"bad port in payload token {token!r}") from None
    if not out:
        raise ConfigError("empty edit-config payload")
    return out


def format_gcl_payload(gcls: dict[int, str]) -> str:
    return " ".join(f"{p}={gcls[p]}" for p in sorted(gcls))


@dataclass
class SwitchConfig:
    """Launch configuration: everything needed to bring a switch up at t = 0."""

    name: str
    ports: tuple[int, ...]
    policy: str = GATE_OPEN_AT_START
    processing_delay: int = 0
    cycle: int = 1_000_000
    gcls: dict[int, str] = field(default_factory=dict)
    flows: list[FlowEntry] = field(default_factory=list)
    sr_entries: list[SrTableEntry] = field(default_factory=list)

    def validate(self) -> None:
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}")
        ports = set(self.ports)
        for port, text in self.gcls.items():
            if port not in ports:
                raise ConfigError(f"{self.name}: GCL for unknown port {port}")
            try:
                GateControlList.parse(text, self.cycle)
            except GclError as exc:
                raise ConfigError(f"{self.name} port {port}: {exc}") from None
        for entry in self.flows:
            if entry.match.in_port is not None and entry.match.in_port not in ports:
                raise ConfigError(f"{self.name}: flow matches unknown port {entry.match.in_port}")
            for act in entry.actions:
                if act.kind == OUTPUT and act.port not in ports:
                    raise ConfigError(f"{self.name}: flow outputs to unknown port {act.port}")
        for sr in self.sr_entries:
            if sr.talker_port not in ports or not sr.listener_ports <= ports:
                raise ConfigError(f"{self.name}: SR entry {sr.stream_id} names unknown port")

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["switch"] = {
            "name": self.name,
            "ports": ",".join(str(p) for p in self.ports),
            "policy": self.policy,
            "processing_delay_ns": str(self.processing_delay),
            "cycle_ns": str(self.cycle),
        }
        cp["gcl"] = {str(p): self.gcls[p] for p in sorted(self.gcls)}
        cp["flows"] = {str(i): e.to_text() for i, e in enumerate(self.flows)}
        cp["sr"] = {e.stream_id: e.to_text() for e in self.sr_entries}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "SwitchConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
            sw = cp["switch"]
            cfg = cls(
                name=sw["name"],
                ports=tuple(int(p) for p in sw["ports"].split(",") if p),
                policy=sw.get("policy", GATE_OPEN_AT_START),
                processing_delay=int(sw.get("processing_delay_ns", "0")),
                cycle=int(sw.get("cycle_ns", "1000000")),
                gcls={int(p): v for p, v in cp["gcl"].items()} if cp.has_section("gcl") else {},
                flows=[FlowEntry.parse(v) for _, v in sorted(
                    cp["flows"].items(), key=lambda kv: int(kv[0]))] if cp.has_section("flows") else [],
                sr_entries=[SrTableEntry.parse(k, v) for k, v in cp["sr"].items()]
                if cp.has_section("sr") else [],
            )
        except (configparser.Error, KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad launch configuration: {exc}") from None
        cfg.validate()
        return cfg


class NetconfServer:
    """NetConf endpoint plus datastore manager for the per-port GCL datastore."""

    def __init__(self, switch: "Switch"):
        self.switch = switch
        self.session_up = False
        self.running: dict[int, str] = {}
        self.fail_next_edit = False
        self.rpc_count = Counter()

    def get_config(self) -> str:
        return format_gcl_payload(self.running)

    def handle(self, msg) -> RpcReply | NetconfHello | None:
        if isinstance(msg, NetconfHello):
            self.session_up = True
            return NetconfHello()
        if not isinstance(msg, Rpc):
            return None
        self.rpc_count[msg.op.name] += 1
        if not self.session_up:
            return RpcReply(msg.id, False, error="no-session")
        if msg.op.datastore != "running":
            return RpcReply(msg.id, False, error=f"unsupported datastore {msg.op.datastore}")
        if isinstance(msg.op, GetConfig):
            return RpcReply(msg.id, True, data=self.get_config())
        if isinstance(msg.op, EditConfig):
            if self.fail_next_edit:
                self.fail_next_edit = False
                return RpcReply(msg.id, False, error="operation-failed")
            try:
                self.switch.apply_gcls(parse_gcl_payload(msg.op.payload))
            except (ConfigError, GclError) as exc:
                return RpcReply(msg.id, False, error=f"invalid-value: {exc}")
            return RpcReply(msg.id, True)
        return RpcReply(msg.id, False, error="operation-not-supported")


class Switch:
    """A store-and-forward switch node.

    Events addressed to the switch carry ``("rx", frame, port)`` from data
    links, ``("relay", frame, port)`` after the processing delay, and
    ``("ctrl", msg)`` from the control channel.
    """

    def __init__(self, sim: Simulator, name: str, ports, policy: str = GATE_OPEN_AT_START,
                 processing_delay: int = 0, cycle: int = 1_000_000, record: bool = False):
        self.sim = sim
        self.name = name
        self.policy = policy
        self.processing_delay = processing_delay
        self.cycle = cycle
        self.record = record
        self.port_ids = tuple(sorted(ports))
        self.ports: dict[int, QbvPort] = {}
        self.flow_table = FlowTable()
        self.sr_table: dict[str, SrTableEntry] = {}
        self.netconf = NetconfServer(self)
        self.channel = None
        self.dropped = Counter()
        self.copies = 0
        self.punted = 0
        self.relayed = 0
        self.pending_relays = 0
        sim.register(name, self._on_event)

    def attach(self, port: int, link: Link) -> None:
        if port not in self.port_ids:
            raise ConfigError(f"{self.name} has no port {port}")
        gcl = GateControlList.always_open(self.cycle)
        self.ports[port] = QbvPort(self.sim, PortRef(self.name, port), link, gcl,
                                   self.policy, self.record)
        self.netconf.running.setdefault(port, gcl.to_text())

    # -- launch configuration ---------------------------------------------------------------
    def export_launch_config(self) -> SwitchConfig:
        return SwitchConfig(
            name=self.name, ports=self.port_ids, policy=self.policy,
            processing_delay=self.processing_delay, cycle=self.cycle,
            gcls=dict(self.netconf.running),
            flows=[FlowEntry(e.priority, e.match, e.actions) for e in self.flow_table.entries],
            sr_entries=[SrTableEntry(s.stream_id, s.dst_mac, s.pcp, s.talker_port,
                                     set(s.listener_ports)) for s in self.sr_table.values()],
        )

    def import_launch_config(self, cfg: SwitchConfig) -> None:
        if self.sim.started or self.sim.now != 0:
            raise ConfigError("launch configuration can only be imported before the run starts")
        cfg.validate()
        if set(cfg.ports) != set(self.port_ids):
            raise ConfigError(f"{self.name}: launch config ports {cfg.ports} != {self.port_ids}")
        if cfg.policy != self.policy or cfg.cycle != self.cycle:
            self.policy, self.cycle = cfg.policy, cfg.cycle
            for port in self.ports.values():
                port.policy = cfg.policy
                port.active_gcl = GateControlList.always_open(cfg.cycle)
        self.processing_delay = cfg.processing_delay
        self.flow_table = FlowTable()
        for e in cfg.flows:
            self.flow_table.add(FlowEntry(e.priority, e.match, e.actions))
        self.sr_table = {s.stream_id: SrTableEntry(s.stream_id, s.dst_mac, s.pcp, s.talker_port,
                                                   set(s.listener_ports))
                         for s in cfg.sr_entries}
        for port, text in cfg.gcls.items():
            self.netconf.running[port] = text
            if port in self.ports:
                self.ports[port].active_gcl = GateControlList.parse(text, self.cycle)
                self.ports[port].pending_gcl = None

    # -- datastore ------------------------------------------------------------------------
    def apply_gcls(self, gcls: dict[int, str]) -> None:
        """Validate every port first, then write the datastore and stage the lists."""
        parsed = {}
        for port, text in gcls.items():
            if port not in self.ports:
                raise ConfigError(f"{self.name} has no port {port}")
            parsed[port] = GateControlList.parse(text, self.cycle)
        now = self.sim.now
        for port, gcl in parsed.items():
            self.netconf.running[port] = gcl.to_text()
            self.ports[port].install_gcl(gcl, now)

    # -- data plane -----------------------------------------------------------------------
    def ingress_filter(self, frame: Frame, in_port: int) -> bool:
        """Per-stream filtering and policing hook; currently admits everything."""
        return True

    def _on_event(self, event) -> None:
        kind = event.payload[0]
        if kind == "rx":
            _, frame, port = event.payload
            self.pending_relays += 1
            self.sim.schedule_in(self.processing_delay, self.name, ("relay", frame, port))
        elif kind == "relay":
            _, frame, port = event.payload
            self.pending_relays -= 1
            self.relay(frame, port)
        elif kind == "ctrl":
            self.handle_control(event.payload[1])
        else:  # pragma: no cover
            raise ValueError(f"unexpected event {event.payload!r}")

    def relay(self, frame: Frame, in_port: int) -> None:
        if not self.ingress_filter(frame, in_port):
            self.dropped["filtered"] += 1
            return
        if frame.is_srp:
            self._packet_in(frame, in_port)
            return
        entry = self.flow_table.lookup(frame, in_port)
        if entry is None:
            self.dropped["table-miss"] += 1
            return
        entry.packet_count += 1
        entry.byte_count += frame.wire_size
        self.relayed += 1
        outputs = 0
        for act in entry.actions:
            if act.kind == OUTPUT:
                if outputs:
                    self.copies += 1
                outputs += 1
                if act.port in self.ports:
                    self.ports[act.port].enqueue(frame)
                else:
                    self.dropped["no-port"] += 1
            elif act.kind == TO_CONTROLLER:
                if outputs:
                    self.copies += 1
                outputs += 1
                self.punted += 1
                self._packet_in(frame, in_port)
        if outputs == 0:
            self.dropped["action-drop"] += 1

    def _packet_in(self, frame: Frame, in_port: int) -> None:
        if self.channel is None:
            self.dropped["no-controller"] += 1
            return
        self.channel.to_controller(PacketIn(frame, in_port))

    # -- control plane --------------------------------------------------------------------
    def handle_control(self, msg) -> None:
        if isinstance(msg, Hello):
            self.channel.to_controller(Hello())
        elif isinstance(msg, FeaturesRequest):
            self.channel.to_controller(FeaturesReply(self.port_ids))
        elif isinstance(msg, FlowMod):
            self.handle_flow_mod(msg.entry)
        elif isinstance(msg, PacketOut):
            self.handle_packet_out(msg.frame, msg.out_port, msg.in_port)
        else:
            reply = self.netconf.handle(msg)
            if reply is not None:
                self.channel.to_controller(reply)

    def handle_flow_mod(self, entry: FlowEntry) -> FlowEntry:
        return self.flow_table.add(FlowEntry(entry.priority, entry.match, entry.actions))

    def handle_packet_out(self, frame: Frame, out_port: int, in_port: int | None = None) -> None:
        if frame.is_srp and in_port is not None:
            self._update_sr_table(frame.payload, in_port)
        port = self.ports.get(out_port)
        if port is None:
            self.dropped["no-port"] += 1
            log.debug("%s: packet-out to unknown port %s", self.name, out_port)
            return
        port.enqueue(frame)

    def _update_sr_table(self, msg, in_port: int) -> None:
        if isinstance(msg, TalkerAdvertise):
            entry = self.sr_table.get(msg.stream_id)
            if entry is None:
                self.sr_table[msg.stream_id] = SrTableEntry(
                    msg.stream_id, msg.dst_mac, msg.pcp, in_port)
        elif isinstance(msg, ListenerReady):
            entry = self.sr_table.get(msg.stream_id)
            if entry is not None and in_port != entry.talker_port:
                entry.listener_ports.add(in_port)

    def queued(self) -> int:
        return sum(p.queued() for p in self.ports.values())

    def __repr__(self):
        return f"Switch({self.name!r}, ports={self.port_ids})"
