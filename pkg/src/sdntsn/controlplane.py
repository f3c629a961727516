"""SDN controller: reliable control channels, OpenFlow core, NetConf client,
the SRP manager app and the GCL programmer app."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import Callable

from .engine import Simulator
from .ethernet import mac_to_str
from .messages import (EditConfig, FeaturesReply, FeaturesRequest, FlowMod, GetConfig, Hello,
                       ListenerReady, NetconfHello, PacketIn, PacketOut, Rpc, RpcReply,
                       TalkerAdvertise)
from .switch import FlowAction, FlowEntry, FlowMatch

log = logging.getLogger(__name__)

SRP_FLOW_PRIORITY = 1000
LOG_HEADER = ("time_ns", "direction", "peer", "kind", "detail", "outcome")


@dataclass(frozen=True)
class LogRow:
    time_ns: int
    direction: str
    peer: str
    kind: str
    detail: str
    outcome: str


def describe(msg) -> tuple[str, str]:
    """``(detail, outcome)`` columns for a control message."""
    if isinstance(msg, FeaturesReply):
        return "ports=" + ",".join(map(str, msg.ports)), "-"
    if isinstance(msg, (PacketIn, PacketOut)):
        f = msg.frame
        what = f"srp={msg.frame.payload.kind} stream={f.payload.stream_id}" if f.is_srp \
            else f"flow={f.flow_id} seq={f.seq} dst={mac_to_str(f.dst_mac)}"
        port = f"in_port={msg.in_port}" if isinstance(msg, PacketIn) else \
            f"out_port={msg.out_port} in_port={msg.in_port}"
        return f"{port} {what}", "-"
    if isinstance(msg, FlowMod):
        return msg.entry.to_text(), "-"
    if isinstance(msg, Rpc):
        payload = f" {msg.op.payload}" if isinstance(msg.op, EditConfig) else ""
        return f"id={msg.id} {msg.op.name}{payload}", "-"
    if isinstance(msg, RpcReply):
        data = f" {msg.data}" if msg.data else ""
        return f"id={msg.id}{data}", "ok" if msg.ok else f"error:{msg.error}"
    return "", "-"


class RunLog:
    """Line-oriented record of every control-plane message."""

    def __init__(self):
        self.rows: list[LogRow] = []

    def add(self, t: int, direction: str, peer: str, msg=None, kind: str = "",
            detail: str = "", outcome: str = "-") -> None:
        if msg is not None:
            kind = msg.kind
            detail, outcome = describe(msg)
        self.rows.append(LogRow(t, direction, peer, kind, detail, outcome))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_HEADER)
        for r in self.rows:
            w.writerow((r.time_ns, r.direction, r.peer, r.kind, r.detail, r.outcome))
        return buf.getvalue()


class ControlChannel:
    """Reliable, ordered, fixed-latency channel between the controller and one switch."""

    def __init__(self, sim: Simulator, controller: "Controller", switch, latency: int = 0):
        if latency < 0:
            raise ValueError("latency must be >= 0")
        self.sim = sim
        self.controller = controller
        self.switch = switch
        self.latency = latency
        switch.channel = self

    def to_switch(self, msg) -> None:
        self.controller.log.add(self.sim.now, "out", self.switch.name, msg)
        self.sim.schedule_in(self.latency, self.switch.name, ("ctrl", msg))

    def to_controller(self, msg) -> None:
        self.controller.log.add(self.sim.now, "in", self.switch.name, msg)
        self.sim.schedule_in(self.latency, self.controller.name, ("ctrl", self.switch.name, msg))


# -- timeline -------------------------------------------------------------------------------
@dataclass(frozen=True)
class EditGcl:
    switch: str
    ports: tuple[int, ...]
    gcl: str

    def payload(self) -> str:
        return " ".join(f"{p}={self.gcl}" for p in sorted(self.ports))


@dataclass(frozen=True)
class InjectEditFailure:
    switch: str


@dataclass(frozen=True)
class ProbeConfig:
    """Issue a get-config so the running datastore lands in the run log."""
    switch: str


class ControlTimeline:
    def __init__(self, items=()):
        self.items: list[tuple[int, object]] = list(items)
        times = [t for t, _ in self.items]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("control timeline times must be non-decreasing")
        if any(t < 0 for t in times):
            raise ValueError("control timeline times must be >= 0")

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def instants(self) -> list[int]:
        return sorted({t for t, _ in self.items})


# -- controller -----------------------------------------------------------------------------
@dataclass
class RpcResult:
    sent_at: int
    replied_at: int
    switch: str
    rpc_id: int
    op: str
    ok: bool
    detail: str


class Controller:
    def __init__(self, sim: Simulator, name: str = "controller"):
        self.sim = sim
        self.name = name
        self.log = RunLog()
        self.channels: dict[str, ControlChannel] = {}
        self.features: dict[str, tuple[int, ...]] = {}
        self.fault_injector: Callable[[str], None] | None = None
        self.netconf = NetconfClient(self)
        self.srp = SrpManager(self)
        self.gcl_programmer = GclProgrammer(self)
        sim.register(name, self._on_event)

    def connect(self, switch, latency: int = 0) -> ControlChannel:
        ch = ControlChannel(self.sim, self, switch, latency)
        self.channels[switch.name] = ch
        return ch

    def start(self) -> None:
        """Session setup at t = 0: OpenFlow hello + features, NetConf hello."""
        for name in sorted(self.channels):
            ch = self.channels[name]
            ch.to_switch(Hello())
            ch.to_switch(FeaturesRequest())
            ch.to_switch(NetconfHello())

    def send(self, switch: str, msg) -> None:
        if switch not in self.channels:
            raise KeyError(f"no control channel to {switch!r}")
        self.channels[switch].to_switch(msg)

    def _on_event(self, event) -> None:
        payload = event.payload
        if payload[0] == "timeline":
            self.gcl_programmer.fire(payload[1])
            return
        _, switch, msg = payload
        if isinstance(msg, FeaturesReply):
            self.features[switch] = tuple(msg.ports)
        elif isinstance(msg, PacketIn):
            if msg.frame.is_srp:
                self.srp.on_packet_in(switch, msg.in_port, msg.frame)
        elif isinstance(msg, RpcReply):
            self.netconf.on_reply(switch, msg)


class NetconfClient:
    def __init__(self, controller: Controller):
        self.controller = controller
        self._next_id = 1
        self.outstanding: dict[int, tuple[str, str, int]] = {}
        self.results: list[RpcResult] = []

    def rpc(self, switch: str, op) -> int:
        rpc_id = self._next_id
        self._next_id += 1
        self.outstanding[rpc_id] = (switch, op.name, self.controller.sim.now)
        self.controller.send(switch, Rpc(rpc_id, op))
        return rpc_id

    def get_config(self, switch: str) -> int:
        return self.rpc(switch, GetConfig())

    def edit_config(self, switch: str, payload: str) -> int:
        return self.rpc(switch, EditConfig(payload))

    def on_reply(self, switch: str, reply: RpcReply) -> None:
        sent = self.outstanding.pop(reply.id, None)
        if sent is None or sent[0] != switch:
            log.warning("unsolicited rpc-reply %s from %s", reply.id, switch)
            return
        self.results.append(RpcResult(sent[2], self.controller.sim.now, switch, reply.id,
                                      sent[1], reply.ok, reply.data if reply.ok else reply.error))

    def result(self, rpc_id: int) -> RpcResult | None:
        return next((r for r in self.results if r.rpc_id == rpc_id), None)


class GclProgrammer:
    """Replays a ControlTimeline: edit-config at each instant, failures armed switch-side.

    rpc-errors are recorded and never retried.
    """

    def __init__(self, controller: Controller):
        self.controller = controller
        self.timeline = ControlTimeline()
        self.issued: list[tuple[int, object, int | None]] = []

    def program(self, timeline: ControlTimeline) -> None:
        for action_time, action in timeline:
            if action.switch not in self.controller.channels:
                raise KeyError(f"timeline targets unknown switch {action.switch!r}")
        self.timeline = timeline
        for idx, (action_time, _) in enumerate(timeline):
            self.controller.sim.schedule(action_time, self.controller.name, ("timeline", idx))

    def fire(self, idx: int) -> None:
        action_time, action = self.timeline.items[idx]
        ctl = self.controller
        if isinstance(action, EditGcl):
            rpc_id = ctl.netconf.edit_config(action.switch, action.payload())
        elif isinstance(action, ProbeConfig):
            rpc_id = ctl.netconf.get_config(action.switch)
        elif isinstance(action, InjectEditFailure):
            rpc_id = None
            if ctl.fault_injector is not None:
                ctl.fault_injector(action.switch)
            ctl.log.add(ctl.sim.now, "app", action.switch, kind="InjectEditFailure")
        else:  # pragma: no cover
            raise TypeError(f"unknown timeline action {action!r}")
        self.issued.append((action_time, action, rpc_id))

    def outcomes(self) -> list[tuple[int, str, bool]]:
        """``(sent_at, switch, ok)`` for every edit-config issued by the timeline."""
        return [(r.sent_at, r.switch, r.ok) for r in self.controller.netconf.results
                if r.op == "edit-config"]


class SrpManager:
    """Registers talkers and listeners and installs stream forwarding rules.

    Talker advertisements are flooded away from the talker; each listener
    ready installs ``dst_mac -> listener ports`` on the switch it arrives at
    and is then sent back toward the talker.
    """

    def __init__(self, controller: Controller):
        self.controller = controller
        self.talkers: dict[str, TalkerAdvertise] = {}
        self.talker_ports: dict[str, dict[str, int]] = {}
        self.listeners: dict[tuple[str, str], set[int]] = {}

    def on_packet_in(self, switch: str, in_port: int, frame) -> None:
        msg = frame.payload
        ctl = self.controller
        if isinstance(msg, TalkerAdvertise):
            self.talkers.setdefault(msg.stream_id, msg)
            self.talker_ports.setdefault(msg.stream_id, {})[switch] = in_port
            for port in ctl.features.get(switch, ()):
                if port != in_port:
                    ctl.send(switch, PacketOut(frame, port, in_port))
        elif isinstance(msg, ListenerReady):
            stream = self.talkers.get(msg.stream_id)
            upstream = self.talker_ports.get(msg.stream_id, {}).get(switch)
            if stream is None or upstream is None:
                log.info("listener ready for unknown stream %s at %s", msg.stream_id, switch)
                ctl.log.add(ctl.sim.now, "app", switch, kind="SrpUnknownStream",
                            detail=f"stream={msg.stream_id} in_port={in_port}", outcome="ignored")
                return
            ports = self.listeners.setdefault((switch, msg.stream_id), set())
            ports.add(in_port)
            entry = FlowEntry(SRP_FLOW_PRIORITY, FlowMatch(dst_mac=stream.dst_mac),
                              tuple(FlowAction.output(p) for p in sorted(ports)))
            ctl.send(switch, FlowMod(entry))
            ctl.send(switch, PacketOut(frame, upstream, in_port))
