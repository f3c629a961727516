"""End stations: periodic/gaussian traffic sources, SRP talker/listener agents, sinks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .engine import RngStream, Simulator
from .ethernet import ETHERTYPE_SRP, Frame, Link, PortRef
from .messages import ListenerReady, TalkerAdvertise
from .qbv import GateControlList, QbvPort

SRP_DST_MAC = 0x0180C200000E
SRP_FRAME_SIZE = 68


@dataclass(frozen=True)
class TrafficSource:
    host: str
    pcp: int
    wire_size: int
    period: int
    dst_mac: int
    flow_id: str = ""
    jitter_stddev: int = 0
    start_at: int = 0
    offset: int = 0
    stop_at: int | None = None

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be > 0")
        if self.start_at < 0 or self.offset < 0 or self.jitter_stddev < 0:
            raise ValueError("start_at, offset and jitter must be >= 0")


@dataclass(frozen=True)
class LatencyRecord:
    flow_id: str
    seq: int
    send_time: int
    recv_time: int

    @property
    def latency(self) -> int:
        return self.recv_time - self.send_time


class Host:
    """A single-port end station.  Its egress is a FIFO with an always-open gate."""

    def __init__(self, sim: Simulator, name: str, mac: int, rng: RngStream | None = None,
                 recorder: Callable[[LatencyRecord], None] | None = None):
        self.sim = sim
        self.name = name
        self.mac = mac
        self.rng = rng
        self.recorder = recorder
        self.port: QbvPort | None = None
        self.sources: list[TrafficSource] = []
        self._seq: dict[str, int] = {}
        self.sent = 0
        self.received = 0
        self.send_times: list[tuple[str, int]] = []
        self.subscriptions: set[str] = set()
        self.adverts: list[TalkerAdvertise] = []
        self.ready_streams: set[str] = set()
        self.srp_seen: list[tuple[int, str, str]] = []
        sim.register(name, self._on_event)

    def attach(self, link: Link) -> None:
        self.port = QbvPort(self.sim, PortRef(self.name, 0), link, GateControlList.always_open())

    def add_source(self, src: TrafficSource) -> None:
        idx = len(self.sources)
        self.sources.append(src)
        self._seq[src.flow_id or self.name] = 0
        self.sim.schedule(src.start_at + src.offset, self.name, ("send", idx))

    def advertise(self, at: int, msg: TalkerAdvertise) -> None:
        self.adverts.append(msg)
        self.sim.schedule(at, self.name, ("srp", msg))

    def subscribe(self, stream_id: str) -> None:
        self.subscriptions.add(stream_id)

    def _send_srp(self, msg) -> None:
        self.port.enqueue(Frame(self.mac, SRP_DST_MAC, 0, SRP_FRAME_SIZE, ethertype=ETHERTYPE_SRP,
                                created_at=self.sim.now, payload=msg))

    def _emit(self, idx: int) -> None:
        src = self.sources[idx]
        now = self.sim.now
        flow = src.flow_id or self.name
        seq = self._seq[flow]
        self._seq[flow] = seq + 1
        frame = Frame(self.mac, src.dst_mac, src.pcp, src.wire_size, flow, seq, now)
        self.sent += 1
        self.send_times.append((flow, now))
        self.port.enqueue(frame)
        if src.jitter_stddev:
            gap = self.rng.gaussian(src.period, src.jitter_stddev)
        else:
            gap = src.period
        nxt = now + gap
        if src.stop_at is None or nxt < src.stop_at:
            self.sim.schedule(nxt, self.name, ("send", idx))

    def _on_event(self, event) -> None:
        kind = event.payload[0]
        if kind == "send":
            self._emit(event.payload[1])
        elif kind == "srp":
            self._send_srp(event.payload[1])
        elif kind == "rx":
            self.receive(event.payload[1])

    def receive(self, frame: Frame) -> None:
        now = self.sim.now
        if frame.is_srp:
            msg = frame.payload
            self.srp_seen.append((now, msg.kind, msg.stream_id))
            if isinstance(msg, TalkerAdvertise) and msg.stream_id in self.subscriptions:
                self._send_srp(ListenerReady(msg.stream_id))
            elif isinstance(msg, ListenerReady) and any(
                    a.stream_id == msg.stream_id for a in self.adverts):
                self.ready_streams.add(msg.stream_id)
            return
        self.received += 1
        if self.recorder is not None:
            self.recorder(LatencyRecord(frame.flow_id, frame.seq, frame.created_at, now))
