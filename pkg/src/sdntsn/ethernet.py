"""Frames, links and serialization timing (store-and-forward, no preamble/IFG)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

from .engine import SimulationFault, Simulator

ETH_MIN = 64
ETH_MAX = 1522
ETHERTYPE_VLAN_DATA = 0x88B5     # local experimental ethertype for data
ETHERTYPE_SRP = 0x22EA           # MSRP


def mac_to_int(mac) -> int:
    if isinstance(mac, int):
        if not 0 <= mac < 1 << 48:
            raise ValueError(f"MAC out of range: {mac:#x}")
        return mac
    parts = str(mac).split(":")
    if len(parts) != 6:
        raise ValueError(f"bad MAC address {mac!r}")
    return int("".join(f"{int(p, 16):02x}" for p in parts), 16)


def mac_to_str(mac: int) -> str:
    return ":".join(f"{(mac >> s) & 0xFF:02x}" for s in range(40, -1, -8))


def is_multicast(mac: int) -> bool:
    return bool((mac >> 40) & 0x01)


def serialization_time(wire_size: int, bitrate: int) -> int:
    """wire_size * 8 / bitrate in ns, rounded half-up to the nearest ns."""
    if wire_size < 1 or bitrate <= 0:
        raise ValueError("wire_size must be >= 1 and bitrate > 0")
    num = wire_size * 8 * 1_000_000_000
    return (2 * num + bitrate) // (2 * bitrate)


@dataclass(frozen=True)
class Frame:
    src_mac: int
    dst_mac: int
    pcp: int
    wire_size: int
    flow_id: str = ""
    seq: int = 0
    created_at: int = 0
    ethertype: int = ETHERTYPE_VLAN_DATA
    vid: int = 1
    payload: Any = field(default=None, compare=False)

    def __post_init__(self):
        if not ETH_MIN <= self.wire_size <= ETH_MAX:
            raise ValueError(f"wire_size {self.wire_size} outside [{ETH_MIN}, {ETH_MAX}]")
        if not 0 <= self.pcp <= 7:
            raise ValueError(f"pcp {self.pcp} outside [0, 7]")
        if not 0 <= self.vid < 4096:
            raise ValueError(f"vid {self.vid} outside 12 bits")
        if not 0 <= self.ethertype <= 0xFFFF:
            raise ValueError("ethertype must fit 16 bits")

    @property
    def is_srp(self) -> bool:
        return self.ethertype == ETHERTYPE_SRP


class PortRef(NamedTuple):
    node: str
    port: int = 0

    def __str__(self):
        return f"{self.node}.{self.port}"

    @classmethod
    def parse(cls, text) -> "PortRef":
        if isinstance(text, PortRef):
            return text
        node, _, port = str(text).partition(".")
        return cls(node, int(port) if port else 0)


class Link:
    """Full-duplex point-to-point link; each direction is an independent channel.

    ``transmit`` schedules an ``("rx", frame, port)`` event for the far end.
    """

    def __init__(self, sim: Simulator, a: PortRef, b: PortRef, bitrate: int,
                 propagation_delay: int = 0):
        if bitrate <= 0:
            raise ValueError("bitrate must be > 0")
        if propagation_delay < 0:
            raise ValueError("propagation_delay must be >= 0")
        self.sim = sim
        self.a, self.b = a, b
        self.bitrate = bitrate
        self.propagation_delay = propagation_delay
        self._busy_until = {a: 0, b: 0}
        self._last_delivery = {a: -1, b: -1}

    def peer(self, end: PortRef) -> PortRef:
        if end == self.a:
            return self.b
        if end == self.b:
            return self.a
        raise KeyError(f"{end} is not an endpoint of this link")

    def transmit(self, frame: Frame, sender: PortRef, start: int | None = None):
        """Put ``frame`` on the wire from ``sender``; return the delivery Event."""
        start = self.sim.now if start is None else start
        if start < self._busy_until[sender]:
            raise SimulationFault(
                f"overlapping transmission on {sender}: start {start} < busy {self._busy_until[sender]}")
        ser = serialization_time(frame.wire_size, self.bitrate)
        self._busy_until[sender] = start + ser
        deliver_at = start + ser + self.propagation_delay
        if deliver_at < self._last_delivery[sender]:
            raise SimulationFault(f"reordering on {sender}")
        self._last_delivery[sender] = deliver_at
        dest = self.peer(sender)
        return self.sim.schedule(deliver_at, dest.node, ("rx", frame, dest.port))

    def __repr__(self):
        return f"Link({self.a}<->{self.b}, {self.bitrate} bit/s)"
