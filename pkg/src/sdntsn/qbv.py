"""802.1Qbv egress stage: per-priority FIFOs, cyclic gate control and
strict-priority transmission selection."""
from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from typing import Iterator

from .engine import US, SimulationFault, Simulator
from .ethernet import Frame, Link, PortRef, serialization_time

GREEN = 0b1100_0000   # priorities 6-7
YELLOW = 0b0011_1111  # priorities 0-5
RED = 0x00
ALL_OPEN = 0xFF
PHASES = {"G": GREEN, "Y": YELLOW, "R": RED}
_PHASE_OF_MASK = {mask: name for name, mask in PHASES.items()}

GATE_OPEN_AT_START = "gate-open-at-start"
LENGTH_AWARE = "length-aware"
POLICIES = (GATE_OPEN_AT_START, LENGTH_AWARE)


class GclError(ValueError):
    """Malformed or inconsistent gate control list."""


@dataclass(frozen=True)
class GateControlEntry:
    duration: int
    gates: int

    def __post_init__(self):
        if self.duration <= 0:
            raise GclError(f"entry duration must be > 0, got {self.duration}")
        if not 0 <= self.gates <= 0xFF:
            raise GclError(f"gate mask {self.gates:#x} is not 8 bits")

    def is_open(self, pcp: int) -> bool:
        return bool(self.gates >> pcp & 1)


@dataclass(frozen=True)
class GateControlList:
    entries: tuple[GateControlEntry, ...]
    cycle: int = 0
    base_time: int = 0
    _starts: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise GclError("gate control list must have at least one entry")
        object.__setattr__(self, "entries", entries)
        total = sum(e.duration for e in entries)
        if self.cycle == 0:
            object.__setattr__(self, "cycle", total)
        elif total != self.cycle:
            raise GclError(f"entry durations sum to {total} ns, cycle is {self.cycle} ns")
        if self.base_time < 0:
            raise GclError("base_time must be >= 0")
        starts, acc = [], 0
        for e in entries:
            starts.append(acc)
            acc += e.duration
        object.__setattr__(self, "_starts", tuple(starts))

    @classmethod
    def always_open(cls, cycle: int = 1_000 * US) -> "GateControlList":
        return cls((GateControlEntry(cycle, ALL_OPEN),))

    @classmethod
    def parse(cls, text: str, cycle: int = 0, base_time: int = 0) -> "GateControlList":
        return cls(parse_gcl_entries(text), cycle, base_time)

    def at(self, base_time: int) -> "GateControlList":
        return replace(self, base_time=base_time)

    def to_text(self) -> str:
        return format_gcl(self.entries)

    def locate(self, t: int) -> tuple[int, int]:
        """Index of the entry governing ``t`` and the absolute end of that entry."""
        if t < self.base_time:
            raise GclError(f"t={t} precedes base_time={self.base_time}")
        cycle_start = t - (t - self.base_time) % self.cycle
        offset = t - cycle_start
        idx = bisect.bisect_right(self._starts, offset) - 1
        return idx, cycle_start + self._starts[idx] + self.entries[idx].duration

    def next_boundary(self, t: int) -> int:
        """First cycle start at or after ``t``."""
        if t <= self.base_time:
            return self.base_time
        rem = (t - self.base_time) % self.cycle
        return t if rem == 0 else t + self.cycle - rem


def gate_state(gcl: GateControlList, t: int) -> int:
    """The 8-bit gate mask in force at time ``t`` (entries are half-open)."""
    idx, _ = gcl.locate(t)
    return gcl.entries[idx].gates


def _parse_us(text: str) -> int:
    try:
        ns = Decimal(text) * US
    except InvalidOperation:
        raise GclError(f"bad duration {text!r}") from None
    if ns != ns.to_integral_value():
        raise GclError(f"duration {text!r} us is not a whole number of ns")
    return int(ns)


def _format_us(ns: int) -> str:
    if ns % US == 0:
        return str(ns // US)
    return format(Decimal(ns) / US, "f").rstrip("0").rstrip(".")


def parse_gcl_entries(text: str) -> tuple[GateControlEntry, ...]:
    """Parse ``R:10;G:15;Y:860;R:115`` or ``M81:100;M00:900`` (durations in us)."""
    entries = []
    for token in str(text).split(";"):
        token = token.strip()
        if not token:
            continue
        head, sep, dur = token.partition(":")
        if not sep:
            raise GclError(f"token {token!r} lacks ':'")
        head = head.strip().upper()
        if head in PHASES:
            mask = PHASES[head]
        elif len(head) == 3 and head[0] == "M":
            try:
                mask = int(head[1:], 16)
            except ValueError:
                raise GclError(f"bad mask token {token!r}") from None
        else:
            raise GclError(f"unknown phase {head!r}")
        entries.append(GateControlEntry(_parse_us(dur.strip()), mask))
    if not entries:
        raise GclError("empty gate control list")
    return tuple(entries)


def format_gcl(entries) -> str:
    out = []
    for e in entries:
        name = _PHASE_OF_MASK.get(e.gates, f"M{e.gates:02X}")
        out.append(f"{name}:{_format_us(e.duration)}")
    return ";".join(out)


class QbvPort:
    """One egress port: eight FIFOs, an active GCL and at most one pending GCL.

    The port is a simulator component.  It wakes itself when a transmission
    finishes or when a gate of interest opens, and transmits onto ``link``.
    """

    def __init__(self, sim: Simulator, ref: PortRef, link: Link | None,
                 gcl: GateControlList | None = None, policy: str = GATE_OPEN_AT_START,
                 record: bool = False):
        if policy not in POLICIES:
            raise ValueError(f"unknown selection policy {policy!r}")
        self.sim = sim
        self.ref = ref
        self.name = f"{ref}:egress"
        self.link = link
        self.policy = policy
        self.queues: list[deque[Frame]] = [deque() for _ in range(8)]
        self.active_gcl = gcl or GateControlList.always_open()
        self.pending_gcl: tuple[GateControlList, int] | None = None
        self.busy_until = 0
        self.tx_log: list[tuple[int, int, int, int, Frame]] | None = [] if record else None
        self.transmitted = 0
        self._wake_at: int | None = None
        sim.register(self.name, self._on_event)

    # -- gate schedule ------------------------------------------------------------------
    def gcl_at(self, t: int) -> GateControlList:
        if self.pending_gcl is not None and t >= self.pending_gcl[1]:
            return self.pending_gcl[0]
        return self.active_gcl

    def gate_mask(self, t: int) -> int:
        return gate_state(self.gcl_at(t), t)

    def _promote(self, now: int) -> None:
        if self.pending_gcl is not None and now >= self.pending_gcl[1]:
            self.active_gcl = self.pending_gcl[0]
            self.pending_gcl = None

    def segments(self, t: int) -> Iterator[tuple[int, int, int]]:
        """Yield consecutive ``(start, end, mask)`` gate intervals from ``t`` on."""
        pending = self.pending_gcl
        gcl = self.active_gcl
        if pending is not None and t >= pending[1]:
            gcl, pending = pending[0], None
        while True:
            idx, end = gcl.locate(t)
            if pending is not None and end >= pending[1]:
                end = pending[1]
                yield t, end, gcl.entries[idx].gates
                t, gcl, pending = end, pending[0], None
                continue
            yield t, end, gcl.entries[idx].gates
            t = end

    def install_gcl(self, new: GateControlList, commit_at: int) -> int:
        """Stage ``new`` to take over at the first old-cycle boundary >= commit_at.

        Returns the activation time.  A list whose cycle differs from the
        running cycle is rejected and leaves the port unchanged.
        """
        self._promote(commit_at)
        if sum(e.duration for e in new.entries) != new.cycle:
            raise GclError("entry durations do not sum to the cycle")
        if new.cycle != self.active_gcl.cycle:
            raise GclError(
                f"cycle mismatch: list spans {new.cycle} ns, port runs {self.active_gcl.cycle} ns")
        activation = self.active_gcl.next_boundary(commit_at)
        self.pending_gcl = (new.at(activation), activation)
        if self.sim.started or self.sim.now > 0:
            self._wake(max(activation, self.sim.now))
        return activation

    # -- queueing and selection -----------------------------------------------------------
    def enqueue(self, frame: Frame) -> None:
        self.queues[frame.pcp].append(frame)
        if self.sim.now >= self.busy_until:
            self._try_send()

    def queued(self) -> int:
        return sum(len(q) for q in self.queues)

    def _ser(self, frame: Frame) -> int:
        return serialization_time(frame.wire_size, self.link.bitrate)

    def _open_run(self, t: int, pcp: int, need: int) -> int:
        """Length of the contiguous open window for ``pcp`` from ``t`` (capped at ``need``)."""
        run = 0
        for start, end, mask in self.segments(t):
            if not mask >> pcp & 1:
                break
            run += end - start
            if run >= need:
                break
        return run

    def _eligible(self, t: int, mask: int) -> int | None:
        for pcp in range(7, -1, -1):
            if not self.queues[pcp] or not mask >> pcp & 1:
                continue
            if self.policy == GATE_OPEN_AT_START:
                return pcp
            need = self._ser(self.queues[pcp][0])
            if self._open_run(t, pcp, need) >= need:
                return pcp
        return None

    def select_next(self, now: int) -> tuple[Frame | None, int | None]:
        """``(frame, now)`` if a frame may start now, ``(None, t)`` for the next
        candidate instant, or ``(None, None)`` when nothing can ever go."""
        if now < self.busy_until:
            raise SimulationFault(f"{self.name}: select while busy until {self.busy_until}")
        waiting = 0
        for pcp, q in enumerate(self.queues):
            if q:
                waiting |= 1 << pcp
        if not waiting:
            return None, None
        horizon = now + 2 * max(self.active_gcl.cycle,
                                self.pending_gcl[0].cycle if self.pending_gcl else 0)
        if self.pending_gcl is not None:
            horizon += max(0, self.pending_gcl[1] - now)
        for start, _end, mask in self.segments(now):
            if start > horizon:
                return None, None
            if not mask & waiting:
                continue
            pcp = self._eligible(start, mask)
            if pcp is None:
                continue
            if start == now:
                return self.queues[pcp][0], now
            return None, start
        return None, None  # pragma: no cover

    def _try_send(self) -> None:
        now = self.sim.now
        self._promote(now)
        frame, at = self.select_next(now)
        if frame is None:
            if at is not None:
                self._wake(at)
            return
        self.queues[frame.pcp].popleft()
        mask = self.gate_mask(now)
        if not mask >> frame.pcp & 1:
            raise SimulationFault(f"{self.name}: pcp {frame.pcp} starting with gate closed")
        ser = self._ser(frame)
        self.busy_until = now + ser
        self.transmitted += 1
        if self.tx_log is not None:
            self.tx_log.append((now, now + ser, frame.pcp, mask, frame))
        self.link.transmit(frame, self.ref, now)
        self._wake(self.busy_until)

    def _wake(self, at: int) -> None:
        if self._wake_at is not None and self.sim.now <= self._wake_at <= at:
            return
        self._wake_at = at
        self.sim.schedule(at, self.name, at)

    def _on_event(self, event) -> None:
        if event.payload != self._wake_at:
            # superseded by an earlier wake; a later one may still be queued
            if self._wake_at is not None and self._wake_at >= self.sim.now:
                return
        self._wake_at = None
        if self.sim.now >= self.busy_until:
            self._try_send()
        else:
            self._wake(self.busy_until)
