"""Deterministic discrete-event core.

Time is an integer number of nanoseconds.  Events are ordered by
``(fire_at, seq)`` where ``seq`` is a per-simulator insertion counter, so
simultaneous events run in the order they were scheduled.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any, Callable

import numpy as np

NS = 1
US = 1_000
MS = 1_000_000
S = 1_000_000_000

_UNITS = {"ns": NS, "us": US, "µs": US, "ms": MS, "s": S}


class SimulationFault(RuntimeError):
    """A model invariant was violated (always a bug in the model or scenario)."""


def parse_duration(value) -> int:
    """Parse ``"9.76us"``, ``"2s"``, ``"1ms"`` or a bare integer (ns) into ns.

    Decimal arithmetic keeps every value exact; a result with a fractional
    nanosecond is rejected.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a duration: {value!r}")
    if isinstance(value, int):
        return value
    text = str(value).strip()
    for unit in sorted(_UNITS, key=len, reverse=True):
        if text.endswith(unit):
            number, scale = text[: -len(unit)].strip(), _UNITS[unit]
            break
    else:
        number, scale = text, NS
    ns = Decimal(number) * scale
    if ns != ns.to_integral_value():
        raise ValueError(f"duration {value!r} is not a whole number of ns")
    return int(ns)


def format_duration(ns: int) -> str:
    """Shortest exact textual form, e.g. ``2s``, ``9.76us``, ``5ns``."""
    for unit, scale in (("s", S), ("ms", MS), ("us", US)):
        if ns and ns % scale == 0:
            return f"{ns // scale}{unit}"
    if ns and abs(ns) >= US:
        text = format(Decimal(ns) / US, "f").rstrip("0").rstrip(".")
        return f"{text}us"
    return f"{ns}ns"


@dataclass(frozen=True, order=True)
class Event:
    fire_at: int
    seq: int
    target: str = field(compare=False)
    payload: Any = field(compare=False, default=None)


class Simulator:
    """Virtual clock plus an ordered event queue.

    Components register a handler under a name; an event's ``target`` picks
    the handler, which is called with the event itself.
    """

    def __init__(self):
        self.now = 0
        self._queue: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._handlers: dict[str, Callable[[Event], None]] = {}
        self.executed = 0
        self.started = False

    def register(self, name: str, handler: Callable[[Event], None]) -> None:
        if name in self._handlers:
            raise ValueError(f"duplicate component name {name!r}")
        self._handlers[name] = handler

    def schedule(self, fire_at: int, target: str, payload=None) -> Event:
        if fire_at < self.now:
            raise SimulationFault(
                f"event for {target!r} scheduled at {fire_at} ns, before now={self.now} ns")
        if target not in self._handlers:
            raise SimulationFault(f"no component named {target!r}")
        event = Event(fire_at, self._seq, target, payload)
        self._seq += 1
        heapq.heappush(self._queue, (fire_at, event.seq, event))
        return event

    def schedule_in(self, delay: int, target: str, payload=None) -> Event:
        return self.schedule(self.now + delay, target, payload)

    def pending(self) -> int:
        return len(self._queue)

    def queued_events(self) -> list[Event]:
        return [item[2] for item in self._queue]

    def run_until(self, t_end: int) -> None:
        """Execute every event with ``fire_at <= t_end``; leave the clock at ``t_end``."""
        if t_end < self.now:
            raise SimulationFault(f"run_until({t_end}) is before now={self.now}")
        self.started = True
        queue = self._queue
        handlers = self._handlers
        while queue and queue[0][0] <= t_end:
            self.now, _, event = heapq.heappop(queue)
            handlers[event.target](event)
            self.executed += 1
        self.now = t_end


class RngStream:
    """Seeded sample source; identical seeds give identical sequences."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def gaussian(self, mean: int, stddev: int, floor: int = US) -> int:
        """One N(mean, stddev^2) sample in ns, rounded, clamped to ``>= floor``."""
        if stddev < 0:
            raise ValueError("stddev must be >= 0")
        if stddev == 0:
            return max(mean, floor)
        sample = int(round(mean + stddev * float(self._gen.standard_normal())))
        return max(sample, floor)


def gaussian(stream: RngStream, mean: int, stddev: int) -> int:
    return stream.gaussian(mean, stddev)
