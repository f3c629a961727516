"""Three-phase (red/green/yellow) gate schedule calculator."""
from __future__ import annotations

from dataclasses import dataclass

from .engine import US
from .ethernet import serialization_time
from .qbv import GREEN, RED, YELLOW, GateControlEntry, format_gcl


class InfeasibleSchedule(ValueError):
    pass


@dataclass(frozen=True)
class PhaseSet:
    t_red: int
    t_green: int
    t_yellow: int
    cycle: int

    def __post_init__(self):
        if self.t_red + self.t_green + self.t_yellow != self.cycle:
            raise ValueError("phases must add up to the cycle")

    def gcl_text(self, lead: int = 0) -> str:
        """G/Y/R list; ``lead`` ns of the red phase are moved to the start of the cycle."""
        if not 0 <= lead <= self.t_red:
            raise ValueError("lead must lie within the red phase")
        entries = []
        if lead:
            entries.append(GateControlEntry(lead, RED))
        entries += [GateControlEntry(self.t_green, GREEN), GateControlEntry(self.t_yellow, YELLOW)]
        if self.t_red - lead:
            entries.append(GateControlEntry(self.t_red - lead, RED))
        return format_gcl(entries)


def round_to(ns: int, step: int) -> int:
    """Round half-up to a multiple of ``step``."""
    return (ns + step // 2) // step * step


def gcl_calc(max_frame: int, hp_frame: int, bitrate: int, cycle: int, margin: int,
             step_rounding: bool = False, rounding_step: int = 5 * US) -> PhaseSet:
    """Red guard = ser(max_frame) + margin, green = ser(hp_frame) + margin,
    yellow = the rest of the cycle.

    With ``step_rounding`` each serialization term is first rounded to the
    nearest ``rounding_step`` (5 us): 1522/122 B at 100 Mbit/s then give 125/15/860 us.
    """
    tx_max = serialization_time(max_frame, bitrate)
    tx_hp = serialization_time(hp_frame, bitrate)
    if step_rounding:
        tx_max, tx_hp = round_to(tx_max, rounding_step), round_to(tx_hp, rounding_step)
    t_red = tx_max + margin
    t_green = tx_hp + margin
    t_yellow = cycle - t_red - t_green
    if t_yellow <= 0:
        raise InfeasibleSchedule(
            f"cycle {cycle} ns leaves no yellow window (red {t_red} ns, green {t_green} ns)")
    return PhaseSet(t_red, t_green, t_yellow, cycle)
