"""Stream-reservation scenario: one talker, listeners behind one or two switches.

Topology::

    host1 (talker) --1[S1]3-- 1[S2]2 -- sink
    host2 ----------2[S1]4-- 1[S3]2 -- host3
                             [S2]3 -- host4

Flow tables start empty, so stream frames are dropped until the SRP
exchange has installed forwarding entries through the controller.
"""
from __future__ import annotations

from .engine import MS, US
from .ethernet import PortRef
from .hosts import TrafficSource
from .messages import TalkerAdvertise
from .scenario import LinkSpec, ScenarioConfig, SrpListener, SrpTalker
from .switch import SwitchConfig

RATE = 100_000_000
STREAM_ID = "stream-1"
STREAM_MAC = 0x91_E0_F0_00_AA_01
TALKER = "host1"


def srp_scenario(listeners=("sink",), stream_start: int = 1 * MS, advertise_at: int = 10 * US,
                 duration: int = 3 * MS, period: int = 125 * US) -> ScenarioConfig:
    hosts = {"host1": 0x02_00_00_00_01_01, "host2": 0x02_00_00_00_01_02,
             "host3": 0x02_00_00_00_01_03, "host4": 0x02_00_00_00_01_04,
             "sink": 0x02_00_00_00_01_FE}
    switches = {
        "S1": SwitchConfig("S1", (1, 2, 3, 4)),
        "S2": SwitchConfig("S2", (1, 2, 3)),
        "S3": SwitchConfig("S3", (1, 2)),
    }
    links = [
        LinkSpec(PortRef("host1"), PortRef("S1", 1), RATE),
        LinkSpec(PortRef("host2"), PortRef("S1", 2), RATE),
        LinkSpec(PortRef("S1", 3), PortRef("S2", 1), RATE),
        LinkSpec(PortRef("S1", 4), PortRef("S3", 1), RATE),
        LinkSpec(PortRef("S2", 2), PortRef("sink"), RATE),
        LinkSpec(PortRef("S2", 3), PortRef("host4"), RATE),
        LinkSpec(PortRef("S3", 2), PortRef("host3"), RATE),
    ]
    advert = TalkerAdvertise(STREAM_ID, STREAM_MAC, 5, 122, period)
    traffic = [TrafficSource(TALKER, 5, 122, period, STREAM_MAC, STREAM_ID, start_at=stream_start)]
    return ScenarioConfig(
        name="srp", hosts=hosts, switches=switches, links=links, traffic=traffic,
        duration=duration, srp_talkers=[SrpTalker(TALKER, advertise_at, advert)],
        srp_listeners=[SrpListener(h, STREAM_ID) for h in listeners])
