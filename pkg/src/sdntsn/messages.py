"""Control-plane message types: an OpenFlow subset, a NetConf subset and SRP."""
from __future__ import annotations

from dataclasses import dataclass

from .ethernet import Frame


# OpenFlow ------------------------------------------------------------------------------
@dataclass(frozen=True)
class Hello:
    kind = "Hello"


@dataclass(frozen=True)
class FeaturesRequest:
    kind = "FeaturesRequest"


@dataclass(frozen=True)
class FeaturesReply:
    ports: tuple[int, ...]
    kind = "FeaturesReply"


@dataclass(frozen=True)
class PacketIn:
    frame: Frame
    in_port: int
    kind = "PacketIn"


@dataclass(frozen=True)
class PacketOut:
    frame: Frame
    out_port: int
    in_port: int | None = None
    kind = "PacketOut"


@dataclass(frozen=True)
class FlowMod:
    entry: "FlowEntry"  # noqa: F821  (switch.FlowEntry; avoids an import cycle)
    kind = "FlowMod"


# NetConf -------------------------------------------------------------------------------
@dataclass(frozen=True)
class GetConfig:
    datastore: str = "running"
    name = "get-config"


@dataclass(frozen=True)
class EditConfig:
    payload: str
    datastore: str = "running"
    name = "edit-config"


@dataclass(frozen=True)
class NetconfHello:
    kind = "NcHello"


@dataclass(frozen=True)
class Rpc:
    id: int
    op: GetConfig | EditConfig
    kind = "Rpc"


@dataclass(frozen=True)
class RpcReply:
    id: int
    ok: bool
    data: str = ""
    error: str = ""
    kind = "RpcReply"


# SRP -----------------------------------------------------------------------------------
@dataclass(frozen=True)
class TalkerAdvertise:
    stream_id: str
    dst_mac: int
    pcp: int
    max_frame_size: int
    interval: int
    kind = "TalkerAdvertise"


@dataclass(frozen=True)
class ListenerReady:
    stream_id: str
    kind = "ListenerReady"


SrpMessage = TalkerAdvertise | ListenerReady
