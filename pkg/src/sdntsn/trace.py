"""Latency trace CSV and per-interval statistics."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hosts import LatencyRecord

TRACE_HEADER = ("flow_id", "seq", "send_ns", "recv_ns", "latency_ns")


def trace_to_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in trace:
        w.writerow((r.flow_id, r.seq, r.send_time, r.recv_time, r.latency))
    return buf.getvalue()


def read_trace(path) -> list[LatencyRecord]:
    return parse_trace(Path(path).read_text())


def parse_trace(text: str) -> list[LatencyRecord]:
    rows = csv.DictReader(io.StringIO(text))
    if tuple(rows.fieldnames or ()) != TRACE_HEADER:
        raise ValueError(f"unexpected trace header {rows.fieldnames}")
    out = []
    for row in rows:
        rec = LatencyRecord(row["flow_id"], int(row["seq"]), int(row["send_ns"]), int(row["recv_ns"]))
        if rec.latency != int(row["latency_ns"]):
            raise ValueError(f"inconsistent latency in row {row}")
        out.append(rec)
    return out


@dataclass(frozen=True)
class IntervalStats:
    flow_id: str
    start: int
    end: int | None
    count: int
    min: int | None = None
    mean: float | None = None
    max: int | None = None

    @property
    def constant(self) -> bool:
        return self.count > 0 and self.min == self.max

    def row(self) -> tuple:
        return (self.flow_id, self.start, "" if self.end is None else self.end, self.count,
                "" if self.min is None else self.min,
                "" if self.mean is None else f"{self.mean:.3f}",
                "" if self.max is None else self.max)


def report(trace, cuts=(), flows=None, t_end: int | None = None) -> list[IntervalStats]:
    """Per-flow min/mean/max/count, partitioned by send time at ``cuts``.

    Intervals are ``[0, c1), [c1, c2), ..., [ck, t_end)``; an interval with
    no frames has count 0 and no statistics.
    """
    edges = [0] + sorted(set(int(c) for c in cuts if c > 0))
    ends = edges[1:] + [t_end]
    by_flow: dict[str, list[LatencyRecord]] = {}
    for r in trace:
        by_flow.setdefault(r.flow_id, []).append(r)
    names = sorted(by_flow) if flows is None else list(flows)
    out = []
    for flow in names:
        recs = by_flow.get(flow, [])
        send = np.fromiter((r.send_time for r in recs), dtype=np.int64, count=len(recs))
        lat = np.fromiter((r.latency for r in recs), dtype=np.int64, count=len(recs))
        for start, end in zip(edges, ends):
            sel = send >= start
            if end is not None:
                sel &= send < end
            vals = lat[sel]
            if vals.size == 0:
                out.append(IntervalStats(flow, start, end, 0))
            else:
                out.append(IntervalStats(flow, start, end, int(vals.size), int(vals.min()),
                                         float(vals.mean()), int(vals.max())))
    return out


def interval(stats: list[IntervalStats], flow: str, start: int) -> IntervalStats:
    return next(s for s in stats if s.flow_id == flow and s.start == start)


def report_to_csv(stats: list[IntervalStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("flow_id", "start_ns", "end_ns", "count", "min_ns", "mean_ns", "max_ns"))
    for s in stats:
        w.writerow(s.row())
    return buf.getvalue()
