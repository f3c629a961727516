import pytest
from hypothesis import given, settings, strategies as st

from sdntsn.engine import MS, US, Simulator
from sdntsn.ethernet import Frame, Link, PortRef
from sdntsn.qbv import (ALL_OPEN, GATE_OPEN_AT_START, GREEN, LENGTH_AWARE, RED, YELLOW,
                        GateControlEntry, GateControlList, GclError, QbvPort, format_gcl,
                        gate_state, parse_gcl_entries)

RATE = 100_000_000
S1_PHASE2 = "R:10;G:15;Y:860;R:115"


def brute_gate_state(gcl, t):
    """Linear walk over whole cycles and entries; no modular arithmetic."""
    cursor = gcl.base_time
    while True:
        for e in gcl.entries:
            if cursor <= t < cursor + e.duration:
                return e.gates
            cursor += e.duration


@pytest.mark.parametrize("t, mask", [(5 * US, RED), (12 * US, GREEN), (1012 * US, GREEN),
                                     (10 * US, GREEN), (25 * US, YELLOW), (885 * US, RED),
                                     (999_999, RED)])
def test_gate_state_phase2_list(t, mask):
    gcl = GateControlList.parse(S1_PHASE2, MS)
    assert gate_state(gcl, t) == mask == brute_gate_state(gcl, t)


def test_phase_masks():
    assert GREEN == 0b1100_0000 and YELLOW == 0b0011_1111 and RED == 0


def test_gcl_requires_durations_to_sum_to_cycle():
    with pytest.raises(GclError):
        GateControlList.parse("G:15;Y:850;R:125", MS)


@pytest.mark.parametrize("bad", ["", "G15", "Q:10", "G:-1", "G:0", "Mzz:10", "G:0.0001"])
def test_gcl_text_rejects_garbage(bad):
    with pytest.raises(GclError):
        parse_gcl_entries(bad)


def test_explicit_mask_form():
    entries = parse_gcl_entries("M81:100;M00:900")
    assert [e.gates for e in entries] == [0x81, 0x00]
    assert format_gcl(entries) == "M81:100;R:900"


entry_st = st.builds(GateControlEntry, st.integers(1, 2_000_000), st.integers(0, 255))


@given(st.lists(entry_st, min_size=1, max_size=12))
def test_gcl_text_round_trip(entries):
    text = format_gcl(entries)
    assert parse_gcl_entries(text) == tuple(entries)
    assert format_gcl(parse_gcl_entries(text)) == text


@settings(deadline=None)
@given(st.lists(st.builds(GateControlEntry, st.integers(100, 2_000_000), st.integers(0, 255)),
                min_size=1, max_size=8),
       st.integers(0, 10**7), st.integers(0, 10**7), st.integers(0, 5))
def test_gate_state_periodic_and_matches_brute_force(entries, base, dt, k):
    gcl = GateControlList(tuple(entries), base_time=base)
    t = base + dt
    assert gate_state(gcl, t) == brute_gate_state(gcl, t)
    assert gate_state(gcl, t) == gate_state(gcl, t + k * gcl.cycle)


def make_port(gcl_text="G:15;Y:860;R:125", policy=GATE_OPEN_AT_START, record=True):
    sim = Simulator()
    got = []
    sim.register("peer", lambda ev: got.append((sim.now, ev.payload[1])))
    link = Link(sim, PortRef("sw", 1), PortRef("peer", 0), RATE)
    port = QbvPort(sim, PortRef("sw", 1), link, GateControlList.parse(gcl_text, MS), policy, record)
    sim.register("feed", lambda ev: port.enqueue(ev.payload))
    return sim, port, got


def hp(pcp=6, size=122, seq=0):
    return Frame(1, 2, pcp, size, flow_id=f"p{pcp}", seq=seq)


def test_highest_open_priority_wins():
    _, port, _ = make_port()
    port.queues[6].append(hp(6))
    port.queues[7].append(hp(7))
    frame, at = port.select_next(0)
    assert frame.pcp == 7 and at == 0


def test_gate_open_at_start_allows_overrun():
    sim, port, got = make_port()
    sim.schedule(9_760, "feed", hp(6))
    sim.run_until(MS)
    start, end, pcp, mask, _ = port.tx_log[0]
    assert (start, end) == (9_760, 19_520)
    assert got[0][0] == 19_520


def test_length_aware_blocks_until_next_opening():
    _, port, _ = make_port(policy=LENGTH_AWARE)
    port.queues[6].append(hp(6))
    assert port.select_next(9_760) == (None, MS)
    assert port.select_next(5_000)[1] == 5_000


def test_nothing_queued():
    _, port, _ = make_port()
    assert port.select_next(0) == (None, None)


def test_closed_gate_waits_for_opening():
    _, port, _ = make_port()
    port.queues[0].append(hp(0, 1522))
    assert port.select_next(0) == (None, 15 * US)


def test_never_open_priority_returns_none():
    _, port, _ = make_port("G:15;M3E:860;R:125")
    port.queues[0].append(hp(0, 64))
    assert port.select_next(0) == (None, None)


def test_fifo_within_priority():
    sim, port, got = make_port("M01:1000")
    for i in range(5):
        sim.schedule(0, "feed", hp(0, 200, seq=i))
    sim.run_until(MS)
    assert [f.seq for _, f in got] == [0, 1, 2, 3, 4]


def test_install_on_boundary_and_next_boundary():
    sim, port, _ = make_port()
    new = GateControlList.parse(S1_PHASE2, MS)
    assert port.install_gcl(new, 2 * 10**9) == 2 * 10**9
    assert port.install_gcl(new, 2_000_300_000) == 2_001_000_000


def test_install_rejects_wrong_cycle_and_keeps_state():
    _, port, _ = make_port()
    before = [port.gate_mask(t) for t in range(0, MS, 5 * US)]
    with pytest.raises(GclError):
        port.install_gcl(GateControlList.parse("G:15;Y:850;R:125"), 0)
    assert port.pending_gcl is None
    assert [port.gate_mask(t) for t in range(0, MS, 5 * US)] == before


def test_install_does_not_change_gating_before_activation():
    sim, port, _ = make_port()
    sim.run_until(1_500_000)
    old = [port.gate_mask(t) for t in range(1_500_000, 2_000_000, US)]
    act = port.install_gcl(GateControlList.parse(S1_PHASE2, MS), sim.now)
    assert act == 2 * MS
    assert [port.gate_mask(t) for t in range(1_500_000, 2_000_000, US)] == old
    assert port.gate_mask(2 * MS + 5 * US) == RED
    assert port.gate_mask(2 * MS + 12 * US) == GREEN


def test_frame_waits_across_activation():
    sim, port, got = make_port()
    sim.schedule(20 * US, "feed", hp(6))
    sim.run_until(500 * US)
    port.install_gcl(GateControlList.parse(S1_PHASE2, MS), sim.now)
    sim.run_until(3 * MS)
    # old list would open green at 1000 us; the new one opens at 1010 us
    assert port.tx_log[0][0] == 1_010 * US


def test_all_open_list():
    assert gate_state(GateControlList.always_open(), 123) == ALL_OPEN


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 300), st.sampled_from([0, 0x01, 0x40, 0xC0, 0x3F, 0xFF,
                                                                0x80, 0x55])),
                min_size=1, max_size=6),
       st.lists(st.tuples(st.integers(0, 3000), st.integers(0, 7), st.integers(64, 1522)),
                min_size=1, max_size=40),
       st.sampled_from([GATE_OPEN_AT_START, LENGTH_AWARE]))
def test_gate_invariants_hold(entries, arrivals, policy):
    gcl_entries = tuple(GateControlEntry(d * US, m) for d, m in entries)
    text = format_gcl(gcl_entries)
    cycle = sum(e.duration for e in gcl_entries)
    sim = Simulator()
    sim.register("peer", lambda ev: None)
    link = Link(sim, PortRef("sw", 1), PortRef("peer", 0), RATE)
    gcl = GateControlList.parse(text, cycle)
    port = QbvPort(sim, PortRef("sw", 1), link, gcl, policy, record=True)
    sim.register("feed", lambda ev: port.enqueue(ev.payload))
    for i, (t, pcp, size) in enumerate(sorted(arrivals, key=lambda a: a[0])):
        sim.schedule(t * US, "feed", Frame(1, 2, pcp, size, flow_id=str(pcp), seq=i))
    sim.run_until(5_000 * US + 4 * cycle)
    last_seq = {}
    for start, end, pcp, _, frame in port.tx_log:
        assert brute_gate_state(gcl, start) >> pcp & 1
        if policy == LENGTH_AWARE:
            assert all(brute_gate_state(gcl, t) >> pcp & 1
                       for t in _boundaries(gcl, start, end))
        assert frame.seq > last_seq.get(pcp, -1)
        last_seq[pcp] = frame.seq


def _boundaries(gcl, start, end):
    """Every entry start inside [start, end) plus ``start`` itself."""
    yield start
    t = gcl.base_time + (start - gcl.base_time) // gcl.cycle * gcl.cycle
    while t < end:
        for e in gcl.entries:
            if start < t < end:
                yield t
            t += e.duration
