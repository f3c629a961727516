from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from sdntsn.engine import SimulationFault, Simulator
from sdntsn.ethernet import Frame, Link, PortRef, mac_to_int, mac_to_str, serialization_time

RATE = 100_000_000


@pytest.mark.parametrize("size, ns", [(1522, 121_760), (122, 9_760), (64, 5_120)])
def test_serialization_time_case_values(size, ns):
    assert serialization_time(size, RATE) == ns


@given(st.integers(1, 1522), st.integers(1, 10**10))
def test_serialization_time_is_rounded_exact_quotient(size, rate):
    exact = Fraction(size * 8 * 10**9, rate)
    got = serialization_time(size, rate)
    assert abs(got - exact) <= Fraction(1, 2)


def test_frame_invariants():
    with pytest.raises(ValueError):
        Frame(1, 2, 0, 63)
    with pytest.raises(ValueError):
        Frame(1, 2, 0, 1523)
    with pytest.raises(ValueError):
        Frame(1, 2, 8, 100)


def test_mac_text_round_trip():
    assert mac_to_str(mac_to_int("91:e0:f0:00:fe:01")) == "91:e0:f0:00:fe:01"


class Sink:
    def __init__(self, sim, name):
        self.got = []
        sim.register(name, lambda ev: self.got.append((sim.now, ev.payload[1])))


def setup_link(prop=0):
    sim = Simulator()
    a, b = PortRef("a", 0), PortRef("b", 0)
    link = Link(sim, a, b, RATE, prop)
    return sim, link, a, Sink(sim, "b")


def test_single_frame_delivered_after_serialization():
    sim, link, a, sink = setup_link()
    f = Frame(1, 2, 6, 122)
    link.transmit(f, a, 1000)
    sim.run_until(10**6)
    assert sink.got == [(1000 + 9_760, f)]


def test_back_to_back_frames():
    sim, link, a, sink = setup_link()
    f1, f2 = Frame(1, 2, 6, 122, seq=1), Frame(1, 2, 6, 122, seq=2)
    link.transmit(f1, a, 0)
    link.transmit(f2, a, 9_760)
    sim.run_until(10**6)
    assert [t for t, _ in sink.got] == [9_760, 19_520]


def test_overlap_is_a_fault():
    sim, link, a, _ = setup_link()
    link.transmit(Frame(1, 2, 6, 122), a, 0)
    with pytest.raises(SimulationFault):
        link.transmit(Frame(1, 2, 6, 122), a, 9_759)


def test_directions_are_independent():
    sim, link, a, _ = setup_link()
    Sink(sim, "a")
    link.transmit(Frame(1, 2, 6, 122), a, 0)
    link.transmit(Frame(2, 1, 6, 122), PortRef("b", 0), 0)


@given(st.lists(st.tuples(st.integers(64, 1522), st.integers(0, 50_000)), min_size=1, max_size=30),
       st.integers(0, 20_000))
def test_delivery_minus_start_is_exact_and_ordered(frames, prop):
    sim, link, a, sink = setup_link(prop)
    t, expected = 0, []
    for i, (size, gap) in enumerate(frames):
        ser = serialization_time(size, RATE)
        link.transmit(Frame(1, 2, 0, size, seq=i), a, t)
        expected.append(t + ser + prop)
        t += ser + gap
    sim.run_until(t + prop + 1)
    assert [x for x, _ in sink.got] == expected
    assert [f.seq for _, f in sink.got] == list(range(len(frames)))
