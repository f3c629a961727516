import pytest
from hypothesis import given, strategies as st

from sdntsn.engine import (MS, S, US, RngStream, SimulationFault, Simulator, format_duration,
                           gaussian, parse_duration)


def make_sim():
    sim = Simulator()
    seen = []
    sim.register("probe", lambda ev: seen.append((sim.now, ev.payload)))
    return sim, seen


def test_same_instant_runs_before_next_ns():
    sim, seen = make_sim()
    sim.schedule(1, "probe", "later")
    sim.schedule(0, "probe", "now")
    sim.run_until(5)
    assert [p for _, p in seen] == ["now", "later"]


def test_ties_break_by_insertion_order():
    sim, seen = make_sim()
    for i in range(5):
        sim.schedule(100, "probe", i)
    sim.run_until(100)
    assert [p for _, p in seen] == [0, 1, 2, 3, 4]


def test_scheduling_in_the_past_is_a_fault():
    sim, _ = make_sim()
    sim.run_until(10)
    with pytest.raises(SimulationFault):
        sim.schedule(9, "probe")


def test_unknown_target_is_a_fault():
    sim, _ = make_sim()
    with pytest.raises(SimulationFault):
        sim.schedule(0, "nobody")


def test_empty_queue_advances_clock():
    sim, seen = make_sim()
    sim.run_until(10 * S)
    assert sim.now == 10 * S and seen == []


def test_run_until_twice_is_a_noop():
    sim, seen = make_sim()
    sim.schedule(7, "probe", "x")
    sim.run_until(7)
    sim.run_until(7)
    assert seen == [(7, "x")]


@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=60), st.integers(0, 10_000))
def test_executed_times_are_ordered_and_bounded(times, bound):
    sim, seen = make_sim()
    for i, t in enumerate(times):
        sim.schedule(t, "probe", i)
    sim.run_until(bound)
    stamps = [t for t, _ in seen]
    assert stamps == sorted(stamps)
    assert all(t <= bound for t in stamps)
    assert len(seen) == sum(t <= bound for t in times)
    # equal times keep insertion order
    for (t1, i1), (t2, i2) in zip(seen, seen[1:]):
        if t1 == t2:
            assert i1 < i2


def test_gaussian_zero_stddev_is_exact():
    assert gaussian(RngStream(3), 200 * US, 0) == 200 * US


def test_gaussian_is_reproducible():
    a, b = RngStream(42), RngStream(42)
    assert [a.gaussian(200 * US, 20 * US) for _ in range(100)] == \
        [b.gaussian(200 * US, 20 * US) for _ in range(100)]
    c = RngStream(43)
    assert [c.gaussian(200 * US, 20 * US) for _ in range(10)] != \
        [RngStream(42).gaussian(200 * US, 20 * US) for _ in range(10)]


def test_gaussian_sample_mean_law_of_large_numbers():
    rng = RngStream(7)
    samples = [rng.gaussian(200 * US, 20 * US) for _ in range(100_000)]
    mean = sum(samples) / len(samples)
    assert abs(mean - 200 * US) <= 0.01 * 200 * US
    # sd of the mean is 20us/sqrt(1e5) ~ 63 ns; a far tighter bound also holds
    assert abs(mean - 200 * US) < 500


def test_gaussian_clamps_to_one_microsecond():
    rng = RngStream(1)
    assert min(rng.gaussian(0, 50 * US) for _ in range(2000)) == US


@pytest.mark.parametrize("text, ns", [
    ("9.76us", 9_760), ("121.76us", 121_760), ("2s", 2 * S), ("1ms", MS), ("5", 5),
    (17, 17), ("0.5ms", 500 * US), ("10ns", 10),
])
def test_parse_duration(text, ns):
    assert parse_duration(text) == ns


def test_parse_duration_rejects_sub_ns():
    with pytest.raises(ValueError):
        parse_duration("0.1ns")


@given(st.integers(0, 10**13))
def test_duration_text_round_trip(ns):
    assert parse_duration(format_duration(ns)) == ns
