import itertools

import pytest

from sdntsn.casestudy import case_study
from sdntsn.controlplane import ControlTimeline, EditGcl
from sdntsn.engine import MS, S, US
from sdntsn.ethernet import ETHERTYPE_SRP, Frame, Link
from sdntsn.hosts import SRP_DST_MAC
from sdntsn import messages
from sdntsn.messages import ListenerReady
from sdntsn.scenario import Network, ScenarioError
from sdntsn.srpdemo import STREAM_MAC, TALKER, srp_scenario


def all_paths(cfg, src, dst):
    """Brute force: every simple node path from src to dst over the data links."""
    adj = {}
    for ln in cfg.links:
        adj.setdefault(ln.a.node, set()).add(ln.b.node)
        adj.setdefault(ln.b.node, set()).add(ln.a.node)
    nodes = sorted(adj)
    found = []
    for k in range(len(nodes)):
        for mid in itertools.permutations([n for n in nodes if n not in (src, dst)], k):
            path = (src, *mid, dst)
            if all(b in adj[a] for a, b in zip(path, path[1:])):
                found.append(path)
    return found


def on_path_switches(cfg, listeners):
    on = set()
    for ls in listeners:
        for path in all_paths(cfg, TALKER, ls):
            on |= {n for n in path if n in cfg.switches}
    return on


@pytest.mark.parametrize("listeners", [("sink",), ("sink", "host4"), ("sink", "host3"), ("host3",)])
def test_srp_convergence_matches_path_enumeration(listeners):
    cfg = srp_scenario(listeners=listeners)
    net = Network(cfg)
    net.run_until(cfg.duration)
    on = on_path_switches(cfg, listeners)
    for name, sw in net.switches.items():
        entries = sw.flow_table.by_dst(STREAM_MAC)
        assert len(entries) == (1 if name in on else 0), name
    for ls in listeners:
        assert net.hosts[ls].received > 0
    assert net.hosts[TALKER].ready_streams == {"stream-1"}


def test_second_listener_extends_output_set():
    cfg = srp_scenario(listeners=("sink", "host4"))
    net = Network(cfg)
    net.run_until(cfg.duration)
    # brute force: each switch must output toward every listener reachable through it
    expected = {"S1": {3}, "S2": {2, 3}}
    for name, ports in expected.items():
        (entry,) = net.switches[name].flow_table.by_dst(STREAM_MAC)
        assert {a.port for a in entry.actions} == ports
    assert net.switches["S2"].sr_table["stream-1"].listener_ports == {2, 3}
    assert net.switches["S1"].sr_table["stream-1"].talker_port == 1


def test_listener_ready_for_unknown_stream_installs_nothing():
    cfg = srp_scenario(listeners=())
    net = Network(cfg)
    net.run_until(50 * US)
    bogus = Frame(0x02_00_00_00_01_FE, SRP_DST_MAC, 0, 68, ethertype=ETHERTYPE_SRP,
                  payload=ListenerReady("nope"))
    net.switches["S2"].relay(bogus, 2)
    net.run_until(cfg.duration)
    assert all(len(sw.flow_table) == 0 for sw in net.switches.values())
    assert any(r.kind == "SrpUnknownStream" for r in net.controller.log.rows)
    assert net.hosts["sink"].received == 0


def test_stream_frames_dropped_before_registration():
    cfg = srp_scenario(listeners=("sink",), stream_start=0, advertise_at=500 * US)
    net = Network(cfg)
    net.run_until(cfg.duration)
    assert net.switches["S1"].dropped["table-miss"] >= 1
    assert net.hosts["sink"].received > 0


def test_case_study_timeline_outcomes():
    cfg = case_study(time_scale=(1, 200))
    net = Network(cfg)
    net.run()
    outcomes = net.controller.gcl_programmer.outcomes()
    scale = lambda t: t // 200  # noqa: E731
    assert outcomes == [(scale(2 * S), "S1", True), (scale(2 * S), "S2", True),
                        (scale(6 * S), "S1", True), (scale(6 * S), "S2", False),
                        (scale(8 * S), "S2", True)]


def test_empty_timeline_means_no_control_traffic_after_setup():
    cfg = case_study(time_scale=(1, 200))
    cfg.timeline = ControlTimeline()
    net = Network(cfg)
    result = net.run()
    assert result.log.rows and all(r.time_ns == 0 for r in result.log.rows)


def test_timeline_to_unknown_switch_is_a_load_error():
    cfg = case_study(time_scale=(1, 200))
    cfg.timeline = ControlTimeline([(MS, EditGcl("S9", (1,), "G:1000"))])
    with pytest.raises(ScenarioError):
        Network(cfg)


def test_timeline_must_be_ordered():
    with pytest.raises(ValueError):
        ControlTimeline([(2, EditGcl("S1", (1,), "G:1000")), (1, EditGcl("S1", (1,), "G:1000"))])


def test_failed_edit_leaves_config_unchanged():
    cfg = case_study(time_scale=(1, 200))
    net = Network(cfg)
    net.run_until(25 * MS)
    ctl = net.controller
    before = ctl.netconf.get_config("S2")
    net.run_until(35 * MS)
    after = ctl.netconf.get_config("S2")
    net.run_until(36 * MS)
    assert ctl.netconf.result(before).detail == ctl.netconf.result(after).detail


def test_control_latency_delays_replies_in_order():
    cfg = case_study(time_scale=(1, 200)).with_params(control_latency=50 * US)
    net = Network(cfg)
    net.run()
    res = net.controller.netconf.results
    assert all(r.replied_at - r.sent_at == 100 * US for r in res)
    rows = [r for r in net.controller.log.rows if r.direction == "in" and r.peer == "S1"]
    assert [r.time_ns for r in rows] == sorted(r.time_ns for r in rows)


def test_control_messages_never_use_data_links(monkeypatch):
    control_types = tuple(getattr(messages, n) for n in (
        "Hello", "FeaturesRequest", "FeaturesReply", "PacketIn", "PacketOut", "FlowMod",
        "NetconfHello", "Rpc", "RpcReply"))
    carried = []
    original = Link.transmit

    def spy(self, frame, sender, start=None):
        carried.append(frame)
        return original(self, frame, sender, start)

    monkeypatch.setattr(Link, "transmit", spy)
    cfg = srp_scenario(listeners=("sink", "host3"))
    Network(cfg).run()
    assert carried
    assert not any(isinstance(f, control_types) or isinstance(f.payload, control_types)
                   for f in carried)
