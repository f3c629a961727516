"""
Stream reservation through the controller
=========================================

A talker advertises a multicast stream, a listener answers, and the
controller installs one flow entry per switch on the path.  No data frame
gets through before the reservation exists.
"""

from sdntsn.scenario import Network
from sdntsn.srpdemo import STREAM_MAC, srp_scenario

net = Network(srp_scenario())
result = net.run()

for name, sw in net.switches.items():
    entries = sw.flow_table.by_dst(STREAM_MAC)
    print(name, [e.to_text() for e in entries] or "no entry")

sink = net.hosts["sink"]
print("sink received", sink.received, "frames")
print("first arrival at", min(r.recv_time for r in result.trace), "ns")
