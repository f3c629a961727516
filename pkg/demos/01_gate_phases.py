"""
Sizing red, green and yellow phases
===================================

A 1 ms cycle on 100 Mbit/s links.  The red guard band has to swallow one
maximum-size frame, the green window one high-priority frame, and whatever
is left goes to best-effort traffic.
"""

from sdntsn import MS, US, gcl_calc, serialization_time

RATE = 100_000_000

# one full-size frame and one small control frame on the wire
print("1522 B takes", serialization_time(1522, RATE), "ns")
print("122 B takes", serialization_time(122, RATE), "ns")

exact = gcl_calc(1522, 122, RATE, 1 * MS, 5 * US)
print("exact:  ", exact)

# rounding each serialization term to 5 us first gives round numbers
rounded = gcl_calc(1522, 122, RATE, 1 * MS, 5 * US, step_rounding=True)
print("rounded:", rounded)

# the list a switch actually runs, with a 10 us red lead-in
print(rounded.gcl_text(lead=10 * US))
