"""
Choosing a per-switch processing delay
======================================

Serialization alone does not explain every epoch of the case study.  A
constant processing delay per switch closes the gap.  Sweep it on a
time-compressed copy of the scenario (2 s epochs shrink to 10 ms) and keep
the first value that gets every epoch right.
"""

from sdntsn.casestudy import COARSE_SWEEP, FINE_SWEEP, calibrate, select_processing_delay

for p in calibrate(COARSE_SWEEP):
    failed = [k for k, ok in p.checks.items() if not ok]
    print(f"{p.processing_delay / 1000:4.1f} us  slot miss at S2: {p.slot_miss!s:5}  failed: {failed}")

# none of the coarse points work, so go finer
print("selected:", select_processing_delay(calibrate(FINE_SWEEP)), "ns")
