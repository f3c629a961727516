"""
Reprogramming gate schedules at runtime
=======================================

Four hosts feed two switches.  Host 3 starts out unable to hit its
green window and waits almost a full cycle.  At 2 s the controller pushes
new gate lists, at 6 s an edit to S2 fails on purpose, and at 8 s it is
retried.  The run takes several seconds of wall time.
"""

from sdntsn import S
from sdntsn.casestudy import case_study, epoch_view, latency_checks
from sdntsn.scenario import run

result = run(case_study())
view = epoch_view(result.trace, t_end=10 * S)

for name, stats in (("host3", view.host3), ("host4", view.host4)):
    for s in stats:
        if s.count:
            print(f"{name} [{s.start / S:.0f} s, {s.end / S:.0f} s)  "
                  f"n={s.count}  min={s.min / 1000:.2f} us  max={s.max / 1000:.2f} us")

print()
print(result.log_csv())

for check, ok in latency_checks(view).items():
    print("ok  " if ok else "BAD ", check)
