"""Six updates on [0, 2]: how SRPT+, SRPT^L and the offline optimum differ.

SRPT+ ignores update 1 (it brings no freshness at t = 0), starts update 2,
drops it when the short update 4 arrives, and then chains 5 and 6.
SRPT^L commits to update 1 and only afterwards jumps to the freshest update.
The optimum skips straight to updates 5 and 6.

Run: python3 demos/example3_walkthrough.py
"""

from aoilab import PolicyId, average_aoi, example3, optimal, run_policy
from aoilab.metrics import decimal_str


def show(name, trace, instance):
    report = average_aoi(trace, instance)
    print(f"\n{name}")
    for seg in trace.segments:
        print(f"  update {seg.update_index}: sent on [{seg.start}, {seg.end}]")
    for k, t in trace.completions:
        print(f"  update {k} delivered at {t}")
    print(f"  area under the age curve: {report.integral} ({decimal_str(report.integral)})")
    print(f"  time average over [0, {instance.horizon}]: {report.average}")
    return report.integral


inst = example3()
for u in inst.updates:
    print(f"update {u.index}: generated {u.generation}, size {u.size}")

plus = show("SRPT+", run_policy(inst, PolicyId.SRPT_PLUS), inst)
late = show("SRPT^L", run_policy(inst, PolicyId.SRPT_L), inst)
best = optimal(inst)
opt = show(f"offline optimum (chain {best.chain})", best.best_trace, inst)

print(f"\nratio SRPT+  / optimum = {plus / opt}")
print(f"ratio SRPT^L / optimum = {late / opt}")
