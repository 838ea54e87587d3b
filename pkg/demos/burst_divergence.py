"""A burst of half-size updates followed by one unit update per time step.

SRPT keeps serving the stale burst because it is short, so the steady
updates queue up; a latest-first server ignores the burst after one
delivery. The gap grows with the burst size m (horizon T = 2m).

Run: python3 demos/burst_divergence.py
"""

from fractions import Fraction

from aoilab import PolicyId, example2
from aoilab.harness import competitive_ratio

EPS = Fraction(1, 100)

print(f"{'m':>4} {'updates':>8} {'SRPT':>10} {'SRPT+':>10} {'latest-first':>13}")
for m in (5, 10, 20, 40, 80):
    inst = example2(m, EPS, 2 * m)
    ratios = [
        competitive_ratio(inst, p, method="pareto")
        for p in (PolicyId.SRPT, PolicyId.SRPT_PLUS, PolicyId.NON_PREEMPTIVE_LATEST)
    ]
    print(f"{m:>4} {len(inst):>8} " + " ".join(f"{float(r):>10.4f}" for r in ratios[:2]) + f" {float(ratios[2]):>13.6f}")
