"""Hill-climb for instances on which each policy does worst against the optimum.

The proven ceilings are 4 for SRPT+ and 29 for SRPT^L; plain SRPT has none.
Small searches land far below the ceilings, which is expected: the bounds
are worst-case over all instances.

Run: python3 demos/worst_case_search.py [budget]
"""

import sys

from aoilab import PolicyId, adversarial_search, format_instance

budget = int(sys.argv[1]) if len(sys.argv) > 1 else 2000

for policy in (PolicyId.SRPT, PolicyId.SRPT_PLUS, PolicyId.SRPT_L, PolicyId.FCFS):
    inst, ratio = adversarial_search(policy, 8, budget, seed=1)
    print(f"{policy.value:>22}: worst ratio found {float(ratio):.4f}  (exact {ratio})")

inst, _ = adversarial_search(PolicyId.SRPT, 8, budget, seed=1)
print("\nworst SRPT instance found:")
print(format_instance(inst))
