"""Every policy and every per-update check on a seeded random corpus.

Prints the largest ratio seen for each policy and the number of failed
checks (expected: none).

Run: python3 demos/random_corpus.py [count]
"""

import sys
from fractions import Fraction

from aoilab import RandomUniform, generate, run_corpus

count = int(sys.argv[1]) if len(sys.argv) > 1 else 500
corpus = [generate(RandomUniform(1 + k % 10, Fraction(4), Fraction(1), seed=k)) for k in range(count)]
summary = run_corpus(corpus)

print(f"{summary.count} instances, {summary.checks_run} check reports, {len(summary.failures)} failures")
for policy, ratio in sorted(summary.max_ratio.items()):
    print(f"  {policy:>22}: max ratio {float(ratio):.4f}  on instance {summary.argmax[policy]}")
