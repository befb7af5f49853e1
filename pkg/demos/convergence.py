"""MAP-gamma against AMP on the same instances: mean MSE per step.

Both reach machine precision; AMP gets there a few steps sooner.
"""
import numpy as np

from mapcs import harness

spec = harness.ConvergenceSpec(n=1000, m=500, k_nonzeros=50, trials=5, decay=0.95, max_steps=250)
res = harness.convergence_compare(spec)

print("step  " + "  ".join(f"{lab:>10}" for lab in res.labels))
for t in (1, 25, 50, 75, 100, 125, 150, 200, 250):
    print(f"{t:4d}  " + "  ".join(f"{tr[t - 1]:10.2e}" for tr in res.mean_traces))
for lab, med in zip(res.labels, res.median_steps_to(1e-6)):
    print(f"{lab}: median {med:g} steps to MSE <= 1e-6")
