"""Does the annealed solver land on the l1 minimizer?

A small instance is solved exactly by the simplex routine and by brute-force
enumeration, then by the half-step thresholding solver.
"""
import numpy as np

from mapcs.core import AnnealSchedule, SolverConfig, Variant, mse_per_entry
from mapcs.instances import GenSpec, make_instance
from mapcs.oracle import l1_min_enum, l1_min_lp
from mapcs.solvers import run

inst = make_instance(GenSpec(n=12, m=6, k_nonzeros=2, seed=1))
lp, enum = l1_min_lp(inst), l1_min_enum(inst)
print("x0       ", np.round(inst.truth.values, 4))
print("simplex  ", np.round(lp.x_star, 4), lp.status.value)
print("enumerate", np.round(enum.x_star, 4), enum.status.value)

for steps in (2000, 10_000):
    cfg = SolverConfig(Variant.PARTIAL, gamma=1.0, max_steps=steps, anneal=AnnealSchedule(decay=0.999))
    res = run(inst, cfg)
    print(f"solver, {steps:5d} steps: MSE to l1 optimum {mse_per_entry(res.x_final, lp.x_star):.2e}")
