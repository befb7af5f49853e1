"""A single alpha = 0.5 slice of the phase diagram.

Success rates should fall from 1 to 0 around the theoretical rho_c; the
sharpness of the drop grows with n.  Takes a minute or two.
"""
from mapcs import harness, phase
from mapcs.core import AnnealSchedule, SolverConfig, Variant

rc = phase.amp_threshold_rho(0.5).rho_c
cfg = SolverConfig(Variant.MAP_GAMMA, max_steps=2000, anneal=AnnealSchedule(decay=0.999, k0_scale=0.01))
spec = harness.PhaseGridSpec(n=300, alphas=[0.5], rhos=[round(f * rc, 4) for f in (0.5, 0.8, 1.0, 1.2, 1.5)],
                             trials=10, solver=cfg)

print(f"theoretical rho_c(0.5) = {rc:.4f}")
for cell in harness.phase_sweep(spec):
    bar = "#" * int(round(20 * cell.rate))
    print(f"rho = {cell.rho:.3f} ({cell.rho / rc:4.2f} rho_c)  rate {cell.rate:4.2f}  {bar}")
