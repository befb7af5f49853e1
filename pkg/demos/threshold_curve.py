"""The l1 reconstruction limit rho_c(alpha), computed two ways.

The AMP form maximizes a one-dimensional objective in z; the replica form
solves for a saddle point at fixed rho and reads off alpha.  Both are printed
side by side so the agreement is visible.
"""
from mapcs import phase

print(f"{'alpha':>6} {'rho_c (amp)':>14} {'rho_c (replica)':>16} {'diff':>9}")
for a in phase.default_alpha_grid():
    amp = phase.amp_threshold_rho(a)
    rep = phase.replica_rho_for_alpha(a)
    print(f"{a:6.2f} {amp.rho_c:14.10f} {rep.rho_c:16.10f} {abs(amp.rho_c - rep.rho_c):9.1e}")
