"""The whole distribution of eps (Q(c) - Q(0)), not just its mean.

Under the shrinking cutoff it tends to A - B with A and B exponential with
mean c xi and correlation -1/3. The mean is 0 and the variance is 8/3 for
c = xi = 1. The reference pair below only matches those two features.
"""

import numpy as np

from epsmiss import brownian
from epsmiss.cli import second_order_diagnostics

diag, qq = second_order_diagnostics(c=1.0, xi=1.0, sigma=1.0, eps=0.05, reps=1000, seed=11)
print(f"mean {diag['mean']:.4f}  CI {np.round(diag['mean_ci95'], 4)}")
print(f"variance {diag['variance']:.3f}  CI {np.round(diag['variance_ci95'], 3)}  (8/3 = 2.667)")
print(f"mass at 0: {diag['point_mass_at_zero']:.3f}")

for p, emp, ref in qq[9::20]:
    print(f"  q{p:.2f}: sampled {emp: .3f}   reference A - B {ref: .3f}")

a, b = brownian.sample_ab_pairs(1.0, 1.0, 200_000, 11)
print(f"\nreference pair: means {a.mean():.3f} {b.mean():.3f}, corr {np.corrcoef(a, b)[0, 1]:.3f}")

# a fixed cutoff a > 0 leaves an atom at zero in the limit
fixed, _ = second_order_diagnostics(1.0, 1.0, 1.0, 0.05, 1000, 11, fixed_a=1.0)
print(f"fixed a = 1: mass at 0 = {fixed['point_mass_at_zero']:.3f}")
