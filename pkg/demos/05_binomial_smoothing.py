"""A binomial proportion, and what smoothing the lattice buys.

For (Y_n + c d) / (n + c) with d = 1/2 the deficiency at c = 4/3 equals -8/3
for every p. The formula needs a non-lattice law. SmoothedBernoulli spreads
each success over [1 - eta, 1 + eta], and the limit is reached slowly in eps
because the shrinking cutoff a(eps) = eps leaves an O(sqrt(eps)) remainder.
"""

import numpy as np

from epsmiss import ard, dist, mc
from epsmiss.qsim import QConfig, ShrinkMean

ps = np.linspace(0.05, 0.95, 7)
print("binomial_risk(4/3, 1/2, p):", np.round([ard.binomial_risk(4 / 3, 0.5, p).value for p in ps], 12))

g = dist.SmoothedBernoulli(0.5, 0.01)
spec = dist.generator_spec(g)
for eps in (0.1, 0.05, 0.025):
    q = mc.coupled_counts([ShrinkMean(4 / 3, 0.5), ShrinkMean(0.0)], g, QConfig(eps), 500, 7,
                          f"demo/binom/{eps}")
    diff = q[:, 0] - q[:, 1]
    print(f"eps={eps}: MC {diff.mean():.3f} +- {diff.std(ddof=1) / np.sqrt(diff.size):.3f};"
          f"  lambda_a at a=eps {ard.lambda_a(4 / 3, spec, eps, 0.5).value:.3f};  limit -2.667")
