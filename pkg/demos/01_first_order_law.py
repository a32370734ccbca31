"""How often does a sample mean miss by eps?

Count the n at which |mean_n - xi| >= eps. The count grows like 1/eps^2, and
eps^2 times it settles on the variance. The Brownian functional Q is the
limit object, so both are simulated here.
"""

import numpy as np

from epsmiss import dist, mc, qsim
from epsmiss.brownian import PathConfig
from epsmiss.edgeworth import semi_analytic_eq

SEED = 1

# Brownian occupation time outside the cone |W(s)| < s / sigma
for sigma in (0.5, 1.0, 2.0):
    est = mc.run_qlaw_experiment(2000, PathConfig(sigma, seed=SEED))
    print(f"sigma={sigma}: E Q ~ {est.mean:.3f} +- {est.std_error:.3f}   (sigma^2 = {sigma**2})")

# the same number from actual sample means, normal data, fixed cutoff a = 0.01
eps = 0.05
g = dist.Normal(0.0, 1.0)
cfg = qsim.QConfig(eps, "fixed", a=0.01)
q = mc.coupled_counts([qsim.ShrinkMean()], g, cfg, 500, SEED, "demo/first")[:, 0]
print(f"\neps^2 Q over 500 streams: {np.mean(eps**2 * q):.3f} "
      f"+- {np.std(eps**2 * q, ddof=1) / np.sqrt(q.size):.3f}")

# and from the sum of (Edgeworth) miss probabilities, no simulation at all
semi = semi_analytic_eq(qsim.ShrinkMean(), dist.generator_spec(g), cfg)
print(f"semi-analytic: {eps**2 * semi.value:.4f} over {semi.n_terms} sample sizes")

# what a single stream looks like
x = dist.sample_stream(g, SEED, 4000)
means = np.cumsum(x) / np.arange(1, x.size + 1)
misses = np.flatnonzero(np.abs(means) >= eps) + 1
print(f"\none stream: {misses.size} misses, the last at n = {misses.max() if misses.size else 0}")
