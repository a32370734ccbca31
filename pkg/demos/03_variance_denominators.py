"""Which denominator for a normal variance?

Dividing the sum of squares by N - 1 + c. The miss count on the relative
scale |s^2 / sigma^2 - 1| >= eps is minimised at c = 2/3, i.e. N - 1/3. On
the standard-deviation scale the best c is 1/6. On the log scale it is
-1/3.
"""

from scipy import special
import numpy as np

from epsmiss import ard
from epsmiss.ard import CHI2_1, TransformSpec

for scale, tag in (("variance", "identity"), ("sd", "sqrt"), ("log", "log")):
    c0 = ard.eps_miss_optimal_c(scale)
    curve = [ard.lambda0_transformed(c, 0.0, CHI2_1, TransformSpec(tag)).value
             for c in (-1, 0, c0, 1)]
    print(f"{scale:>8}: best c = {c0: .4f}; lambda at c=-1,0,c0,1: "
          + ", ".join(f"{v: .3f}" for v in curve))


# exact miss probabilities: sum of squares / sigma^2 is chi-square with N - 1 df
def exact_diff(c, eps, log_scale=False):
    k = np.arange(int(np.ceil(1 / eps)), int(80 / eps**2) + 1, dtype=float) - 1

    def miss(cc):
        lo, hi = ((k + cc) * np.exp(-eps), (k + cc) * np.exp(eps)) if log_scale else \
            ((k + cc) * (1 - eps), (k + cc) * (1 + eps))
        return special.gammainc(k / 2, lo / 2) + special.gammaincc(k / 2, hi / 2)

    return np.sum(miss(c) - miss(0.0))


print()
for eps in (0.04, 0.02):
    print(f"eps={eps}: exact E(Q(2/3) - Q(0)) = {exact_diff(2 / 3, eps):.4f}  (limit -2/9)"
          f";  log scale at c=-1/3: {exact_diff(-1 / 3, eps, True):.4f}  (limit -1/18)")

print("\nThe denominator zoo at N = 20")
for row in ard.denominator_zoo(20):
    print(f"{row.label:>5}  {row.exact:9.4f}  {row.approx:9.4f}  {row.approx_formula:<24} "
          f"{row.principle}")
