"""Brownian occupation functional Q and the reference (A, B) pair sampler.

Q is the time a standard Brownian motion spends outside the cone
|W(s)| < s / sigma; its mean is sigma^2. Paths are built from exact Gaussian
increments on a uniform grid, so the only error is the Riemann-sum
discretisation of the occupation measure (and truncation at the horizon).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dist import SeedLike, make_rng

#: mixing weight on the countermonotonic pair giving correlation -1/3,
#: since corr(F^-1(U), F^-1(1 - U)) = 1 - pi^2/6 for exponential marginals
COUNTER_WEIGHT = (1.0 / 3.0) / (math.pi**2 / 6.0 - 1.0)

_MAX_STEPS = 50_000_000


@dataclass(frozen=True)
class PathConfig:
    """Discretisation of one Brownian path.

    ``horizon`` defaults to 40 sigma^2 and ``step`` to sigma^2 / 400.
    """

    sigma: float = 1.0
    horizon: Optional[float] = None
    step: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        if self.n_steps > _MAX_STEPS:
            raise ValueError(f"{self.n_steps} grid steps exceed the budget of {_MAX_STEPS}")

    @property
    def T(self) -> float:
        return self.horizon if self.horizon is not None else 40.0 * self.sigma**2

    @property
    def ds(self) -> float:
        return self.step if self.step is not None else self.sigma**2 / 400.0

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.T / self.ds)))


@dataclass(frozen=True)
class QLawSample:
    q: float
    horizon: float
    step: float


def _path(rng, n_steps, ds):
    return np.cumsum(rng.standard_normal(n_steps)) * math.sqrt(ds)


def _occupation(w, ds, sigma, stride=1):
    # grid points s_k = k ds, k = 1..K, optionally every ``stride``-th only
    if stride > 1:
        w = w[stride - 1 :: stride]
        ds = ds * stride
    s = ds * np.arange(1, len(w) + 1)
    return ds * np.count_nonzero(np.abs(w) >= s / sigma)


def simulate_q(config: PathConfig, seed: Optional[SeedLike] = None) -> QLawSample:
    """One draw of Q = Leb{s : |W(s)| >= s / sigma} on the configured grid."""
    rng = make_rng(config.seed if seed is None else seed)
    n, ds = config.n_steps, config.T / config.n_steps
    w = _path(rng, n, ds)
    return QLawSample(float(_occupation(w, ds, config.sigma)), config.T, ds)


def simulate_q_levels(config: PathConfig, levels: int, seed: Optional[SeedLike] = None):
    """Q on the configured grid and on ``levels - 1`` successively coarser
    grids (step doubled each time), all read off the same path.

    Returns a list ordered from the finest step to the coarsest.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    rng = make_rng(config.seed if seed is None else seed)
    n, ds = config.n_steps, config.T / config.n_steps
    w = _path(rng, n, ds)
    return [float(_occupation(w, ds, config.sigma, 2**j)) for j in range(levels)]


def sample_ab_pairs(c: float, xi: float, size: int, seed: SeedLike):
    """Reference pairs with Exponential(mean c xi) marginals and correlation -1/3.

    With probability ``COUNTER_WEIGHT`` the pair is countermonotonic,
    otherwise independent. Only the marginals and the correlation are meant
    to be matched; the joint law is a stand-in.
    """
    if not (c > 0 and xi > 0):
        raise ValueError("c and xi must be positive")
    rng = make_rng(seed)
    mean = c * xi
    # shifted off zero so both log(u) and log1p(-u) stay finite
    u = rng.random((size, 3)) + 2.0**-54
    counter = u[:, 0] < COUNTER_WEIGHT
    a = -mean * np.log1p(-u[:, 1])
    b = np.where(counter, -mean * np.log(u[:, 1]), -mean * np.log1p(-u[:, 2]))
    return a, b


def sample_ab_pair(c: float, xi: float, seed: SeedLike):
    a, b = sample_ab_pairs(c, xi, 1, seed)
    return float(a[0]), float(b[0])
