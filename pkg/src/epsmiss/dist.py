"""Generating distributions, their exact moments, and reproducible streams.

Every generator is an immutable description. Randomness comes from numpy's
``SeedSequence``/``PCG64`` pair, so a replication's stream can be derived from
``(master_seed, experiment_id, replication)`` without any coordination between
workers (see :func:`stream_seed`).

Sampling methods are fixed so golden outputs stay stable:

* Normal: numpy's ziggurat ``standard_normal``, shifted and scaled.
* Exponential: numpy's ziggurat ``standard_exponential``, scaled.
* ChiSquare1: the square of a standard normal draw.
* Bernoulli / SmoothedBernoulli: one uniform decides success; the smoothed
  variant then draws a second uniform for the location on ``[1-eta, 1+eta]``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass
from typing import Iterator, Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence]

DEFAULT_BLOCK = 1 << 16


@dataclass(frozen=True)
class MomentSpec:
    """Mean, standard deviation and skewness of the generating distribution."""

    xi: float
    sigma: float
    gamma: float = 0.0
    has_fourth_moment: bool = True
    is_lattice: bool = False

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not (math.isfinite(self.xi) and math.isfinite(self.gamma)):
            raise ValueError("xi and gamma must be finite")


def _check_unit_interval(name, value):
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def mean(self):
        return float(self.mu)

    @property
    def variance(self):
        return float(self.sigma) ** 2

    def _draw(self, rng, size):
        return self.mu + self.sigma * rng.standard_normal(size)


@dataclass(frozen=True)
class Exponential:
    """Exponential distribution parameterised by its mean ``theta``."""

    theta: float = 1.0

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")

    @property
    def mean(self):
        return float(self.theta)

    @property
    def variance(self):
        return float(self.theta) ** 2

    def _draw(self, rng, size):
        return self.theta * rng.standard_exponential(size)


@dataclass(frozen=True)
class ChiSquare1:
    @property
    def mean(self):
        return 1.0

    @property
    def variance(self):
        return 2.0

    def _draw(self, rng, size):
        z = rng.standard_normal(size)
        return z * z


@dataclass(frozen=True)
class Bernoulli:
    p: float = 0.5

    def __post_init__(self):
        _check_unit_interval("p", self.p)

    @property
    def mean(self):
        return float(self.p)

    @property
    def variance(self):
        return self.p * (1.0 - self.p)

    def _draw(self, rng, size):
        return (rng.random(size) < self.p).astype(float)


@dataclass(frozen=True)
class SmoothedBernoulli:
    """Bernoulli(p) with the success mass spread uniformly on [1-eta, 1+eta].

    The point mass at zero stays, but the continuous component makes the law
    non-lattice, so the Edgeworth-based formulas apply for every eta > 0.
    """

    p: float = 0.5
    eta: float = 0.01

    def __post_init__(self):
        _check_unit_interval("p", self.p)
        _check_unit_interval("eta", self.eta)

    def raw_moments(self):
        # E U^k for U ~ Uniform[1-eta, 1+eta]: 1, 1 + eta^2/3, 1 + eta^2
        p, e2 = self.p, self.eta**2
        return p, p * (1.0 + e2 / 3.0), p * (1.0 + e2)

    @property
    def mean(self):
        return float(self.p)

    @property
    def variance(self):
        m1, m2, _ = self.raw_moments()
        return m2 - m1 * m1

    def _draw(self, rng, size):
        # uniforms consumed in (success, location) pairs: block-size invariant
        u = rng.random((size, 2))
        loc = 1.0 + self.eta * (2.0 * u[:, 1] - 1.0)
        return np.where(u[:, 0] < self.p, loc, 0.0)


@dataclass(frozen=True)
class PointMass:
    """Degenerate stream; useful as a sanity generator (no MomentSpec)."""

    value: float = 0.0

    @property
    def mean(self):
        return float(self.value)

    @property
    def variance(self):
        return 0.0

    def _draw(self, rng, size):
        return np.full(size, float(self.value))


Generator = Union[Normal, Exponential, ChiSquare1, Bernoulli, SmoothedBernoulli, PointMass]

FAMILIES = {
    "normal": Normal,
    "exponential": Exponential,
    "chisquare1": ChiSquare1,
    "bernoulli": Bernoulli,
    "smoothed_bernoulli": SmoothedBernoulli,
    "point_mass": PointMass,
}

# short names accepted by the command line
ALIASES = {
    "exp1": ("exponential", {"theta": 1.0}),
    "exp": ("exponential", {}),
    "norm": ("normal", {}),
    "chisq1": ("chisquare1", {}),
    "chi2_1": ("chisquare1", {}),
    "smoothed-bernoulli": ("smoothed_bernoulli", {}),
    "point-mass": ("point_mass", {}),
}


def generator_spec(g) -> MomentSpec:
    """Exact analytic moments of a built-in generator.

    >>> generator_spec(Exponential(1.0))
    MomentSpec(xi=1.0, sigma=1.0, gamma=2.0, has_fourth_moment=True, is_lattice=False)
    """
    if isinstance(g, Normal):
        return MomentSpec(g.mu, g.sigma, 0.0)
    if isinstance(g, Exponential):
        return MomentSpec(g.theta, g.theta, 2.0)
    if isinstance(g, ChiSquare1):
        return MomentSpec(1.0, math.sqrt(2.0), 2.0 * math.sqrt(2.0))
    if isinstance(g, Bernoulli):
        p, q = g.p, 1.0 - g.p
        return MomentSpec(p, math.sqrt(p * q), (q - p) / math.sqrt(p * q), is_lattice=True)
    if isinstance(g, SmoothedBernoulli):
        m1, m2, m3 = g.raw_moments()
        var = m2 - m1 * m1
        mu3 = m3 - 3.0 * m1 * m2 + 2.0 * m1**3
        return MomentSpec(m1, math.sqrt(var), mu3 / var**1.5)
    if isinstance(g, PointMass):
        raise ValueError("a point mass has sigma = 0 and no moment spec")
    raise TypeError(f"not a generator: {g!r}")


def generator_from_config(obj) -> Generator:
    """Build a generator from ``{"family": ..., "params": {...}}``."""
    family = str(obj["family"]).lower()
    params = dict(obj.get("params") or {})
    if family in ALIASES:
        family, defaults = ALIASES[family]
        params = {**defaults, **params}
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown generator family {obj['family']!r}") from None
    return cls(**params)


def generator_to_config(g) -> dict:
    for name, cls in FAMILIES.items():
        if type(g) is cls:
            return {"family": name, "params": asdict(g)}
    raise TypeError(f"not a generator: {g!r}")


def _entropy_of(experiment_id) -> int:
    if isinstance(experiment_id, int):
        return experiment_id
    digest = hashlib.blake2b(str(experiment_id).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream_seed(master_seed: int, experiment_id, replication: int) -> np.random.SeedSequence:
    """Per-stream seed for replication ``r`` of experiment ``e``.

    The experiment id is hashed with BLAKE2b (8-byte digest, little endian)
    and used with the replication index as the ``SeedSequence`` spawn key.
    """
    return np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(_entropy_of(experiment_id), int(replication))
    )


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def iter_blocks(g, seed: SeedLike, n: int, block: int = DEFAULT_BLOCK) -> Iterator[np.ndarray]:
    """Yield the stream of ``n`` draws in consecutive blocks of at most ``block``.

    The concatenated output does not depend on ``block``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = make_rng(seed)
    done = 0
    while done < n:
        k = min(block, n - done)
        yield g._draw(rng, k)
        done += k


def sample_stream(g, seed: SeedLike, n: int) -> np.ndarray:
    """First ``n`` i.i.d. draws from ``g``, deterministic given ``(g, seed)``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return np.empty(0)
    return np.concatenate(list(iter_blocks(g, seed, n)))
