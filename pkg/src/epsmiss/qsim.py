"""Streaming computation of Q_eps, the number of eps-misses of an estimator.

A data stream is consumed once, in blocks, carrying only ``(n, mean, M2)``
between blocks. Several estimator families can be evaluated on the same
pass, which is how coupled (common random numbers) differences are formed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import dist
from .edgeworth import tail_bound

TRANSFORMS = ("identity", "sqrt", "log", "square")
VARIANCE_SCALES = ("variance", "sd", "log")
VARIANCE_MODES = ("known", "unbiased")


class WindowOverflowError(RuntimeError):
    """The counting window exceeds the configured compute budget."""


class TargetMismatchError(ValueError):
    """Coupled families do not estimate the same target on the same scale."""


def _central_moments(g):
    """(mean, variance, fourth central moment) of a generator."""
    if isinstance(g, dist.Normal):
        return g.mu, g.sigma**2, 3.0 * g.sigma**4
    if isinstance(g, dist.Exponential):
        return g.theta, g.theta**2, 9.0 * g.theta**4
    if isinstance(g, dist.ChiSquare1):
        return 1.0, 2.0, 60.0
    if isinstance(g, dist.Bernoulli):
        p, q = g.p, 1.0 - g.p
        return p, p * q, p * q * (1.0 - 3.0 * p * q)
    if isinstance(g, dist.SmoothedBernoulli):
        p, e2 = g.p, g.eta**2
        m1, m2, m3 = g.raw_moments()
        m4 = p * (1.0 + 2.0 * e2 + e2 * e2 / 5.0)
        mu4 = m4 - 4 * m1 * m3 + 6 * m1**2 * m2 - 3 * m1**4
        return m1, m2 - m1 * m1, mu4
    if isinstance(g, dist.PointMass):
        return g.value, 0.0, 0.0
    raise TypeError(f"not a generator: {g!r}")


def _apply_h(h, x):
    with np.errstate(invalid="ignore", divide="ignore"):
        if h == "identity":
            return x
        if h == "sqrt":
            return np.sqrt(x)
        if h == "log":
            return np.log(x)
        if h == "square":
            return x * x
    raise ValueError(f"unknown transform {h!r}")


def _h_prime(h, x):
    return {"identity": 1.0, "sqrt": 0.5 / math.sqrt(x) if x > 0 else math.nan,
            "log": 1.0 / x if x > 0 else math.nan, "square": 2.0 * x}[h]


def _miss(est, target, eps):
    # non-finite estimates (log or sqrt of a non-positive value) count as misses
    err = np.abs(est - target)
    return ~(err < eps)


@dataclass(frozen=True)
class ShrinkMean:
    """(n * mean + c * d) / (n + c), estimating the mean."""

    c: float = 0.0
    d: float = 0.0
    needs_m2 = False
    min_n = 1

    def target_key(self, g):
        return ("mean", float(g.mean))

    def sigma_limit(self, g):
        return math.sqrt(_central_moments(g)[1])

    def check_window(self, n_min):
        if not self.c > -n_min:
            raise ValueError(f"c = {self.c} must exceed -n_min = {-n_min}")

    def estimate(self, n, mean, m2, g):
        return (n * mean + self.c * self.d) / (n + self.c)

    def miss(self, n, mean, m2, g, eps):
        return _miss(self.estimate(n, mean, m2, g), g.mean, eps)


@dataclass(frozen=True)
class Transformed:
    """h applied to a shrinkage mean; misses measured on the h scale."""

    base: ShrinkMean = ShrinkMean()
    h: str = "identity"
    needs_m2 = False
    min_n = 1

    def __post_init__(self):
        if self.h not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.h!r}")

    def target_key(self, g):
        if self.h == "identity":
            return ("mean", float(g.mean))
        return (f"h={self.h}", float(_apply_h(self.h, g.mean)))

    def sigma_limit(self, g):
        return abs(_h_prime(self.h, g.mean)) * self.base.sigma_limit(g)

    def check_window(self, n_min):
        self.base.check_window(n_min)

    def miss(self, n, mean, m2, g, eps):
        est = _apply_h(self.h, self.base.estimate(n, mean, m2, g))
        return _miss(est, _apply_h(self.h, g.mean), eps)


@dataclass(frozen=True)
class VarianceDenom:
    """Sum of squared deviations over (N - 1 + c).

    ``scale`` selects the miss criterion: relative on the variance or the
    standard deviation, or absolute on log(variance). The window is indexed
    by the sample size N.
    """

    c: float = 0.0
    scale: str = "variance"
    needs_m2 = True
    min_n = 2

    def __post_init__(self):
        if self.scale not in VARIANCE_SCALES:
            raise ValueError(f"unknown variance scale {self.scale!r}")

    def target_key(self, g):
        var = _central_moments(g)[1]
        return (f"variance-{self.scale}", float(var))

    def sigma_limit(self, g):
        _, var, mu4 = _central_moments(g)
        s = math.sqrt(mu4 / var**2 - 1.0)
        return s / 2.0 if self.scale == "sd" else s

    def check_window(self, n_min):
        if n_min < 2:
            raise ValueError("variance families need N >= 2 (n_min >= 2)")
        if not n_min - 1 + self.c > 0:
            raise ValueError(f"N - 1 + c must be positive from N = {n_min}")

    def miss(self, n, mean, m2, g, eps):
        var = _central_moments(g)[1]
        est = m2 / (n - 1.0 + self.c)
        with np.errstate(invalid="ignore", divide="ignore"):
            if self.scale == "variance":
                return _miss(est / var, 1.0, eps)
            if self.scale == "sd":
                return _miss(np.sqrt(est / var), 1.0, eps)
            return _miss(np.log(est), math.log(var), eps)


@dataclass(frozen=True)
class SquaredMean:
    """mean^2 - d * v / n with v the known variance or the unbiased estimate."""

    d: float = 0.0
    variance_mode: str = "known"
    needs_m2 = property(lambda self: self.variance_mode == "unbiased")
    min_n = property(lambda self: 2 if self.variance_mode == "unbiased" else 1)

    def __post_init__(self):
        if self.variance_mode not in VARIANCE_MODES:
            raise ValueError(f"unknown variance mode {self.variance_mode!r}")

    def target_key(self, g):
        # labelled by estimand, so that xi = 1 does not pair it with the mean
        return ("mean^2", float(g.mean) ** 2)

    def sigma_limit(self, g):
        _, var, _ = _central_moments(g)
        # xi = 0 has a different rate; fall back to sigma, which over-covers
        return 2.0 * abs(g.mean) * math.sqrt(var) if g.mean != 0 else math.sqrt(var)

    def check_window(self, n_min):
        if n_min < self.min_n:
            raise ValueError(f"{self.variance_mode} mode needs n_min >= {self.min_n}")

    def miss(self, n, mean, m2, g, eps):
        if self.variance_mode == "known":
            v = _central_moments(g)[1]
        else:
            v = m2 / (n - 1.0)
        return _miss(mean * mean - self.d * v / n, g.mean**2, eps)


@dataclass(frozen=True)
class QConfig:
    """Counting window for eps-misses.

    ``cutoff_rule`` is ``"fixed"`` (window starts at a / eps^2) or
    ``"shrinking"`` (a(eps) = eps, so the window starts at 1 / eps). Unless
    ``n_max`` is given the window ends at a_max / eps^2 with
    a_max = ``a_max_factor`` * sigma_limit^2.
    """

    epsilon: float
    cutoff_rule: str = "shrinking"
    a: Optional[float] = None
    n_max: Optional[int] = None
    a_max_factor: float = 40.0
    max_window: int = 50_000_000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.cutoff_rule not in ("fixed", "shrinking"):
            raise ValueError(f"unknown cutoff rule {self.cutoff_rule!r}")
        if self.cutoff_rule == "fixed" and not (self.a is not None and self.a > 0):
            raise ValueError("a fixed cutoff needs a > 0")

    @property
    def cutoff(self) -> float:
        return self.epsilon if self.cutoff_rule == "shrinking" else float(self.a)

    @property
    def n_min(self) -> int:
        x = self.cutoff / self.epsilon**2
        return max(1, math.ceil(x * (1.0 - 1e-12)))

    def window(self, sigma_limit: float):
        n_min = self.n_min
        if self.n_max is not None:
            n_max = int(self.n_max)
        else:
            if not sigma_limit > 0:
                raise ValueError("a default window needs sigma_limit > 0; pass n_max")
            n_max = math.ceil(self.a_max_factor * sigma_limit**2 / self.epsilon**2)
        if n_max < n_min:
            raise ValueError(f"n_max = {n_max} is below n_min = {n_min}")
        if n_max > self.max_window:
            raise WindowOverflowError(
                f"window end {n_max} exceeds the budget of {self.max_window} steps"
            )
        return n_min, n_max


@dataclass(frozen=True)
class QCount:
    q: int
    truncated_tail_bound: float
    n_min: int
    n_max: int


def running_moments(blocks):
    """Yield ``(n, mean, m2)`` arrays for each block of a stream.

    Each block is centred on a shift (the running mean, or the first draw
    for the first block) and merged into the carried state; the sum of
    squared deviations never forms a large difference of raw power sums.
    """
    n0, mean0, m20 = 0, 0.0, 0.0
    for x in blocks:
        k = len(x)
        if k == 0:
            continue
        shift = mean0 if n0 else float(x[0])
        n = np.arange(n0 + 1, n0 + k + 1, dtype=float)
        dev = x - shift
        s = np.cumsum(dev)
        offset = n0 * (mean0 - shift)
        mean = shift + (offset + s) / n
        m2 = m20 + n0 * (mean0 - shift) ** 2 + np.cumsum(dev * dev) - (offset + s) ** 2 / n
        np.maximum(m2, 0.0, out=m2)
        yield n, mean, m2
        n0, mean0, m20 = n0 + k, float(mean[-1]), float(m2[-1])


def _resolve(families, g, config):
    if not families:
        raise ValueError("no estimator families given")
    sig = max(f.sigma_limit(g) for f in families)
    n_min, n_max = config.window(sig)
    for f in families:
        f.check_window(n_min)
    return n_min, n_max, sig


def count_many(families: Sequence, g, config: QConfig, seed, block=dist.DEFAULT_BLOCK):
    """Miss counts of several families on one shared stream (one pass).

    Returns ``(counts, n_min, n_max, sigma_limit)``.
    """
    families = list(families)
    n_min, n_max, sig = _resolve(families, g, config)
    counts = np.zeros(len(families), dtype=np.int64)
    eps = config.epsilon
    for n, mean, m2 in running_moments(dist.iter_blocks(g, seed, n_max, block)):
        first = n_min - int(n[0])
        if first >= len(n):
            continue
        if first > 0:
            n, mean, m2 = n[first:], mean[first:], m2[first:]
        for i, f in enumerate(families):
            counts[i] += np.count_nonzero(f.miss(n, mean, m2, g, eps))
    return counts, n_min, n_max, sig


def count_q(family, g, config: QConfig, seed) -> QCount:
    """Exact number of n in [n_min, n_max] where the estimate misses by >= eps."""
    counts, n_min, n_max, sig = count_many([family], g, config, seed)
    bound = tail_bound(n_max * config.epsilon**2, sig, config.epsilon) if sig > 0 else 0.0
    return QCount(int(counts[0]), bound, n_min, n_max)


def check_coupled(f1, f2, g):
    k1, k2 = f1.target_key(g), f2.target_key(g)
    if k1[0] != k2[0] or not math.isclose(k1[1], k2[1], rel_tol=1e-12, abs_tol=1e-15):
        raise TargetMismatchError(f"families estimate different targets: {k1} vs {k2}")


def coupled_diff(f1, f2, g, config: QConfig, seed) -> int:
    """Q(f1) - Q(f2), both counted on the same stream in the same pass."""
    check_coupled(f1, f2, g)
    counts = count_many([f1, f2], g, config, seed)[0]
    return int(counts[0] - counts[1])


def scaled_diff_sample(f1, f2, g, config: QConfig, seed) -> float:
    """eps * (Q(f1) - Q(f2)); the second-order limit uses the shrinking cutoff."""
    return config.epsilon * coupled_diff(f1, f2, g, config, seed)


_FAMILY_KINDS = {
    "shrink_mean": ShrinkMean,
    "variance_denom": VarianceDenom,
    "squared_mean": SquaredMean,
    "transformed": Transformed,
}


def family_to_config(f) -> dict:
    for kind, cls in _FAMILY_KINDS.items():
        if type(f) is cls:
            if cls is Transformed:
                return {"kind": kind, "base": family_to_config(f.base), "h": f.h}
            return {"kind": kind, **asdict(f)}
    raise TypeError(f"not an estimator family: {f!r}")


def family_from_config(obj) -> object:
    obj = dict(obj)
    kind = obj.pop("kind")
    try:
        cls = _FAMILY_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown estimator family {kind!r}") from None
    if cls is Transformed:
        return Transformed(family_from_config(obj["base"]), obj.get("h", "identity"))
    return cls(**obj)
