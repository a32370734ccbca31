"""Closed-form asymptotic relative deficiencies and their minimisers.

A deficiency is the limit of E(Q_1 - Q_2), the expected difference in the
number of eps-misses of two estimator sequences sharing a first-order limit.
All functions here are pure and return :class:`ArdValue`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .dist import MomentSpec
from .special import (
    chi2_quantile,
    mean_log_chi2,
    mean_sqrt_chi2,
    norm_pdf,
    norm_sf,
    wilson_hilferty_median,
)


@dataclass(frozen=True)
class ArdValue:
    value: float
    formula: str
    inputs: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


def _echo(spec, **kw):
    out = dict(kw)
    if spec is not None:
        out["spec"] = asdict(spec)
    return out


@dataclass(frozen=True)
class TransformSpec:
    """Smooth increasing transform, described by -h''(xi)/h'(xi) at the target.

    Built-in tags derive the ratio from ``xi``; ``custom`` must supply it.
    """

    tag: str = "identity"
    h_ratio: Optional[float] = None

    def __post_init__(self):
        if self.tag not in ("identity", "sqrt", "log", "square", "custom"):
            raise ValueError(f"unknown transform tag {self.tag!r}")
        if self.tag == "custom" and self.h_ratio is None:
            raise ValueError("a custom transform must supply h_ratio")

    def ratio_at(self, xi: float) -> float:
        if self.h_ratio is not None:
            return float(self.h_ratio)
        if self.tag == "identity":
            return 0.0
        if not xi > 0:
            raise ValueError(f"transform {self.tag!r} is not increasing at xi = {xi}")
        # -h''/h' for sqrt, log and square
        return {"sqrt": 0.5 / xi, "log": 1.0 / xi, "square": -1.0 / xi}[self.tag]


def lambda_a(c: float, spec: MomentSpec, a: float, d: float = 0.0) -> ArdValue:
    """Limit of E{Q(c, d) - Q(0, 0)} counted over n >= a / eps^2 (fixed a)."""
    if not a > 0:
        raise ValueError("a must be positive")
    r = (spec.xi - d) / spec.sigma
    x = math.sqrt(a) / spec.sigma
    skew = 2.0 * spec.gamma / 3.0 * r
    value = (2.0 * (r * r * c * c - (2.0 - skew) * c) * float(norm_sf(x))
             - skew * x * float(norm_pdf(x)) * c)
    return ArdValue(value, "lambda_a", _echo(spec, c=c, d=d, a=a))


def _lambda0_coeffs(d, spec, h_ratio=0.0):
    r = (spec.xi - d) / spec.sigma
    lead = r * r
    slope = -2.0 + 2.0 * spec.gamma / 3.0 * r + h_ratio * (spec.xi - d)
    return lead, slope


def lambda0(c: float, d: float, spec: MomentSpec) -> ArdValue:
    """Shrinking-cutoff deficiency of (n mean + c d)/(n + c) against the mean."""
    lead, slope = _lambda0_coeffs(d, spec)
    return ArdValue(lead * c * c + slope * c, "lambda0", _echo(spec, c=c, d=d))


def lambda0_transformed(c: float, d: float, spec: MomentSpec, h: TransformSpec) -> ArdValue:
    """Deficiency when misses are measured on the scale of h."""
    lead, slope = _lambda0_coeffs(d, spec, h.ratio_at(spec.xi))
    return ArdValue(lead * c * c + slope * c, "lambda0_transformed",
                    _echo(spec, c=c, d=d, transform=asdict(h)))


def _check_xi_nonzero(spec):
    if spec.xi == 0:
        raise ValueError("xi = 0 is excluded: the squared-mean asymptotics differ there")


def lambda0_squared_mean(d: float, spec: MomentSpec) -> ArdValue:
    """mean^2 - d sigma^2 / n against mean^2 (also holds with the unbiased variance)."""
    _check_xi_nonzero(spec)
    ratio = spec.sigma**2 / spec.xi**2
    return ArdValue((0.25 * d * d + 0.5 * d) * ratio, "squared_mean", _echo(spec, d=d))


def hl_deficiency(c: float, d: float, spec: MomentSpec) -> ArdValue:
    """Hodges-Lehmann sample-size deficiency; no skewness term."""
    r = (spec.xi - d) / spec.sigma
    return ArdValue(r * r * c * c - 2.0 * c, "hl", _echo(spec, c=c, d=d))


def hl_squared_mean(d: float, spec: MomentSpec) -> ArdValue:
    _check_xi_nonzero(spec)
    ratio = spec.sigma**2 / spec.xi**2
    return ArdValue((0.25 * d * d - 0.5 * d) * ratio, "hl_squared_mean", _echo(spec, d=d))


def _matching_size(n0, c, k, sigma):
    # n solving (n sigma^2 + k) / (n + c)^2 = sigma^2 / n0, cleared of fractions
    s2 = sigma * sigma

    def g(n):
        return n0 * (n * s2 + k) - s2 * (n + c) ** 2

    lo, hi = 0.5 * n0, 2.0 * n0
    if not g(lo) > 0 > g(hi):
        raise ValueError(f"no root in bracket [{lo}, {hi}] for n0 = {n0}")
    return optimize.brentq(g, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def hl_deficiency_numeric(c, d, xi, sigma, n_grid: Sequence[float]) -> float:
    """Sample-size deficiency from exact normal-model MSE matching.

    For each n0 the shrinkage estimator's sample size n with the same MSE as
    the plain mean at n0 is root-solved; ``n - n0`` is then extrapolated to
    n0 -> infinity by a least-squares fit in 1/n0.
    """
    k = c * c * (xi - d) ** 2
    n0 = np.asarray(n_grid, dtype=float)
    if n0.size < 2:
        raise ValueError("need at least two sample sizes to extrapolate")
    gaps = np.array([_matching_size(m, c, k, sigma) - m for m in n0])
    design = np.column_stack([np.ones_like(n0), 1.0 / n0])
    coef, *_ = np.linalg.lstsq(design, gaps, rcond=None)
    return float(coef[0])


def binomial_risk(c: float, d: float, p: float) -> ArdValue:
    """Smoothed-limit deficiency of (Y_n + c d)/(n + c) for a binomial proportion.

    The lattice case itself is not covered; this is the limit reached by
    spreading the success mass over [1 - eta, 1 + eta] and letting eta -> 0.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0, 1)")
    q = 1.0 - p
    pq = p * q
    value = (p - d) ** 2 / pq * c * c - 2.0 * c - 2.0 / 3.0 * (p - q) * (p - d) / pq * c
    return ArdValue(value, "binomial", {"c": c, "d": d, "p": p})


@dataclass(frozen=True)
class Vertex:
    c0: float
    value: float
    unbounded: bool
    lead: float
    slope: float


def argmin_c(curve: Callable[[float], float]) -> Vertex:
    """Exact minimiser of a quadratic curve.

    The coefficients are read off three evaluations at -1, 0, 1, which is
    exact for a quadratic. A non-positive leading coefficient is reported as
    unbounded (with ``c0`` infinite in the descent direction) rather than
    raised.
    """
    f_m, f_0, f_p = (float(curve(x)) for x in (-1.0, 0.0, 1.0))
    lead = 0.5 * (f_p + f_m) - f_0
    slope = 0.5 * (f_p - f_m)
    if lead > 0:
        c0 = -slope / (2.0 * lead)
        return Vertex(c0, lead * c0 * c0 + slope * c0 + f_0, False, lead, slope)
    if lead == 0 and slope == 0:
        return Vertex(0.0, f_0, False, lead, slope)
    direction = -math.copysign(1.0, slope) if slope != 0 else 1.0
    return Vertex(direction * math.inf, -math.inf, True, lead, slope)


def bayes_optimal_cd(theta0: float, tau2: float):
    """(c, d) minimising the prior-averaged deficiency: (1 / tau2, theta0)."""
    if not tau2 > 0:
        raise ValueError("tau2 must be positive")
    return 1.0 / tau2, float(theta0)


def averaged_deficiency(c, d, theta0, tau2) -> ArdValue:
    """Normal-mean deficiency averaged over a prior with mean theta0, variance tau2."""
    if not tau2 > 0:
        raise ValueError("tau2 must be positive")
    value = (tau2 + (theta0 - d) ** 2) * c * c - 2.0 * c
    return ArdValue(value, "bayes_averaged", {"c": c, "d": d, "theta0": theta0, "tau2": tau2})


# chi2_1 moments: the variance problem reduces to a mean problem on these
CHI2_1 = MomentSpec(1.0, math.sqrt(2.0), 2.0 * math.sqrt(2.0))


def eps_miss_optimal_c(scale: str) -> float:
    """Best c in the denominator N - 1 + c for eps-misses of a normal variance."""
    tag = {"variance": "identity", "sd": "sqrt", "log": "log"}[scale]
    h = TransformSpec(tag)
    return argmin_c(lambda c: lambda0_transformed(c, 0.0, CHI2_1, h).value).c0


@dataclass(frozen=True)
class ZooRow:
    label: str
    principle: str
    exact: float
    approx: float
    approx_formula: str


def denominator_zoo(N: int):
    """Denominators D in sum (Y_i - mean)^2 / D singled out by various principles.

    ``exact`` uses gamma/digamma evaluations or root-finding where the
    principle calls for it; ``approx`` is the familiar closed-form rule.
    Rows whose denominator is not positive for this N carry NaN.
    """
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N}")
    N = int(N)
    n = N - 1
    esq = float(mean_sqrt_chi2(n))

    def pos(x):
        return x if x > 0 else math.nan

    c_var, c_sd, c_log = (eps_miss_optimal_c(s) for s in ("variance", "sd", "log"))
    rows = [
        ZooRow("i", "maximum likelihood", N, N, "N"),
        ZooRow("ii", "unbiased (UMV) for sigma^2", n, n, "N - 1"),
        ZooRow("iii", "unbiased for sigma", esq**2, N - 1.5, "N - 3/2"),
        ZooRow("iv", "minimum MSE for sigma^2", N + 1, N + 1, "N + 1"),
        ZooRow("v", "minimum MSE for sigma", n * n / esq**2, N - 0.5, "N - 1/2"),
        ZooRow("vi", "median unbiased", chi2_quantile(0.5, n), wilson_hilferty_median(n),
               "N - 5/3 + 4/(27(N - 1))"),
        ZooRow("vii", "unbiased for log sigma", math.exp(float(mean_log_chi2(n))), N - 2.0, "N - 2"),
        ZooRow("viii", "Bayes, vague prior, squared error on sigma^2 (N - 1 on 1/sigma^2)",
               pos(N - 3.0), pos(N - 3.0), "N - 3"),
        ZooRow("ix", "fewest eps-misses for sigma^2", pos(n + c_var), N - 1.0 / 3.0, "N - 1/3"),
        ZooRow("x", "fewest eps-misses for sigma", pos(n + c_sd), N - 5.0 / 6.0, "N - 5/6"),
        ZooRow("xi", "fewest eps-misses for log sigma", pos(n + c_log), N - 4.0 / 3.0, "N - 4/3"),
    ]
    return rows


FORMULAS = {
    "lambda0": lambda0,
    "lambda0_transformed": lambda0_transformed,
    "hl": hl_deficiency,
    "binomial": binomial_risk,
    "squared_mean": lambda0_squared_mean,
    "lambda_a": lambda_a,
}


def formula(name: str):
    """Look up a deficiency formula by identifier (hyphens accepted)."""
    key = name.replace("-", "_").lower()
    try:
        return FORMULAS[key]
    except KeyError:
        raise ValueError(f"unknown formula {name!r}; known: {', '.join(FORMULAS)}") from None
