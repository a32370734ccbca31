"""One-term Edgeworth approximation and the semi-analytic E Q_eps oracle.

Only the 1/sqrt(n) skewness term of the expansion is used; the 1/n term
is omitted, so :func:`edgeworth_cdf` carries an O(1/n) bias.
"""

from dataclasses import dataclass

import numpy as np

from .special import norm_cdf, norm_pdf, norm_sf, upper_tail_first_moment

#: sigma is inflated by (1 + TAIL_SAFETY * eps) in :func:`tail_bound`.
#: Covers the large-deviation tails of laws with |skewness| / sd up to 3,
#: where the Gaussian exponent overstates decay by a factor 1 - gamma*eps/(3 sd).
TAIL_SAFETY = 0.5

_CHUNK = 1 << 20


def _skew_term(t, n, gamma):
    t = np.asarray(t, dtype=float)
    return gamma / (6.0 * np.sqrt(n)) * (t * t - 1.0) * norm_pdf(t)


def edgeworth_cdf(t, n, gamma, return_clamped=False):
    """Phi(t) - gamma/(6 sqrt(n)) (t^2 - 1) phi(t), clamped to [0, 1].

    With ``return_clamped`` the number of clamped entries is returned too.
    """
    n = np.asarray(n)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    raw = norm_cdf(t) - _skew_term(t, n, gamma)
    out = np.clip(raw, 0.0, 1.0)
    if return_clamped:
        return out, int(np.count_nonzero(out != raw))
    return out


def edgeworth_sf(t, n, gamma, return_clamped=False):
    """1 - edgeworth_cdf, computed without cancellation in the right tail."""
    raw = norm_sf(t) + _skew_term(t, n, gamma)
    out = np.clip(raw, 0.0, 1.0)
    if return_clamped:
        return out, int(np.count_nonzero(out != raw))
    return out


@dataclass(frozen=True)
class SemiAnalytic:
    value: float
    n_terms: int
    n_clamped: int


def _miss_bounds(n, c, d, spec, eps):
    # standardized T_n thresholds: miss iff T_n <= l or T_n >= r
    sq = np.sqrt(n)
    shift = c * (spec.xi - d) / (spec.sigma * sq)
    wing = sq * eps / spec.sigma + c * eps / (spec.sigma * sq)
    return shift - wing, shift + wing


def _window(family, spec, config):
    n_min, n_max = config.window(spec.sigma)
    if family.c <= -n_min:
        raise ValueError(f"c = {family.c} must exceed -n_min = {-n_min}")
    return n_min, n_max


def _miss_prob(n, c, d, spec, eps):
    lo, hi = _miss_bounds(n, c, d, spec, eps)
    p_lo, k_lo = edgeworth_cdf(lo, n, spec.gamma, return_clamped=True)
    p_hi, k_hi = edgeworth_sf(hi, n, spec.gamma, return_clamped=True)
    return p_lo + p_hi, k_lo + k_hi


def semi_analytic_eq(family, spec, config) -> SemiAnalytic:
    """Sum of Edgeworth miss probabilities over the counting window.

    ``family`` is a shrinkage-mean family (attributes ``c`` and ``d``).
    """
    n_min, n_max = _window(family, spec, config)
    total, clamped = 0.0, 0
    for start in range(n_min, n_max + 1, _CHUNK):
        n = np.arange(start, min(start + _CHUNK, n_max + 1), dtype=float)
        p, k = _miss_prob(n, family.c, family.d, spec, config.epsilon)
        total += float(np.sum(p))
        clamped += k
    return SemiAnalytic(total, n_max - n_min + 1, clamped)


def semi_analytic_diff(family, baseline, spec, config) -> SemiAnalytic:
    """E{Q(family) - Q(baseline)} summed termwise over a shared window."""
    n_min, n_max = _window(family, spec, config)
    _window(baseline, spec, config)
    total, clamped = 0.0, 0
    for start in range(n_min, n_max + 1, _CHUNK):
        n = np.arange(start, min(start + _CHUNK, n_max + 1), dtype=float)
        p1, k1 = _miss_prob(n, family.c, family.d, spec, config.epsilon)
        p0, k0 = _miss_prob(n, baseline.c, baseline.d, spec, config.epsilon)
        total += float(np.sum(p1 - p0))
        clamped += k1 + k0
    return SemiAnalytic(total, n_max - n_min + 1, clamped)


def gaussian_tail_integral(a, sigma):
    """Integral of 2 (1 - Phi(sqrt(s)/sigma)) over s > a, in closed form."""
    if not a > 0:
        raise ValueError("a must be positive")
    return 4.0 * sigma * sigma * float(upper_tail_first_moment(np.sqrt(a) / sigma))


def tail_bound(a_max, sigma, epsilon) -> float:
    """Upper bound on the expected number of misses beyond n = a_max / eps^2.

    Integral comparison against the Gaussian tail with sigma inflated by
    ``1 + TAIL_SAFETY * epsilon`` to absorb the Edgeworth error.
    """
    if not a_max > 0:
        raise ValueError("a_max must be positive")
    if not (sigma > 0 and epsilon > 0):
        raise ValueError("sigma and epsilon must be positive")
    sigma_eff = sigma * (1.0 + TAIL_SAFETY * epsilon)
    return gaussian_tail_integral(a_max, sigma_eff) / epsilon**2
