import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special, stats

from epsmiss import ard, dist
from epsmiss.ard import CHI2_1, TransformSpec
from epsmiss.edgeworth import edgeworth_cdf, edgeworth_sf

EXP1 = dist.generator_spec(dist.Exponential(1.0))

finite = st.floats(-5, 5, allow_nan=False)
positive = st.floats(0.1, 5)


def test_exponential_mean_example():
    assert ard.lambda0(1 / 3, 0.0, EXP1).value == pytest.approx(-1 / 9, abs=1e-15)
    v = ard.argmin_c(lambda c: ard.lambda0(c, 0.0, EXP1).value)
    assert v.c0 == pytest.approx(1 / 3, abs=1e-15)
    assert v.value == pytest.approx(-1 / 9, abs=1e-15)


def test_zero_shrinkage_is_zero():
    assert ard.lambda0(0.0, 0.7, EXP1).value == 0.0
    assert ard.hl_deficiency(0.0, 0.7, EXP1).value == 0.0


def test_normal_variance_curve():
    # sum of squares over N - 1 + c reduces to a mean problem on chi2_1 draws
    for c in (-1.0, 0.0, 2 / 3, 1.0, 2.5):
        v = ard.lambda0_transformed(c, 0.0, CHI2_1, TransformSpec()).value
        assert v == pytest.approx(0.5 * c * c - 2 / 3 * c, abs=1e-14)
    assert ard.eps_miss_optimal_c("variance") == pytest.approx(2 / 3, abs=1e-14)


def test_sd_scale_optimum():
    assert ard.eps_miss_optimal_c("sd") == pytest.approx(1 / 6, abs=1e-12)


def test_log_scale_uses_ratio_at_xi():
    # -h''/h' = 1/xi for h = log, so the linear coefficient gains +1 at xi = 1
    v = ard.lambda0_transformed(0.5, 0.0, CHI2_1, TransformSpec("log")).value
    assert v == pytest.approx(0.5 * 0.25 + 0.5 / 3, abs=1e-14)
    assert ard.eps_miss_optimal_c("log") == pytest.approx(-1 / 3, abs=1e-14)


def _exact_variance_diff(c, eps, scale):
    # E{Q(c) - Q(0)} for normal data from exact chi-square miss probabilities
    n_min = math.ceil(1 / eps * (1 - 1e-12))
    n_max = math.ceil(40 * 2 / eps**2)
    k = np.arange(max(n_min, 2), n_max + 1, dtype=float) - 1.0

    def miss(cc):
        den = k + cc
        if scale == "log":
            lo, hi = den * math.exp(-eps), den * math.exp(eps)
        else:
            lo, hi = den * (1 - eps) ** 2, den * (1 + eps) ** 2
        return special.gammainc(k / 2, lo / 2) + special.gammaincc(k / 2, hi / 2)

    return float(np.sum(miss(c) - miss(0.0)))


@pytest.mark.parametrize("scale,tag", [("sd", "sqrt"), ("log", "log")])
@pytest.mark.parametrize("c", [1 / 6, -1 / 3])
def test_transformed_curve_against_exact_chi2_sums(scale, tag, c):
    # at eps = 0.01 the exact sums sit within 0.02 of the limit for small c
    exact = _exact_variance_diff(c, 0.01, scale)
    limit = ard.lambda0_transformed(c, 0.0, CHI2_1, TransformSpec(tag)).value
    assert exact == pytest.approx(limit, abs=0.02)


@pytest.mark.parametrize("scale,tag", [("sd", "sqrt"), ("log", "log")])
def test_exact_chi2_sums_approach_the_limit_at_large_c(scale, tag):
    # the O(sqrt(eps)) approach is slow at c = 1; check that the gap closes
    limit = ard.lambda0_transformed(1.0, 0.0, CHI2_1, TransformSpec(tag)).value
    gaps = [abs(_exact_variance_diff(1.0, e, scale) - limit) for e in (0.04, 0.01)]
    assert gaps[1] < 0.7 * gaps[0]
    assert gaps[1] < 0.06


def test_log_scale_exact_sums_settle_on_positive_side_at_one_sixth():
    vals = [_exact_variance_diff(1 / 6, e, "log") for e in (0.02, 0.01)]
    assert all(v > 0.06 for v in vals)


def test_identity_transform_reduces_exactly():
    for c, d in [(0.3, 0.1), (-0.5, 2.0), (1.7, -1.0)]:
        a = ard.lambda0(c, d, EXP1).value
        b = ard.lambda0_transformed(c, d, EXP1, TransformSpec("identity")).value
        assert abs(a - b) <= 1e-14


def test_transform_spec_validation():
    with pytest.raises(ValueError):
        TransformSpec("cube")
    with pytest.raises(ValueError):
        TransformSpec("custom")
    with pytest.raises(ValueError):
        TransformSpec("log").ratio_at(0.0)
    assert TransformSpec("custom", 0.25).ratio_at(-3.0) == 0.25
    assert TransformSpec("square").ratio_at(2.0) == -0.5


def test_squared_mean_example():
    spec = dist.MomentSpec(1.0, 1.0)
    v = ard.argmin_c(lambda d: ard.lambda0_squared_mean(d, spec).value)
    assert v.c0 == -1.0
    assert v.value == -0.25
    hl = ard.argmin_c(lambda d: ard.hl_squared_mean(d, spec).value)
    assert hl.c0 == 1.0 and hl.value == -0.25


def test_squared_mean_scales_with_cv():
    spec = dist.MomentSpec(2.0, 3.0)
    assert ard.lambda0_squared_mean(-1.0, spec).value == pytest.approx(-0.25 * 9 / 4)


def test_squared_mean_excludes_zero_mean():
    with pytest.raises(ValueError):
        ard.lambda0_squared_mean(-1.0, dist.MomentSpec(0.0, 1.0))
    with pytest.raises(ValueError):
        ard.hl_squared_mean(-1.0, dist.MomentSpec(0.0, 1.0))


def _lambda_a_quad(c, d, spec, a, eps=1e-3):
    # integrate the Edgeworth miss-probability difference over s = n eps^2
    def p(s, cc, dd):
        n = s / eps**2
        sq = np.sqrt(n)
        shift = cc * (spec.xi - dd) / (spec.sigma * sq)
        wing = sq * eps / spec.sigma + cc * eps / (spec.sigma * sq)
        return edgeworth_cdf(shift - wing, n, spec.gamma) + edgeworth_sf(shift + wing, n, spec.gamma)

    f = lambda s: (p(s, c, d) - p(s, 0.0, 0.0)) / eps**2  # noqa: E731
    return integrate.quad(f, a, 60 * spec.sigma**2, limit=500, epsabs=1e-12)[0]


@pytest.mark.parametrize("spec,c,d,a", [
    (EXP1, 1 / 3, 0.0, 0.5),
    (dist.MomentSpec(1.0, 2.0, -1.0), 1.5, 0.3, 0.2),
    (dist.MomentSpec(0.5, 1.0, 0.0), 2.0, -1.0, 1.0),
])
def test_lambda_a_against_quadrature(spec, c, d, a):
    assert ard.lambda_a(c, spec, a, d).value == pytest.approx(_lambda_a_quad(c, d, spec, a),
                                                              abs=2e-5)


def test_lambda_a_tends_to_lambda0():
    for a in (1e-4, 1e-6, 1e-8):
        gap = abs(ard.lambda_a(0.7, EXP1, a).value - ard.lambda0(0.7, 0.0, EXP1).value)
        assert gap < 2 * math.sqrt(a)
    with pytest.raises(ValueError):
        ard.lambda_a(1.0, EXP1, 0.0)


@given(c=finite, d=finite, xi=finite, sigma=positive, gamma=finite, t=finite)
def test_lambda0_shift_invariance(c, d, xi, sigma, gamma, t):
    a = ard.lambda0(c, d, dist.MomentSpec(xi, sigma, gamma)).value
    b = ard.lambda0(c, d + t, dist.MomentSpec(xi + t, sigma, gamma)).value
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)


@given(c=finite, d=finite, xi=finite, sigma=positive, gamma=finite, k=positive)
def test_lambda0_scale_invariance(c, d, xi, sigma, gamma, k):
    a = ard.lambda0(c, d, dist.MomentSpec(xi, sigma, gamma)).value
    b = ard.lambda0(c, k * d, dist.MomentSpec(k * xi, k * sigma, gamma)).value
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)


@given(c=finite, d=finite, xi=finite, sigma=positive, gamma=finite)
def test_skewness_decomposition(c, d, xi, sigma, gamma):
    spec = dist.MomentSpec(xi, sigma, gamma)
    lhs = ard.lambda0(c, d, spec).value - ard.hl_deficiency(c, d, spec).value
    rhs = 2 * gamma / 3 * (xi - d) / sigma * c
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(ard.lambda0(c, d, spec).value))


def test_binomial_risk_constant_at_four_thirds():
    p = np.linspace(0.01, 0.99, 99)
    vals = np.array([ard.binomial_risk(4 / 3, 0.5, x).value for x in p])
    assert np.ptp(vals) < 1e-12
    assert vals[0] == pytest.approx(-8 / 3, abs=1e-12)
    with pytest.raises(ValueError):
        ard.binomial_risk(1.0, 0.5, 1.0)


def test_binomial_matches_general_formula():
    # Bernoulli(p) has sigma^2 = pq and gamma = (q - p)/sqrt(pq)
    for p in (0.2, 0.5, 0.7):
        spec = dist.generator_spec(dist.Bernoulli(p))
        for c, d in [(1.0, 0.3), (4 / 3, 0.5), (-0.5, 0.9)]:
            assert ard.binomial_risk(c, d, p).value == pytest.approx(
                ard.lambda0(c, d, spec).value, abs=1e-12)


@pytest.mark.parametrize("c", [1.0, 2.0])
def test_hodges_lehmann_numeric_matches_closed_form(c):
    spec = dist.MomentSpec(1.0, 1.0)
    num = ard.hl_deficiency_numeric(c, 0.0, 1.0, 1.0, [200, 400, 800, 1600, 3200])
    closed = ard.hl_deficiency(c, 0.0, spec).value
    # the closed form is exactly 0 at c = 2, so 1% is taken on a unit scale
    assert abs(num - closed) <= 0.01 * max(1.0, abs(closed))


def test_hodges_lehmann_numeric_errors():
    with pytest.raises(ValueError):
        ard.hl_deficiency_numeric(1.0, 0.0, 1.0, 1.0, [100])
    with pytest.raises(ValueError):
        ard.hl_deficiency_numeric(50.0, 0.0, 1.0, 1.0, [10, 20])


def test_bayes_optimum():
    theta0, tau2 = 0.7, 0.25
    c, d = ard.bayes_optimal_cd(theta0, tau2)
    assert (c, d) == (4.0, 0.7)
    best = ard.averaged_deficiency(c, d, theta0, tau2).value
    assert best == pytest.approx(-1 / tau2)
    for dc, dd in [(0.1, 0), (-0.1, 0), (0, 0.1), (0, -0.1)]:
        assert ard.averaged_deficiency(c + dc, d + dd, theta0, tau2).value > best
    with pytest.raises(ValueError):
        ard.bayes_optimal_cd(0.0, 0.0)


def test_argmin_reports_unbounded_curves():
    v = ard.argmin_c(lambda c: -c * c + c)
    assert v.unbounded and v.value == -math.inf
    v = ard.argmin_c(lambda c: -2 * c)
    assert v.unbounded and v.c0 == math.inf
    v = ard.argmin_c(lambda c: 3.0)
    assert not v.unbounded and v.c0 == 0.0


@given(lead=st.floats(0.01, 100), slope=finite, const=finite)
def test_argmin_of_quadratic(lead, slope, const):
    v = ard.argmin_c(lambda c: lead * c * c + slope * c + const)
    assert v.c0 == pytest.approx(-slope / (2 * lead), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("N", [10, 30])
def test_zoo_median_row(N):
    row = {r.label: r for r in ard.denominator_zoo(N)}["vi"]
    exact = stats.chi2.median(N - 1)
    assert row.exact == pytest.approx(exact, rel=1e-12)
    assert abs(row.approx - row.exact) < 0.01


def test_zoo_has_all_rows_and_the_stated_orders():
    rows = ard.denominator_zoo(100)
    assert [r.label for r in rows] == ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix",
                                       "x", "xi"]
    gaps100 = {r.label: abs(r.exact - r.approx) for r in rows}
    gaps200 = {r.label: abs(r.exact - r.approx) for r in ard.denominator_zoo(200)}
    for label in ("iii", "v", "vi", "vii"):
        assert gaps100[label] < 0.01
        # O(1/N): doubling N halves the gap
        assert gaps200[label] / gaps100[label] == pytest.approx(0.5, abs=0.05)
    for label in ("i", "ii", "iv", "viii", "ix", "x", "xi"):
        assert gaps100[label] < 1e-12


def test_zoo_exact_columns():
    rows = {r.label: r for r in ard.denominator_zoo(20)}
    n = 19
    esq = math.sqrt(2) * math.exp(math.lgamma(10) - math.lgamma(9.5))
    assert rows["iii"].exact == pytest.approx(esq**2)
    assert rows["v"].exact == pytest.approx(n * n / esq**2)
    assert rows["vii"].exact == pytest.approx(2 * math.exp(special.psi(9.5)))
    assert rows["ix"].exact == pytest.approx(20 - 1 / 3)
    assert rows["x"].exact == pytest.approx(20 - 5 / 6)


def test_zoo_small_n():
    rows = {r.label: r for r in ard.denominator_zoo(2)}
    assert math.isnan(rows["viii"].exact)
    for bad in (1, 0, 2.5):
        with pytest.raises(ValueError):
            ard.denominator_zoo(bad)


def test_formula_registry():
    assert ard.formula("squared-mean") is ard.lambda0_squared_mean
    assert ard.formula("lambda-a") is ard.lambda_a
    assert set(ard.FORMULAS) == {"lambda0", "lambda0_transformed", "hl", "binomial",
                                 "squared_mean", "lambda_a"}
    with pytest.raises(ValueError):
        ard.formula("lambda9")


def test_values_echo_their_inputs():
    v = ard.lambda0(0.5, 0.1, EXP1)
    assert v.formula == "lambda0"
    assert v.inputs["c"] == 0.5 and v.inputs["spec"]["gamma"] == 2.0
    assert float(v) == v.value
