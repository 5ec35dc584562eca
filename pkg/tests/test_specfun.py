import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special, stats

from betawalk.errors import ConvergenceError, DomainError
from betawalk.specfun import (Branch, DensitySpec, ModelParams, beta_cdf, beta_fn, beta_inv_cdf, density_g,
                              density_g_cdf, gauss_2f1, l_weight, ln_beta, ln_gamma, polygamma, polygamma_diff)

pos = st.floats(0.05, 20.0)


def test_model_params():
    p = ModelParams(1.0, 3.0)
    assert p.chi == (0.25, 0.75)
    assert p.swapped() == ModelParams(3.0, 1.0)
    for bad in [(0, 1), (-1, 1), (1, math.inf), (math.nan, 1)]:
        with pytest.raises(DomainError):
            ModelParams(*bad)


def test_branch_parse():
    assert Branch.parse("right") is Branch.RIGHT
    assert Branch.parse(Branch.LEFT) is Branch.LEFT
    with pytest.raises(ValueError):
        Branch.parse("up")


def test_ln_gamma_examples():
    assert ln_gamma(1.0) == 0.0
    assert ln_gamma(5.0) == pytest.approx(math.log(24), rel=1e-15)
    assert ln_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-15)


def test_ln_gamma_accuracy_against_mpmath():
    xs = np.concatenate([np.logspace(-6, 6, 300), [0.999, 1.001, 1.5, 1.999, 2.001, 2.5]])
    got = ln_gamma(xs)
    ref = np.array([float(mpmath.loggamma(mpmath.mpf(x))) for x in xs])
    rel = np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300)
    # near the roots at 1 and 2 compare absolutely against the scale of the value
    rel = np.where(np.abs(ref) < 1e-3, np.abs(got - ref) / 1e-3, rel)
    assert rel.max() < 1e-13


def test_ln_gamma_domain():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(DomainError):
            ln_gamma(bad)


def test_ln_beta_matches_scipy():
    a = np.array([0.3, 1.0, 2.0, 50.0])
    b = np.array([0.7, 1.0, 3.0, 0.1])
    np.testing.assert_allclose(ln_beta(a, b), special.betaln(a, b), rtol=1e-13)


def test_polygamma_examples():
    assert polygamma(0, 1.0) == pytest.approx(-0.5772156649015329, abs=1e-15)
    assert polygamma(1, 1.0) == pytest.approx(math.pi ** 2 / 6, rel=1e-15)
    for x in (0.3, 1.0, 7.5, 40.0):
        assert polygamma(1, x) - polygamma(1, x + 1) == pytest.approx(1 / x ** 2, rel=1e-12)


def test_polygamma_against_mpmath():
    for n in range(5):
        for x in (1e-3, 0.1, 0.5, 1.0, 3.3, 9.99, 10.0, 123.4, 1e5):
            ref = float(mpmath.polygamma(n, x))
            assert polygamma(n, x) == pytest.approx(ref, rel=1e-13)


def test_polygamma_sign_and_errors():
    x = np.logspace(-2, 3, 50)
    for n in range(1, 5):
        assert np.all(np.sign(polygamma(n, x)) == (-1) ** (n - 1))
    with pytest.raises(DomainError):
        polygamma(5, 1.0)
    with pytest.raises(DomainError):
        polygamma(1, 0.0)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_polygamma_recurrence(n):
    for x in (0.1, 0.5, 1.0, 2.0, 10.0, 100.0):
        r = polygamma(n, x) - polygamma(n, x + 1) + (-1) ** n * math.factorial(n) * x ** -(n + 1)
        assert abs(r) <= 1e-12 * max(1.0, abs(polygamma(n, x)))


def test_psi2_plus_psi1_squared_positive():
    x = np.logspace(-3, 3, 500)
    assert np.all(polygamma(2, x) + polygamma(1, x) ** 2 > 0)


def test_polygamma_diff_no_cancellation():
    mpmath.mp.dps = 50
    try:
        for n in (0, 1, 2):
            for x, a in ((1e6, 1.0), (1e8, 0.5), (2.0, 1e-9), (3.0, 2.0)):
                ref = float(mpmath.polygamma(n, mpmath.mpf(x) + a) - mpmath.polygamma(n, mpmath.mpf(x)))
                assert polygamma_diff(n, x, a) == pytest.approx(ref, rel=1e-12)
    finally:
        mpmath.mp.dps = 15


def test_beta_examples():
    assert beta_fn(2.0, 3.0) == pytest.approx(1 / 12, rel=1e-14)
    assert beta_cdf(0.5, 1.0, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert beta_inv_cdf(0.75, 2.0, 1.0) == pytest.approx(math.sqrt(0.75), rel=1e-12)


def test_beta_cdf_against_scipy():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(0.1, 30, 500), rng.uniform(0.1, 30, 500)
    s = rng.uniform(0, 1, 500)
    np.testing.assert_allclose(beta_cdf(s, a, b), special.betainc(a, b, s), rtol=1e-11, atol=1e-300)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1 - 1e-6), pos, pos)
def test_beta_inv_cdf_round_trip(s, a, b):
    u = float(beta_cdf(s, a, b))
    if 1e-300 < u < 1 - 1e-12:
        x = float(beta_inv_cdf(u, a, b))
        # compare in the CDF scale where the quantile is ill-conditioned
        assert x == pytest.approx(s, abs=1e-10) or beta_cdf(x, a, b) == pytest.approx(u, rel=1e-9)


def test_beta_cdf_monotone():
    x = np.linspace(0.001, 0.999, 999)
    for a, b in ((0.5, 0.5), (2.0, 7.0), (30.0, 0.2)):
        assert np.all(np.diff(beta_cdf(x, a, b)) >= 0)


def test_beta_domain_errors():
    with pytest.raises(DomainError):
        beta_fn(0.0, 1.0)
    with pytest.raises(DomainError):
        beta_inv_cdf(1.5, 1.0, 1.0)
    with pytest.raises(DomainError):
        beta_cdf(0.5, -1.0, 1.0)


def test_gauss_2f1_examples():
    assert gauss_2f1(1.3, 2.2, 3.1, 0.0) == 1.0
    assert gauss_2f1(1.0, 1.0, 2.0, 0.5) == pytest.approx(2 * math.log(2), rel=1e-14)
    # Euler integral oracle
    a, b, c, z = 2.0, 2.0, 4.0, 0.25
    val = integrate.quad(lambda t: t ** (b - 1) * (1 - t) ** (c - b - 1) * (1 - z * t) ** -a, 0, 1,
                         epsabs=0, epsrel=1e-13)[0] / special.beta(b, c - b)
    assert gauss_2f1(a, b, c, z) == pytest.approx(val, rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 5), st.floats(-3, 5), st.floats(0.1, 8), st.floats(0, 0.9))
def test_gauss_2f1_symmetric(a, b, c, z):
    assert gauss_2f1(a, b, c, z) == pytest.approx(gauss_2f1(b, a, c, z), rel=1e-12, abs=1e-300)


def test_gauss_2f1_against_scipy():
    for a, b, c, z in ((0.5, 1.5, 2.5, 0.9), (3.0, 2.0, 1.5, 0.7), (-2.0, 1.0, 3.0, 0.5)):
        assert gauss_2f1(a, b, c, z) == pytest.approx(special.hyp2f1(a, b, c, z), rel=1e-12)


def test_gauss_2f1_errors():
    with pytest.raises(DomainError):
        gauss_2f1(1.0, 1.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        gauss_2f1(1.0, 1.0, -1.0, 0.5)
    with pytest.raises(ConvergenceError):
        # convergent but needs far more than 10^6 terms
        gauss_2f1(1.0, 1.0, 1.5, 1 - 1e-9)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_density_normalised(a, b, lam):
    spec = DensitySpec(ModelParams(a, b), lam, Branch.RIGHT)
    total = integrate.quad(lambda x: density_g(spec, x), 0, 1, limit=400, epsabs=1e-12, epsrel=1e-10,
                           points=[0.5, 0.9, 0.99])[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_density_left_is_reflection():
    p = ModelParams(0.7, 2.5)
    left = DensitySpec(p, 1.3, Branch.LEFT)
    right = DensitySpec(p.swapped(), 1.3, Branch.RIGHT)
    x = np.linspace(0.01, 0.99, 99)
    np.testing.assert_allclose(density_g(left, x), density_g(right, 1 - x), rtol=1e-12)


def test_density_matches_series_where_it_converges():
    a, b, lam = 1.0, 2.0, 0.7
    spec = DensitySpec(ModelParams(a, b), lam, Branch.RIGHT)
    pa = a + lam
    for x in (0.1, 0.4, 0.8):
        pref = math.exp(special.betaln(pa, a + b) - special.betaln(pa, b) - special.betaln(lam, a))
        series = pref * x ** (a - 1) * (1 - x) ** (lam - 1) * gauss_2f1(pa, pa, 2 * a + b + lam, x)
        assert density_g(spec, x) == pytest.approx(series, rel=1e-9)


def test_density_cdf_derivative():
    spec = DensitySpec(ModelParams(1.0, 2.0), 0.7, Branch.RIGHT)
    for x in (0.05, 0.3, 0.6, 0.95):
        h = 1e-5
        num = (density_g_cdf(spec, x + h) - density_g_cdf(spec, x - h)) / (2 * h)
        assert num == pytest.approx(density_g(spec, x), rel=1e-5)


def test_density_cdf_endpoints_and_monotone():
    spec = DensitySpec(ModelParams(1.0, 2.0), 0.7, Branch.RIGHT)
    x = np.linspace(0, 1, 201)
    f = density_g_cdf(spec, x)
    assert f[0] == 0.0 and f[-1] == 1.0
    assert np.all(np.diff(f) >= -1e-14)
    # values right next to 1 must not break the quadrature
    assert density_g_cdf(spec, 1 - 1e-6) <= 1.0


def test_density_is_not_beta():
    spec = DensitySpec(ModelParams(1.0, 1.0), 1.0, Branch.RIGHT)
    x = np.linspace(0.001, 0.999, 2000)
    g = density_g(spec, x)
    m1 = integrate.quad(lambda t: t * density_g(spec, t), 0, 1)[0]
    m2 = integrate.quad(lambda t: t * t * density_g(spec, t), 0, 1)[0]
    v = m2 - m1 * m1
    k = m1 * (1 - m1) / v - 1
    best = stats.beta(m1 * k, (1 - m1) * k).pdf(x)
    assert np.max(np.abs(g - best)) > 1e-3


def test_density_domain():
    spec = DensitySpec(ModelParams(1.0, 1.0), 1.0, Branch.RIGHT)
    with pytest.raises(DomainError):
        density_g(spec, 1.0)
    with pytest.raises(DomainError):
        DensitySpec(ModelParams(1.0, 1.0), 0.0, Branch.RIGHT)


def _l_weight_quad(s, a, b):
    c = special.digamma(a) - special.digamma(a + b)
    f = lambda t: t ** (a - 1) * (1 - t) ** (b - 1) * (math.log(t) - c)
    val = integrate.quad(f, 0, s, epsabs=0, epsrel=1e-13, limit=400)[0]
    return -s ** -a * (1 - s) ** (1 - b) * val


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_l_weight_against_quadrature():
    for s, a, b in ((0.5, 2.0, 1.0), (0.1, 0.5, 3.0), (0.9, 3.0, 0.5), (0.99, 1.7, 1.0), (1e-4, 1.2, 2.0)):
        assert l_weight(s, a, b) == pytest.approx(_l_weight_quad(s, a, b), rel=1e-9)


def test_l_weight_closed_form_and_small_s():
    # for b = 1 the weight is -log(s) / a
    s = np.array([1e-8, 1e-6, 0.3, 0.999])
    np.testing.assert_allclose(l_weight(s, 2.0, 1.0), -np.log(s) / 2, rtol=1e-12)
    r = l_weight(1e-6, 2.0, 1.0) / l_weight(2e-6, 2.0, 1.0)
    assert 0.9 < r < 1.1


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1 - 1e-6), pos, pos)
def test_l_weight_positive(s, a, b):
    assert l_weight(s, a, b) > 0


def test_l_weight_covariance_representation():
    s, a, b = 0.5, 2.0, 1.0
    rng = np.random.default_rng(3)
    w = rng.beta(a, b, 10 ** 6)
    y = -np.log(w) * (w <= s)
    ind = (w <= s).astype(float)
    cov = np.mean(y) - np.mean(-np.log(w)) * np.mean(ind)
    # delta-method standard error of the covariance
    z = (-np.log(w) - np.mean(-np.log(w))) * (ind - ind.mean())
    se = z.std() / math.sqrt(w.size)
    scale = s ** -a * (1 - s) ** (1 - b) * special.beta(a, b)
    assert abs(l_weight(s, a, b) - scale * cov) <= 3 * scale * se


def test_l_weight_domain():
    with pytest.raises(DomainError):
        l_weight(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        l_weight(0.5, 0.0, 1.0)
