import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from arnig.distributions import (
    GigPosterior,
    IgParams,
    NigParams,
    convolve,
    gig_posterior_moments,
    ig_cdf,
    ig_pdf,
    nig_cdf,
    nig_closure,
    nig_log_pdf,
    nig_moments,
    nig_pdf,
    sample_ig,
    sample_nig,
    scale,
    shift,
    standardize,
)
from arnig.special import DomainError, bessel_k
from oracles import gig_moments_quad, nig_mixture_pdf

CASE1 = NigParams(1.0, 0.0, 0.0, 2.0)
CASE2 = NigParams(0.0087, 0.0, 0.0, 70.3882)


def nig_mgf(u, p):
    """Moment generating function, valid for |beta + u| < alpha."""
    return math.exp(p.mu * u + p.delta * (p.gamma - math.sqrt(p.alpha**2 - (p.beta + u) ** 2)))


# ------------------------------------------------------------- parameters


@pytest.mark.parametrize(
    "args",
    [(1.0, 1.0, 0.0, 1.0), (1.0, -1.5, 0.0, 1.0), (1.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 1.0), (1.0, 0.0, math.nan, 1.0)],
)
def test_invalid_params_rejected(args):
    with pytest.raises(DomainError):
        NigParams(*args)


def test_gamma_is_derived():
    p = NigParams(1.25, 0.75, 0.0, 1.0)
    assert p.gamma == pytest.approx(1.0)
    ig = p.mixing
    assert ig.mean_param == pytest.approx(p.delta / p.gamma)
    assert ig.shape_param == pytest.approx(p.delta**2)


# ---------------------------------------------------------------- density


def test_pdf_at_zero_closed_form_and_mixture():
    expected = math.e**2 * bessel_k(1, 2.0) / math.pi
    assert nig_pdf(0.0, CASE1) == pytest.approx(expected, rel=1e-12)
    assert nig_pdf(0.0, CASE1) == pytest.approx(nig_mixture_pdf(0.0, 1, 0, 0, 2), rel=1e-9)


@pytest.mark.parametrize("x", np.arange(-5, 6))
@pytest.mark.parametrize("params", [CASE1, NigParams(1.5, 0.6, -0.4, 0.8)])
def test_mixture_identity(x, params):
    mix = nig_mixture_pdf(float(x), params.alpha, params.beta, params.mu, params.delta)
    assert abs(nig_pdf(float(x), params) - mix) < 1e-6
    assert nig_pdf(float(x), params) == pytest.approx(mix, rel=1e-8)


@pytest.mark.parametrize("params", [CASE1, CASE2, NigParams(2.0, -1.2, 1.0, 0.3)])
def test_pdf_integrates_to_one(params):
    mean, var, _, _ = nig_moments(params)
    sd = math.sqrt(var)
    total = integrate.quad(lambda t: nig_pdf(t, params), -np.inf, np.inf, points=None, limit=400)[0]
    pieces = sum(
        integrate.quad(lambda t: nig_pdf(t, params), a, b, limit=400)[0]
        for a, b in [(-np.inf, mean - 10 * sd), (mean - 10 * sd, mean + 10 * sd), (mean + 10 * sd, np.inf)]
    )
    assert pieces == pytest.approx(1.0, abs=1e-6)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_symmetric_pdf_is_even():
    x = np.linspace(0, 30, 61)
    np.testing.assert_allclose(nig_pdf(x, CASE1), nig_pdf(-x, CASE1), rtol=1e-14)


def test_semi_heavy_tail():
    p = NigParams(1.0, 0.0, 0.0, 1.0)
    x = 5.0
    c = math.sqrt(p.alpha / (2 * math.pi)) * p.delta / (p.alpha - p.beta) * math.exp(p.delta * p.gamma - p.beta * p.mu)
    tail_form = c * x**-1.5 * math.exp(-(p.alpha - p.beta) * x)
    assert abs(nig_pdf(x, p) / tail_form - 1) < 0.10
    # the ratio tends to one
    far = 60.0
    assert nig_pdf(far, p) / (c * far**-1.5 * math.exp(-far)) == pytest.approx(1.0, abs=0.03)


@pytest.mark.parametrize("x", [-3.0, 0.0, 3.0])
def test_log_pdf_consistent(x):
    for p in (CASE1, NigParams(1.0, 0.4, 0.2, 1.5)):
        assert math.exp(nig_log_pdf(x, p)) == pytest.approx(nig_pdf(x, p), rel=1e-12)


def test_log_pdf_finite_far_in_case2_tail():
    assert math.isfinite(nig_log_pdf(1000.0, CASE2))
    assert math.isfinite(nig_log_pdf(1e6, CASE2))


def test_log_pdf_decreasing_beyond_mode():
    x = np.linspace(0, 5000, 2001)
    assert np.all(np.diff(nig_log_pdf(x, CASE2)) < 0)
    assert np.all(np.diff(nig_log_pdf(-x, CASE1)) < 0)


def test_matches_scipy_norminvgauss():
    p = NigParams(1.3, -0.4, 0.5, 1.7)
    ref = stats.norminvgauss(a=p.alpha * p.delta, b=p.beta * p.delta, loc=p.mu, scale=p.delta)
    x = np.linspace(-8, 8, 33)
    np.testing.assert_allclose(nig_pdf(x, p), ref.pdf(x), rtol=1e-10)


# ---------------------------------------------------------------- moments


def test_moments_case1():
    mean, var, skew, kurt = nig_moments(CASE1)
    assert (mean, var, skew) == (0.0, 2.0, 0.0)
    assert kurt == pytest.approx(1.5)


def test_moments_case2_variance():
    _, var, _, _ = nig_moments(CASE2)
    assert var == pytest.approx(70.3882 / 0.0087, rel=1e-12)
    assert var == pytest.approx(8090.597, rel=1e-6)


def test_moments_against_quadrature():
    p = NigParams(1.2, 0.5, -0.3, 0.9)
    m = [integrate.quad(lambda t: t**k * nig_pdf(t, p), -np.inf, np.inf, limit=400)[0] for k in range(5)]
    mean, var, skew, kurt = nig_moments(p)
    c2 = m[2] - m[1] ** 2
    c3 = m[3] - 3 * m[1] * m[2] + 2 * m[1] ** 3
    c4 = m[4] - 4 * m[1] * m[3] + 6 * m[1] ** 2 * m[2] - 3 * m[1] ** 4
    assert mean == pytest.approx(m[1], rel=1e-8)
    assert var == pytest.approx(c2, rel=1e-8)
    assert skew == pytest.approx(c3 / c2**1.5, rel=1e-7)
    assert kurt == pytest.approx(c4 / c2**2 - 3, rel=1e-7)


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(0.05, 20), frac=st.floats(-0.99, 0.99), delta=st.floats(0.05, 50), mu=st.floats(-5, 5))
def test_skewness_sign_follows_beta(alpha, frac, delta, mu):
    p = NigParams(alpha, frac * alpha, mu, delta)
    _, var, skew, kurt = nig_moments(p)
    assert np.sign(skew) == np.sign(p.beta)
    assert var > 0 and kurt > 0


# --------------------------------------------------------------------- IG


def test_ig_density_integrals():
    p = IgParams(1.0, 2.0)
    mass = integrate.quad(lambda t: ig_pdf(t, p), 0, np.inf)[0]
    mean = integrate.quad(lambda t: t * ig_pdf(t, p), 0, np.inf)[0]
    second = integrate.quad(lambda t: t * t * ig_pdf(t, p), 0, np.inf)[0]
    assert mass == pytest.approx(1.0, abs=1e-6)
    assert mean == pytest.approx(2.0, rel=1e-8)
    assert second - mean**2 == pytest.approx(2.0, rel=1e-7)
    assert p.variance == 2.0


def test_ig_limits_and_domain():
    p = IgParams(1.0, 2.0)
    assert ig_pdf(1e-4, p) < 1e-300 or ig_pdf(1e-4, p) == 0.0
    assert ig_pdf(1e4, p) < 1e-300
    with pytest.raises(DomainError):
        ig_pdf(0.0, p)
    with pytest.raises(DomainError):
        IgParams(0.0, 1.0)


def test_ig_cdf_matches_scipy():
    p = IgParams(1.5, 2.0)
    ref = stats.invgauss(mu=p.mean / p.shape_param, scale=p.shape_param)
    x = np.linspace(0.05, 10, 50)
    np.testing.assert_allclose(ig_cdf(x, p), ref.cdf(x), atol=1e-10)


# --------------------------------------------------------------- samplers


def _within_3se(sample, target):
    se = sample.std(ddof=1) / math.sqrt(sample.size)
    return abs(sample.mean() - target) < 3 * se


def test_sample_ig_moments():
    p = IgParams(1.0, 2.0)
    g = sample_ig(p, 100_000, seed=11)
    assert np.all(g > 0)
    assert _within_3se(g, 2.0)
    centred = (g - g.mean()) ** 2
    assert _within_3se(centred, p.mean_param**3 / p.shape_param)


def test_sample_ig_ks_against_integrated_cdf():
    p = IgParams(1.0, 2.0)
    g = sample_ig(p, 100_000, seed=12)
    assert stats.kstest(g, lambda v: ig_cdf(v, p)).pvalue > 0.01


def test_sample_ig_steps_by_hand():
    # the same draws pushed through the transformation steps one by one
    p = IgParams(0.7, 1.3)
    mu1, lam1 = p.mean_param, p.shape_param
    rng = np.random.default_rng(5)
    z, u = rng.standard_normal(20), rng.random(20)
    expected = []
    for zi, ui in zip(z, u):
        y = zi * zi
        x1 = mu1 + mu1 * mu1 * y / (2 * lam1) - mu1 / (2 * lam1) * math.sqrt(4 * mu1 * lam1 * y + mu1 * mu1 * y * y)
        expected.append(x1 if ui <= mu1 / (mu1 + x1) else mu1 * mu1 / x1)
    np.testing.assert_allclose(sample_ig(p, 20, seed=5), expected, rtol=1e-9)


def test_sample_ig_stable_for_case2_scale():
    g = sample_ig(CASE2.mixing, 50_000, seed=3)
    assert np.all(np.isfinite(g)) and np.all(g > 0)
    assert _within_3se(g, CASE2.mixing.mean)


def test_samplers_deterministic():
    a = sample_nig(CASE1, 100, seed=42)
    b = sample_nig(CASE1, 100, seed=42)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_nig(CASE1, 100, seed=43))


def test_sample_nig_moments_symmetric():
    x = sample_nig(CASE1, 100_000, seed=21)
    assert _within_3se(x, 0.0)
    assert _within_3se((x - x.mean()) ** 2, 2.0)


def test_sample_nig_mean_skewed():
    p = NigParams(1.0, 0.5, 0.0, 2.0)
    x = sample_nig(p, 100_000, seed=22)
    assert _within_3se(x, p.mu + p.delta * p.beta / p.gamma)


def test_leptokurtic_when_delta_gamma_below_one():
    p = NigParams(1.0, 0.0, 0.0, 0.5)
    x = sample_nig(p, 100_000, seed=23)
    assert stats.kurtosis(x) > 0


@pytest.mark.parametrize("params", [CASE1, CASE2], ids=["case1", "case2"])
def test_sample_nig_ks_against_numeric_cdf(params):
    x = sample_nig(params, 100_000, seed=31)
    assert stats.kstest(x, lambda v: nig_cdf(v, params)).pvalue > 0.01


def test_nig_cdf_accuracy():
    p = NigParams(1.3, -0.4, 0.5, 1.7)
    ref = stats.norminvgauss(a=p.alpha * p.delta, b=p.beta * p.delta, loc=p.mu, scale=p.delta)
    x = np.array([-200.0, -10.0, -1.0, 0.0, 0.5, 3.0, 25.0])
    np.testing.assert_allclose(nig_cdf(x, p), ref.cdf(x), atol=1e-9)
    # scipy's own cdf collapses to ~0 this far in the right tail
    assert nig_cdf(300.0, p) == pytest.approx(1.0, abs=1e-12)
    assert isinstance(nig_cdf(0.3, p), float)


# ------------------------------------------------------- posterior moments


def test_posterior_at_location():
    s, w = gig_posterior_moments(0.0, NigParams(1.0, 0.0, 0.0, 1.0))
    qs, qw = gig_moments_quad(1.0, 1.0)
    assert s == pytest.approx(bessel_k(0, 1.0) / bessel_k(1, 1.0), rel=1e-12)
    assert w == pytest.approx(bessel_k(2, 1.0) / bessel_k(1, 1.0), rel=1e-12)
    assert s == pytest.approx(qs, rel=1e-8)
    assert w == pytest.approx(qw, rel=1e-8)


@pytest.mark.parametrize("params", [CASE1, CASE2, NigParams(1.0, 0.4, 0.5, 1.5)], ids=["case1", "case2", "skewed"])
def test_posterior_moments_against_quadrature(params):
    _, var, _, _ = nig_moments(params)
    grid = params.mu + np.linspace(-6, 6, 20) * math.sqrt(var)
    s, w = gig_posterior_moments(grid, params)
    for e, si, wi in zip(grid, s, w):
        post = GigPosterior.from_innovation(e, params)
        qs, qw = gig_moments_quad(post.chi, post.psi)
        assert si == pytest.approx(qs, rel=1e-6)
        assert wi == pytest.approx(qw, rel=1e-6)
        assert post.moments() == pytest.approx((si, wi), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    eps=st.floats(-1e4, 1e4),
    alpha=st.floats(1e-3, 50),
    frac=st.floats(-0.95, 0.95),
    delta=st.floats(1e-2, 200),
    mu=st.floats(-10, 10),
)
def test_posterior_jensen_bound(eps, alpha, frac, delta, mu):
    s, w = gig_posterior_moments(eps, NigParams(alpha, frac * alpha, mu, delta))
    assert s > 0 and w > 0
    assert s * w >= 1 - 1e-12


def test_posterior_even_in_residual_when_symmetric():
    p = NigParams(0.8, 0.0, 1.5, 2.0)
    d = np.linspace(0, 20, 41)
    s1, w1 = gig_posterior_moments(p.mu + d, p)
    s2, w2 = gig_posterior_moments(p.mu - d, p)
    np.testing.assert_allclose(s1, s2, rtol=1e-14)
    np.testing.assert_allclose(w1, w2, rtol=1e-14)


def test_gig_posterior_type_invariants():
    with pytest.raises(DomainError):
        GigPosterior(1.0, 1.0, order=0.5)
    with pytest.raises(DomainError):
        GigPosterior(0.0, 1.0)


# ---------------------------------------------------------------- closure


def test_closure_examples():
    assert shift(CASE1, 3.0) == NigParams(1, 0, 3, 2)
    assert scale(CASE1, 2.0) == NigParams(0.5, 0, 0, 4)
    assert standardize(NigParams(1, 0.5, 2, 3)) == NigParams(3, 1.5, 0, 1)
    assert nig_closure("shift", CASE1, 3.0) == shift(CASE1, 3.0)
    assert nig_closure("standardize", NigParams(1, 0.5, 2, 3)) == NigParams(3, 1.5, 0, 1)
    assert nig_closure("convolve", CASE1, NigParams(1, 0, 1, 0.5)) == NigParams(1, 0, 1, 2.5)


def test_closure_errors():
    with pytest.raises(DomainError):
        convolve(CASE1, NigParams(2.0, 0.0, 0.0, 1.0))
    with pytest.raises(DomainError):
        scale(CASE1, -1.0)
    with pytest.raises(ValueError):
        nig_closure("rotate", CASE1)


def test_closure_consistent_with_mgf():
    p, q = NigParams(1.4, 0.3, -0.2, 0.9), NigParams(1.4, 0.3, 0.6, 2.1)
    for u in (-0.5, 0.2, 0.7):
        assert nig_mgf(u, shift(p, 1.7)) == pytest.approx(math.exp(1.7 * u) * nig_mgf(u, p), rel=1e-12)
        assert nig_mgf(u / 2, scale(p, 2.0)) == pytest.approx(nig_mgf(u, p), rel=1e-12)
        assert nig_mgf(u, convolve(p, q)) == pytest.approx(nig_mgf(u, p) * nig_mgf(u, q), rel=1e-12)
        assert nig_mgf(u, standardize(p)) == pytest.approx(
            math.exp(-p.mu * u / p.delta) * nig_mgf(u / p.delta, p), rel=1e-12
        )


def test_mgf_matches_density():
    p = NigParams(1.0, 0.5, 0.0, 2.0)
    u = 0.2
    val = integrate.quad(lambda t: math.exp(u * t) * nig_pdf(t, p), -200, 200, limit=400, points=[0.0])[0]
    assert val == pytest.approx(nig_mgf(u, p), rel=1e-8)


def test_convolution_by_simulation():
    a, b = NigParams(1.0, 0.3, 0.5, 1.0), NigParams(1.0, 0.3, -1.0, 2.5)
    x = sample_nig(a, 50_000, seed=41) + sample_nig(b, 50_000, seed=42)
    conv = convolve(a, b)
    assert stats.kstest(x, lambda v: nig_cdf(v, conv)).pvalue > 0.01


def test_scaling_by_simulation():
    x = 3.0 * sample_nig(CASE1, 50_000, seed=43)
    assert stats.kstest(x, lambda v: nig_cdf(v, scale(CASE1, 3.0))).pvalue > 0.01
