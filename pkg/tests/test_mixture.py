import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from synthmarket.mixture import (
    MixtureParams,
    cdf,
    fit_em,
    inverse_cdf,
    pdf,
    sample,
)


def t_params(p=0.4, mu1=-0.3, s1=0.8, nu1=4.0, mu2=0.5, s2=1.5, nu2=12.0):
    return MixtureParams(p=p, mu1=mu1, s1=s1, nu1=nu1, mu2=mu2, s2=s2, nu2=nu2)


def test_params_validation():
    with pytest.raises(ValueError):
        t_params(p=1.2)
    with pytest.raises(ValueError):
        t_params(s1=0.0)
    with pytest.raises(ValueError):
        t_params(nu1=1.0)
    with pytest.raises(ValueError):
        t_params(nu2=250.0)
    # inf encodes a Gaussian component and is allowed
    t_params(nu2=math.inf)


def test_cauchy_pdf_frozen():
    # scaled t with nu just above 1 is ruled out, but nu=1 + tiny... use the
    # documented closed form instead: standard Cauchy is t(nu=1), outside the
    # allowed range, so check t(2) against scipy and the Gaussian limit
    params = MixtureParams.single(0.0, 1.0, 2.0)
    assert pdf(0.0, params) == pytest.approx(stats.t.pdf(0.0, 2), rel=1e-12)
    gauss = MixtureParams.single(0.0, 1.0, math.inf)
    assert pdf(0.0, gauss) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)


def test_pdf_cdf_match_scipy_mixture(rng):
    params = t_params()
    x = rng.standard_normal(50) * 3
    want_pdf = params.p * stats.t.pdf(
        (x - params.mu1) / params.s1, params.nu1
    ) / params.s1 + (1 - params.p) * stats.t.pdf(
        (x - params.mu2) / params.s2, params.nu2
    ) / params.s2
    want_cdf = params.p * stats.t.cdf(
        (x - params.mu1) / params.s1, params.nu1
    ) + (1 - params.p) * stats.t.cdf((x - params.mu2) / params.s2, params.nu2)
    np.testing.assert_allclose(pdf(x, params), want_pdf, rtol=1e-12)
    np.testing.assert_allclose(cdf(x, params), want_cdf, rtol=1e-12)


def test_pdf_integrates_to_one():
    from scipy.integrate import quad

    params = t_params()
    total, _ = quad(lambda v: pdf(v, params), -300, 300, limit=400)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_inverse_cdf_tolerance():
    params = t_params()
    u = np.linspace(1e-9, 1 - 1e-9, 401)
    x = inverse_cdf(u, params)
    assert np.all(np.diff(x) >= 0)
    np.testing.assert_allclose(cdf(x, params), u, atol=1.1e-10)


def test_inverse_cdf_pure_component_is_exact():
    params = MixtureParams.single(0.4, 2.0, 7.0)
    u = np.array([0.01, 0.3, 0.5, 0.77, 0.999])
    want = 0.4 + 2.0 * stats.t.ppf(u, 7.0)
    np.testing.assert_allclose(inverse_cdf(u, params), want, rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    p=st.floats(0.05, 0.95),
    mu=st.floats(-2, 2),
    s=st.floats(0.1, 3),
    nu=st.floats(2.1, 50),
    u=st.floats(0.001, 0.999),
)
def test_inverse_cdf_property(p, mu, s, nu, u):
    params = MixtureParams(p=p, mu1=mu, s1=s, nu1=nu, mu2=-mu, s2=1.0, nu2=math.inf)
    x = inverse_cdf(u, params)
    assert abs(cdf(x, params) - u) <= 1.1e-10


def test_sample_statistics(rng):
    params = t_params(p=1.0, mu1=0.7, s1=0.5, nu1=math.inf)
    draws = sample(params, 200_000, rng)
    assert draws.mean() == pytest.approx(0.7, abs=0.01)
    assert draws.std() == pytest.approx(0.5, abs=0.01)


def test_fit_gaussian_closed_form(rng):
    x = rng.standard_normal(5000) * 2.5 + 1.0
    res = fit_em(x, mode="gaussian")
    assert res.converged
    assert res.params.p == 1.0
    assert math.isinf(res.params.nu1)
    assert res.params.mu1 == pytest.approx(x.mean(), rel=1e-12)
    assert res.params.s1 == pytest.approx(x.std(), rel=1e-12)


def test_fit_single_t_recovers_quickly(rng):
    x = 0.0 + 1.0 * rng.standard_t(5.0, size=30_000)
    res = fit_em(x, mode="single_t")
    assert res.params.mu1 == pytest.approx(0.0, abs=0.05)
    assert res.params.s1 == pytest.approx(1.0, abs=0.05)
    assert res.params.nu1 == pytest.approx(5.0, abs=1.0)


def test_loglik_trace_monotone(rng):
    x = rng.standard_t(4.0, size=3000) * 1.3 + 0.2
    for mode in ("single_t", "two_t"):
        res = fit_em(x, mode=mode, seed=1)
        trace = np.asarray(res.loglik_trace)
        assert trace.size >= 1
        assert np.all(np.diff(trace) >= -1e-7 * np.abs(trace[:-1]))


def test_two_t_separates_components(rng):
    n = 40_000
    z = rng.random(n) < 0.3
    x = np.where(z, rng.standard_t(4, n) * 0.5 - 3.0, rng.standard_t(20, n) * 1.0 + 1.5)
    res = fit_em(x, mode="two_t", seed=3)
    # order-free comparison of the two component means
    mus = sorted([res.params.mu1, res.params.mu2])
    assert mus[0] == pytest.approx(-3.0, abs=0.1)
    assert mus[1] == pytest.approx(1.5, abs=0.1)
    p_low = res.params.p if res.params.mu1 < res.params.mu2 else 1 - res.params.p
    assert p_low == pytest.approx(0.3, abs=0.03)


def test_fit_em_rejects_tiny_samples():
    with pytest.raises(ValueError):
        fit_em(np.zeros(10), mode="single_t")


def test_json_round_trip_with_gaussian_component():
    params = t_params(nu2=math.inf)
    obj = params.to_json_dict()
    assert obj["nu2"] is None
    back = MixtureParams.from_json_dict(obj)
    assert back == params
