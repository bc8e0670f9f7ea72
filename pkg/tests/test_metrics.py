import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from synthmarket import metrics


# ---------------------------------------------------------------------------
# autocorrelation and the two time-dependency scores


def test_acf_matches_pearson_oracle(rng):
    x = rng.standard_normal(200)
    for lag in (1, 3, 10):
        want = np.corrcoef(x[:-lag], x[lag:])[0, 1]
        assert metrics.acf(x, lag) == pytest.approx(want, rel=1e-12)


def test_acf_square_transform(rng):
    x = rng.standard_normal(150)
    want = np.corrcoef((x**2)[:-2], (x**2)[2:])[0, 1]
    assert metrics.acf(x, 2, "square", "square") == pytest.approx(want, rel=1e-12)


def test_acf_constant_series_is_nan():
    assert math.isnan(metrics.acf(np.ones(50), 1))


def test_clustering_score_signs():
    # planted persistent volatility -> positive vol score
    rng = np.random.default_rng(3)
    sigma = np.exp(np.cumsum(rng.standard_normal(4000)) * 0.02)
    sigma /= sigma.mean()
    r = sigma * rng.standard_normal(4000)
    assert metrics.clustering_score(r, "vol") > 0
    # iid returns -> small magnitude either sign
    iid = np.random.default_rng(4).standard_normal(4000)
    assert abs(metrics.clustering_score(iid, "vol")) < 0.05


def test_clustering_score_is_sum_of_squares(rng):
    x = rng.standard_normal(500)
    total = sum(metrics.acf(x, t, "square", "square") ** 2 for t in range(1, 64))
    assert abs(metrics.clustering_score(x, "vol")) == pytest.approx(total, rel=1e-12)


def test_leverage_score_uses_identity_then_square(rng):
    x = rng.standard_normal(400)
    rho = [
        np.corrcoef(x[:-t], (x**2)[t:])[0, 1] for t in range(1, 64)
    ]
    total = sum(v**2 for v in rho)
    assert abs(metrics.clustering_score(x, "leverage")) == pytest.approx(total, rel=1e-12)


# ---------------------------------------------------------------------------
# tails


def test_hill_frozen_example():
    # losses e^3 >= e^2 with reference loss e^2: (1/2)[(3-2) + (2-2)] = 0.5
    r = np.array([-math.e**3, -math.e**2, -math.e, 0.5, 1.0])
    assert metrics.hill_xi(r, k=2) == pytest.approx(0.5, rel=1e-12)


def test_hill_needs_enough_losses():
    with pytest.raises(ValueError):
        metrics.hill_xi(np.array([-1.0, 0.2, 0.3]), k=2)


def test_hill_pareto_recovery():
    # Pareto(alpha=3) losses: xi = 1/3
    rng = np.random.default_rng(11)
    losses = rng.pareto(3.0, size=20000) + 1.0
    r = np.concatenate([-losses, rng.standard_normal(1000) * 1e-3])
    xi = metrics.hill_xi(r, k=2000)
    assert 1 / 3.3 <= xi <= 1 / 2.7


def test_var_es_frozen_example():
    r = np.array([-0.10, -0.05, 0.0, 0.05, 0.10])
    var, es = metrics.var_es(r, 0.8)
    assert var == pytest.approx(0.05)
    assert es == pytest.approx(0.10)


def test_var_es_float_boundary():
    # alpha * n hitting an integer via floating point must not off-by-one
    r = np.linspace(-1.0, 1.0, 100)
    var, es = metrics.var_es(r, 0.99)
    # 0.99 * 100 = 99.00000000000001 in floats; the 99th smallest loss is wanted
    assert var == pytest.approx(np.sort(-r)[98], rel=1e-12)
    assert es == pytest.approx(np.sort(-r)[99], rel=1e-12)


def test_var_es_enumeration_oracle(rng):
    r = rng.standard_normal(257)
    for alpha in (0.9, 0.95, 0.99):
        var, es = metrics.var_es(r, alpha)
        losses = np.sort(-r)
        n = len(r)
        k = math.ceil(alpha * n - 1e-9)
        assert var == pytest.approx(losses[k - 1], rel=1e-12)
        tail = losses[k:] if n - k > 0 else losses[-1:]
        count = n - math.floor(alpha * n + 1e-9)
        assert es == pytest.approx(np.sort(-r)[::-1][:count].mean(), rel=1e-12)


# ---------------------------------------------------------------------------
# distribution distance


def test_wasserstein_frozen_example():
    assert metrics.wasserstein1([0, 0, 0], [0, 0, 3]) == pytest.approx(1.0)


def test_wasserstein_equal_size_sorted_oracle(rng):
    a, b = rng.standard_normal(64), rng.standard_normal(64)
    want = np.abs(np.sort(a) - np.sort(b)).mean()
    assert metrics.wasserstein1(a, b) == pytest.approx(want, rel=1e-14)


def test_wasserstein_unequal_matches_scipy(rng):
    from scipy.stats import wasserstein_distance

    a, b = rng.standard_normal(50), rng.standard_normal(77)
    assert metrics.wasserstein1(a, b) == pytest.approx(
        wasserstein_distance(a, b), rel=1e-10
    )


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, st.integers(2, 40), elements=st.floats(-100, 100)),
)
def test_wasserstein_identity_and_symmetry(a):
    assert metrics.wasserstein1(a, a) == 0.0
    b = a + 1.0
    d1, d2 = metrics.wasserstein1(a, b), metrics.wasserstein1(b, a)
    assert d1 == pytest.approx(d2, rel=1e-12)
    assert d1 == pytest.approx(1.0, rel=1e-9)


# ---------------------------------------------------------------------------
# correlation structure


def test_corr_distance_brute_loop(rng):
    d = 7
    a = np.corrcoef(rng.standard_normal((50, d)), rowvar=False)
    b = np.corrcoef(rng.standard_normal((50, d)), rowvar=False)
    want = 0.0
    for i in range(1, d):
        for j in range(i):
            want += (a[i, j] - b[i, j]) ** 2
    assert metrics.corr_distance(a, b) == pytest.approx(want, rel=1e-12)
    assert metrics.corr_distance(a, a) == 0.0


def test_one_factor_corr(rng):
    x = rng.standard_normal((300, 5)) + rng.standard_normal((300, 1))
    mat, avg = metrics.one_factor_corr(x)
    corr = np.corrcoef(x, rowvar=False)
    off = corr[np.tril_indices(5, k=-1)]
    assert avg == pytest.approx(off.mean(), rel=1e-12)
    np.testing.assert_allclose(np.diag(mat), 1.0)
    assert np.all(mat[np.tril_indices(5, k=-1)] == pytest.approx(avg))


def test_ledoit_wolf_formula(rng):
    x = rng.standard_normal((200, 6)) @ np.diag([1, 1, 2, 2, 3, 3.0])
    got, gamma = metrics.ledoit_wolf(x)
    assert 0.0 <= gamma <= 1.0
    xc = x - x.mean(axis=0)
    n = x.shape[0]
    s = xc.T @ xc / n
    target = np.trace(s) / x.shape[1] * np.eye(x.shape[1])
    np.testing.assert_allclose(got, (1 - gamma) * s + gamma * target, rtol=1e-12)
    # shrinking toward the target moves eigenvalues inward
    assert np.linalg.eigvalsh(got).max() <= np.linalg.eigvalsh(s).max() + 1e-12


def test_ledoit_wolf_shrinks_more_with_fewer_rows(rng):
    d = 20
    scales = np.linspace(0.5, 3.0, d)  # structured truth, so the target is wrong
    base = rng.standard_normal((500, d)) * scales
    _, g_small = metrics.ledoit_wolf(base[:30])
    _, g_large = metrics.ledoit_wolf(base)
    assert g_small > g_large


def test_rolling_mean_corr_naive_oracle(rng):
    x = rng.standard_normal((80, 4)) + 0.3 * rng.standard_normal((80, 1))
    w = 30
    got = metrics.rolling_mean_corr(x, window=w)
    assert len(got) == 80 - w + 1
    for t in (0, 17, 50):
        c = np.corrcoef(x[t : t + w], rowvar=False)
        want = c[np.tril_indices(4, k=-1)].mean()
        assert got[t] == pytest.approx(want, rel=1e-10)


# ---------------------------------------------------------------------------
# portfolio statistics


def test_max_drawdown_hand_case():
    # +10% then -20%: wealth 1 -> 1.1 -> 0.88, peak 1.1, dd = 0.2
    r = np.array([0.10, -0.20])
    assert metrics.max_drawdown(r) == pytest.approx(0.20, rel=1e-12)
    # first-day loss counts against the starting wealth
    assert metrics.max_drawdown(np.array([-0.25, 0.1])) == pytest.approx(0.25)
    assert metrics.max_drawdown(np.array([0.01, 0.02])) == 0.0


def test_portfolio_stats_hand_values():
    r = np.array([0.01, -0.02, 0.015, 0.005, -0.01] * 30)
    stats = metrics.portfolio_stats(r)
    assert stats["ann_return"] == pytest.approx(r.mean() * 252, rel=1e-12)
    assert stats["ann_vol"] == pytest.approx(r.std() * math.sqrt(252), rel=1e-12)
    assert stats["sharpe"] == pytest.approx(
        stats["ann_return"] / stats["ann_vol"], rel=1e-12
    )
    assert stats["skewness"] == pytest.approx(metrics.skewness(r), rel=1e-12)
    var5, es5 = metrics.var_es(r, 0.95)
    assert stats["var_daily_95"] == pytest.approx(var5)
    assert stats["es_daily_95"] == pytest.approx(es5)


def test_portfolio_stats_weekly_blocks():
    # 10 days -> 2 weekly compounds from the start, no tail block
    r = np.array([0.01] * 10)
    stats = metrics.portfolio_stats(r)
    weekly = (1.01**5) - 1
    var, es = metrics.var_es(np.array([weekly, weekly]), 0.95)
    assert stats["var_weekly_95"] == pytest.approx(var, rel=1e-12)
    # fewer than 21 days: monthly stats are NaN, not garbage
    assert math.isnan(stats["var_monthly_95"])


def test_skewness_kurtosis_population_convention(rng):
    x = rng.standard_normal(1000)
    xc = x - x.mean()
    m2 = (xc**2).mean()
    assert metrics.skewness(x) == pytest.approx((xc**3).mean() / m2**1.5, rel=1e-12)
    assert metrics.excess_kurtosis(x) == pytest.approx(
        (xc**4).mean() / m2**2 - 3.0, rel=1e-12
    )


def test_nearest_rank_percentile():
    v = np.array([4.0, 1.0, 3.0, 2.0])
    assert metrics.nearest_rank_percentile(v, 50.0) == 2.0
    assert metrics.nearest_rank_percentile(v, 2.5) == 1.0
    assert metrics.nearest_rank_percentile(v, 97.5) == 4.0
    assert metrics.nearest_rank_percentile(v, 100.0) == 4.0


@settings(max_examples=30, deadline=None)
@given(
    arrays(np.float64, st.integers(1, 50), elements=st.floats(-1e6, 1e6)),
    st.floats(0.1, 100.0),
)
def test_nearest_rank_is_an_order_statistic(v, q):
    got = metrics.nearest_rank_percentile(v, q)
    assert got in v


def test_fit_acf_decay_recovers_planted_exponential():
    lags = np.arange(1, 64)
    rho = 0.8 * np.exp(-0.07 * lags)
    a, gamma = metrics.fit_acf_decay(rho, kind="exponential")
    assert gamma == pytest.approx(0.07, rel=1e-6)
    assert a == pytest.approx(0.8, rel=1e-6)


def test_fit_acf_decay_recovers_planted_power():
    lags = np.arange(1, 64)
    rho = 0.5 * lags**-0.35
    a, gamma = metrics.fit_acf_decay(rho, kind="power")
    assert gamma == pytest.approx(0.35, rel=1e-6)
    assert a == pytest.approx(0.5, rel=1e-6)
