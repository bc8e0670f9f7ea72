"""Distributional and temporal diagnostics for return series and panels.

Scalar metrics shared by the evaluation reports and the factor-feature
builder: transformed autocorrelations and the derived volatility-clustering
and leverage scores, the Hill tail estimator on losses, one-dimensional
Wasserstein distance, historical VaR/ES, correlation-matrix distances and
benchmark estimators (constant-correlation, Ledoit-Wolf shrinkage), rolling
mean pairwise correlation, and a portfolio summary table.

Degenerate inputs (zero-variance windows and such) yield NaN rather than an
exception wherever a metric is a diagnostic; structural misuse (bad lag, bad
alpha, too little data for the estimator to be defined) raises ValueError.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "TRANSFORMS",
    "acf",
    "acf_profile",
    "clustering_score",
    "hill_xi",
    "wasserstein1",
    "var_es",
    "corr_distance",
    "ledoit_wolf",
    "one_factor_corr",
    "rolling_mean_corr",
    "portfolio_stats",
    "skewness",
    "excess_kurtosis",
    "nearest_rank_percentile",
    "fit_acf_decay",
]

TRANSFORMS = {
    "identity": lambda x: x,
    "abs": np.abs,
    "square": np.square,
}

# (g1, g2) transform pairs behind the two temporal scores
SCORE_KINDS = {
    "vol": ("square", "square"),
    "leverage": ("identity", "square"),
}


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom == 0.0:
        return float("nan")
    return float(a @ b) / denom


def acf(series, lag: int, g1: str = "identity", g2: str = "identity") -> float:
    """Pearson correlation of g1(x_t) with g2(x_{t+lag}).

    lag >= 1 and the series must leave at least two overlapping pairs.
    Returns NaN when either transformed slice is constant.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if lag < 1:
        raise ValueError(f"lag must be >= 1, got {lag}")
    if x.size - lag < 2:
        raise ValueError(f"series of length {x.size} too short for lag {lag}")
    f1, f2 = TRANSFORMS[g1], TRANSFORMS[g2]
    return _pearson(f1(x[:-lag]), f2(x[lag:]))


def acf_profile(series, kind: str, max_lag: int = 63) -> np.ndarray:
    """Vector of transformed autocorrelations for lags 1..max_lag."""
    g1, g2 = SCORE_KINDS[kind]
    return np.array([acf(series, lag, g1, g2) for lag in range(1, max_lag + 1)])


def clustering_score(
    series, kind: str = "vol", max_lag: int = 63, sign_window: int = 10
) -> float:
    """Signed sum of squared transformed autocorrelations over lags 1..max_lag.

    kind "vol" correlates squares with lagged squares; "leverage" correlates
    levels with lagged squares. The magnitude is sum(rho(tau)^2); the sign is
    the sign of the mean rho over the first sign_window lags, so that e.g. a
    negative level/square relationship yields a negative leverage score.
    """
    rho = acf_profile(series, kind, max_lag)
    if np.isnan(rho).any():
        return float("nan")
    magnitude = float(np.sum(rho**2))
    lead = float(np.mean(rho[: min(sign_window, max_lag)]))
    return -magnitude if lead < 0 else magnitude


def hill_xi(returns, k: int) -> float:
    """Hill estimator of the lower-tail index on the k largest losses.

    With losses sorted so r_(1) <= r_(2) <= ... (most negative first),

        xi_hat = (1/k) * sum_{i<=k} log(-r_(i)) - log(-r_(k)),

    and the tail exponent is gamma_hat = 1/xi_hat. Requires k >= 1 and at
    least k+1 strictly negative returns. Identical selected losses give 0
    (degenerate: infinite gamma_hat), which is returned, not raised.
    """
    r = np.sort(np.asarray(returns, dtype=np.float64))
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    negative = int(np.sum(r < 0))
    if negative < k + 1:
        raise ValueError(f"need at least {k + 1} strictly negative returns, have {negative}")
    tail = r[:k]
    if np.any(tail >= 0):
        raise ValueError("zero or positive return among the k most negative")
    logs = np.log(-tail)
    return float(np.mean(logs) - logs[k - 1])


def wasserstein1(a, b) -> float:
    """First Wasserstein distance between two empirical distributions.

    Equal sizes reduce to the mean absolute difference of sorted samples;
    unequal sizes integrate |F_a^{-1}(u) - F_b^{-1}(u)| over the merged
    quantile grid of both samples.
    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    n, m = a.size, b.size
    if n == 0 or m == 0:
        raise ValueError("empty sample")
    if n == m:
        return float(np.mean(np.abs(a - b)))
    levels = np.union1d(np.arange(1, n + 1) / n, np.arange(1, m + 1) / m)
    widths = np.diff(np.concatenate(([0.0], levels)))
    mids = levels - widths / 2.0
    qa = a[np.minimum((mids * n).astype(np.int64), n - 1)]
    qb = b[np.minimum((mids * m).astype(np.int64), m - 1)]
    return float(np.sum(widths * np.abs(qa - qb)))


def var_es(returns, alpha: float) -> tuple[float, float]:
    """Historical VaR and expected shortfall of the loss -r at level alpha.

    VaR is the ceil(alpha*n)-th smallest loss and ES averages the
    ceil((1-alpha)*n) largest losses. Indices carry a 1e-9 guard so binary
    float levels like 0.99 resolve to the intended exact ranks.
    """
    losses = np.sort(-np.asarray(returns, dtype=np.float64))
    n = losses.size
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    k = int(math.ceil(alpha * n - 1e-9))
    tail_count = n - int(math.floor(alpha * n + 1e-9))
    if k < 1 or tail_count < 1:
        raise ValueError(f"n={n} too small for alpha={alpha}")
    var = float(losses[k - 1])
    es = float(np.mean(losses[n - tail_count :]))
    return var, es


def corr_distance(c_a, c_b) -> float:
    """Sum of squared differences over the strict lower triangle."""
    a = np.asarray(c_a, dtype=np.float64)
    b = np.asarray(c_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"need equal square matrices, got {a.shape} and {b.shape}")
    idx = np.tril_indices(a.shape[0], k=-1)
    diff = a[idx] - b[idx]
    return float(diff @ diff)


def ledoit_wolf(values) -> tuple[np.ndarray, float]:
    """Shrunk covariance (1-gamma)*S + gamma*(tr(S)/d)*I with the standard
    identity-target intensity.

    S is the divisor-n sample covariance. gamma = min(1, b2/delta2) where
    delta2 is the squared Frobenius distance from S to the spherical target
    and b2 estimates the sampling noise of S. Returns (matrix, gamma).
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need an n x d panel with n >= 2")
    n, d = x.shape
    x = x - x.mean(axis=0)
    s = x.T @ x / n
    mu = float(np.trace(s)) / d
    dev = s - mu * np.eye(d)
    delta2 = float(np.sum(dev * dev)) / d
    if delta2 == 0.0:
        return s.copy(), 0.0
    row_sq = np.einsum("ij,ij->i", x, x)
    b2bar = (float(np.sum(row_sq**2)) - n * float(np.sum(s * s))) / (n**2 * d)
    gamma = min(1.0, max(0.0, b2bar / delta2))
    return (1.0 - gamma) * s + gamma * mu * np.eye(d), gamma


def one_factor_corr(values) -> tuple[np.ndarray, float]:
    """Constant-correlation benchmark: every off-diagonal set to the mean
    pairwise sample correlation. Returns (matrix, mean_corr)."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("need an n x d panel with d >= 2")
    corr = np.corrcoef(x, rowvar=False)
    idx = np.tril_indices(x.shape[1], k=-1)
    rbar = float(np.mean(corr[idx]))
    out = np.full_like(corr, rbar)
    np.fill_diagonal(out, 1.0)
    return out, rbar


def _mean_lower_triangle_corr(s1, s2, w, d):
    """Mean pairwise correlation from window sums s1=sum x, s2=sum x x'."""
    mean = s1 / w
    cov = s2 / w - np.outer(mean, mean)
    sd = np.sqrt(np.diag(cov))
    if np.any(sd <= 0):
        return float("nan")
    corr = cov / np.outer(sd, sd)
    idx = np.tril_indices(d, k=-1)
    return float(np.mean(corr[idx]))


def rolling_mean_corr(values, window: int = 252) -> np.ndarray:
    """Mean pairwise correlation over a rolling window of rows.

    Output[t] covers rows [t, t+window); length n - window + 1. Windows with
    a constant column give NaN.
    """
    x = np.asarray(values, dtype=np.float64)
    n, d = x.shape
    if d < 2:
        raise ValueError("need at least 2 columns")
    if not 2 <= window <= n:
        raise ValueError(f"window {window} out of range for n={n}")
    s1 = x[:window].sum(axis=0)
    s2 = x[:window].T @ x[:window]
    out = np.empty(n - window + 1)
    out[0] = _mean_lower_triangle_corr(s1, s2, window, d)
    for t in range(1, n - window + 1):
        gone, come = x[t - 1], x[t + window - 1]
        s1 += come - gone
        s2 += np.outer(come, come) - np.outer(gone, gone)
        out[t] = _mean_lower_triangle_corr(s1, s2, window, d)
    return out


def skewness(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    c = x - x.mean()
    m2 = float(np.mean(c**2))
    if m2 == 0.0:
        return float("nan")
    return float(np.mean(c**3)) / m2**1.5


def excess_kurtosis(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    c = x - x.mean()
    m2 = float(np.mean(c**2))
    if m2 == 0.0:
        return float("nan")
    return float(np.mean(c**4)) / m2**2 - 3.0


def _block_compound(r: np.ndarray, size: int) -> np.ndarray:
    """Non-overlapping blocks from the start, tail remainder dropped."""
    nblocks = r.size // size
    if nblocks == 0:
        return np.empty(0)
    blocks = r[: nblocks * size].reshape(nblocks, size)
    return np.prod(1.0 + blocks, axis=1) - 1.0


def max_drawdown(returns) -> float:
    """Largest peak-to-trough loss of the compounded wealth path.

    The path starts at wealth 1 before the first return, so an immediate
    loss already counts as a drawdown.
    """
    wealth = np.concatenate(
        ([1.0], np.cumprod(1.0 + np.asarray(returns, dtype=np.float64)))
    )
    peak = np.maximum.accumulate(wealth)
    peak = np.maximum(peak, np.finfo(float).tiny)
    return float(np.max(1.0 - wealth / peak))


def portfolio_stats(
    returns,
    periods_per_year: int = 252,
    alphas: tuple[float, ...] = (0.95, 0.99),
    temporal_max_lag: int = 63,
) -> dict[str, float]:
    """Summary table for one return series.

    Annualized mean/vol/Sharpe (population std, sqrt-of-time), population
    skewness and excess kurtosis, max drawdown of compounded wealth, VaR/ES
    at each alpha for daily returns and for non-overlapping compounded
    weekly (5-day) and monthly (21-day) blocks, plus the two temporal
    scores. Undefined entries (zero vol, too few blocks, short series) are
    NaN.
    """
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 1 or r.size < 2:
        raise ValueError("need a one-dimensional series with n >= 2")
    ann_return = float(r.mean()) * periods_per_year
    ann_vol = float(r.std()) * math.sqrt(periods_per_year)
    stats = {
        "ann_return": ann_return,
        "ann_vol": ann_vol,
        "sharpe": ann_return / ann_vol if ann_vol > 0 else float("nan"),
        "skewness": skewness(r),
        "excess_kurtosis": excess_kurtosis(r),
        "max_drawdown": max_drawdown(r),
    }
    horizons = {"daily": r, "weekly": _block_compound(r, 5), "monthly": _block_compound(r, 21)}
    for horizon, series in horizons.items():
        for alpha in alphas:
            tag = f"{horizon}_{int(round(alpha * 100))}"
            try:
                var, es = var_es(series, alpha)
            except ValueError:
                var, es = float("nan"), float("nan")
            stats[f"var_{tag}"] = var
            stats[f"es_{tag}"] = es
    if r.size >= temporal_max_lag + 2:
        stats["vol_clustering_score"] = clustering_score(r, "vol", temporal_max_lag)
        stats["leverage_score"] = clustering_score(r, "leverage", temporal_max_lag)
    else:
        stats["vol_clustering_score"] = float("nan")
        stats["leverage_score"] = float("nan")
    return stats


def nearest_rank_percentile(values, q: float) -> float:
    """q-th percentile by the nearest-rank rule: sorted[ceil(q/100 * n)] (1-based)."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    if x.size == 0:
        raise ValueError("empty sample")
    if not 0.0 < q <= 100.0:
        raise ValueError(f"q must be in (0, 100], got {q}")
    rank = max(1, int(math.ceil(q / 100.0 * x.size - 1e-9)))
    return float(x[rank - 1])


def fit_acf_decay(rho, kind: str = "exponential") -> tuple[float, float]:
    """Least-squares (a, gamma) for a*exp(-gamma*tau) or a*tau**(-gamma).

    Fit runs in log space on the strictly positive entries of the profile
    (lags are 1-based positions); fewer than two positive points gives
    (nan, nan).
    """
    rho = np.asarray(rho, dtype=np.float64)
    tau = np.arange(1, rho.size + 1, dtype=np.float64)
    keep = np.isfinite(rho) & (rho > 0)
    if keep.sum() < 2:
        return float("nan"), float("nan")
    y = np.log(rho[keep])
    t = tau[keep] if kind == "exponential" else np.log(tau[keep])
    if kind not in ("exponential", "power"):
        raise ValueError(f"unknown decay kind {kind!r}")
    slope, intercept = np.polyfit(t, y, 1)
    return float(np.exp(intercept)), float(-slope)
