"""Risk models on a clipped eigenbasis, Markowitz weights, spectral
perturbation error, rank reduction, and the mean-reversion backtest.

The risk model keeps the leading m eigenpairs (P, delta) of a covariance
matrix and replaces the bulk with a single clipped eigenvalue lambda_c on
the orthogonal complement Q, chosen to preserve the trace:

    Sigma = P diag(delta) P' + lambda_c Q Q',
    lambda_c = (tr - sum(delta)) / (d - m).

Markowitz weights for max mu'w subject to w'Sigma w <= s^2 come out in
closed form in the split basis: with y_P = P'mu, y_Q = Q'mu,

    gamma = sqrt(y_P' inv(D) y_P + y_Q'y_Q / lambda_c) / s,
    v_P = inv(D) y_P / gamma,   v_Q = y_Q / (gamma lambda_c).

Rotating eigenvector k into eigenvector 1 by angle eps changes the inverse
applied to z by

    ||inv(S~) z - inv(S) z||^2
        = (1/l1 - 1/lk)^2 sin(eps)^2 (<z,P_k>^2 + <z,P_1>^2),

which the brute-force path verifies by rebuilding and inverting the dense
perturbed matrix. Rank reduction keeps the top-k eigenpairs, the
2-Wasserstein-optimal rank-k approximation for centered Gaussians.

The backtest ranks trailing h-day compounded returns lagged by
max(h//10, 1) days, shorts the top quintile and longs the bottom quintile
at equal weight, and realizes next-day PnL, annualized by sqrt(252).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import nearest_rank_percentile
from .panel import ReturnsPanel, synthetic_dates
from .spectral import orient_columns

__all__ = [
    "ClippedRiskModel",
    "markowitz_principal",
    "markowitz_weights",
    "perturbation_error",
    "w2_optimal_rank_k",
    "gaussian_w2sq",
    "corollary_demo",
    "BacktestResult",
    "backtest_mean_reversion",
    "block_bootstrap",
    "SharpeProfile",
    "sharpe_profile",
    "annualized_sharpe",
]


@dataclass(frozen=True)
class ClippedRiskModel:
    """Leading eigenpairs plus a trace-preserving clipped bulk."""

    P: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    lambda_c: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "P", np.asarray(self.P, dtype=np.float64))
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=np.float64))
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=np.float64))
        d, m = self.P.shape
        if self.delta.shape != (m,):
            raise ValueError("delta length must match P columns")
        if self.Q.shape != (d, d - m):
            raise ValueError(f"Q must be {d} x {d - m}, got {self.Q.shape}")
        if m < 1 or d - m < 1:
            raise ValueError("need 1 <= m < d")
        if self.lambda_c <= 0:
            raise ValueError(f"lambda_c must be positive, got {self.lambda_c}")
        if np.any(np.diff(self.delta) > 1e-12) or self.delta[-1] <= self.lambda_c:
            raise ValueError("delta must be descending and stay above lambda_c")
        basis = np.hstack([self.P, self.Q])
        if not np.allclose(basis.T @ basis, np.eye(d), atol=1e-8):
            raise ValueError("[P, Q] must be orthonormal")

    @property
    def d(self) -> int:
        return self.P.shape[0]

    @property
    def m(self) -> int:
        return self.P.shape[1]

    @classmethod
    def from_covariance(cls, cov: np.ndarray, m: int) -> "ClippedRiskModel":
        """Eigendecompose, keep the top m, clip the rest preserving the trace."""
        c = np.asarray(cov, dtype=np.float64)
        c = (c + c.T) / 2.0
        d = c.shape[0]
        if not 1 <= m < d:
            raise ValueError(f"need 1 <= m < d={d}, got m={m}")
        vals, vecs = np.linalg.eigh(c)
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], orient_columns(vecs[:, order])
        lambda_c = (float(np.trace(c)) - float(np.sum(vals[:m]))) / (d - m)
        return cls(P=vecs[:, :m], delta=vals[:m], Q=vecs[:, m:], lambda_c=lambda_c)

    def covariance(self) -> np.ndarray:
        return (
            self.P @ np.diag(self.delta) @ self.P.T
            + self.lambda_c * (self.Q @ self.Q.T)
        )

    def inverse_apply(self, z: np.ndarray) -> np.ndarray:
        """inv(Sigma) z without forming the dense inverse."""
        z = np.asarray(z, dtype=np.float64)
        yp = self.P.T @ z
        yq = self.Q.T @ z
        return self.P @ (yp / self.delta) + self.Q @ (yq / self.lambda_c)


def markowitz_principal(
    y_p: np.ndarray, y_q: np.ndarray, delta: np.ndarray, lambda_c: float, s: float
) -> tuple[np.ndarray, np.ndarray, float]:
    """Closed-form risk-constrained mean maximization in the split eigenbasis.

    Returns (v_P, v_Q, gamma); the weight vector in asset space is
    P v_P + Q v_Q and satisfies the risk budget with equality.
    """
    y_p = np.asarray(y_p, dtype=np.float64)
    y_q = np.asarray(y_q, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if s <= 0:
        raise ValueError(f"risk budget s must be positive, got {s}")
    if lambda_c <= 0 or np.any(delta <= 0):
        raise ValueError("eigenvalues must be positive")
    quad = float(y_p @ (y_p / delta)) + float(y_q @ y_q) / lambda_c
    if quad <= 0.0:
        raise ValueError("expected-return vector is zero; weights undefined")
    gamma = math.sqrt(quad) / s
    return (y_p / delta) / gamma, y_q / (gamma * lambda_c), gamma


def markowitz_weights(
    model: ClippedRiskModel, mu: np.ndarray, s: float
) -> tuple[np.ndarray, float]:
    """Asset-space optimal weights for the clipped model."""
    mu = np.asarray(mu, dtype=np.float64)
    v_p, v_q, gamma = markowitz_principal(
        model.P.T @ mu, model.Q.T @ mu, model.delta, model.lambda_c, s
    )
    return model.P @ v_p + model.Q @ v_q, gamma


def perturbation_error(
    model: ClippedRiskModel,
    k: int,
    epsilon: float,
    z: np.ndarray,
    method: str = "closed_form",
) -> float:
    """Squared change of inv(Sigma) z when eigenvector k rotates into
    eigenvector 1 by angle epsilon.

    k is 1-based with 2 <= k <= m. "closed_form" evaluates the identity in
    the module docstring; "brute_force" rebuilds the rotated covariance,
    solves both dense systems and differences them.
    """
    if not 2 <= k <= model.m:
        raise ValueError(f"k must be in [2, m={model.m}], got {k}")
    z = np.asarray(z, dtype=np.float64)
    p1 = model.P[:, 0]
    pk = model.P[:, k - 1]
    if method == "closed_form":
        coeff = (1.0 / model.delta[0] - 1.0 / model.delta[k - 1]) ** 2
        return coeff * math.sin(epsilon) ** 2 * (float(pk @ z) ** 2 + float(p1 @ z) ** 2)
    if method != "brute_force":
        raise ValueError(f"unknown method {method!r}")
    p_tilde = model.P.copy()
    p_tilde[:, 0] = -math.sin(epsilon) * pk + math.cos(epsilon) * p1
    p_tilde[:, k - 1] = math.cos(epsilon) * pk + math.sin(epsilon) * p1
    sigma_tilde = (
        p_tilde @ np.diag(model.delta) @ p_tilde.T + model.lambda_c * (model.Q @ model.Q.T)
    )
    sigma = model.covariance()
    diff = np.linalg.solve(sigma_tilde, z) - np.linalg.solve(sigma, z)
    return float(diff @ diff)


def w2_optimal_rank_k(cov: np.ndarray, k: int) -> np.ndarray:
    """Best rank-k approximation in Gaussian 2-Wasserstein distance:
    keep the k largest eigenpairs."""
    c = np.asarray(cov, dtype=np.float64)
    c = (c + c.T) / 2.0
    d = c.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    vals, vecs = np.linalg.eigh(c)
    order = np.argsort(vals)[::-1][:k]
    top_vals = np.clip(vals[order], 0.0, None)
    top_vecs = vecs[:, order]
    return top_vecs @ np.diag(top_vals) @ top_vecs.T


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((a + a.T) / 2.0)
    return vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def gaussian_w2sq(cov_a: np.ndarray, cov_b: np.ndarray) -> float:
    """Squared 2-Wasserstein distance between centered Gaussians:
    tr A + tr B - 2 tr (B^1/2 A B^1/2)^1/2."""
    a = np.asarray(cov_a, dtype=np.float64)
    b = np.asarray(cov_b, dtype=np.float64)
    root_b = _psd_sqrt(b)
    cross = _psd_sqrt(root_b @ a @ root_b)
    return float(np.trace(a) + np.trace(b) - 2.0 * np.trace(cross))


def corollary_demo() -> dict:
    """Shipped configuration where a small-eigenvalue direction error hurts
    far more than a comparable large-eigenvalue one.

    lambda_2 >> lambda_m while z loads equally on P_1, P_2 and P_m; the
    reported ratio delta_(m) / delta_(2) is then (1/l1 - 1/lm)^2 over
    (1/l1 - 1/l2)^2, about 9.8e3 here.
    """
    d, m = 8, 4
    delta = np.array([100.0, 50.0, 10.0, 1.0])
    basis = np.eye(d)
    model = ClippedRiskModel(
        P=basis[:, :m], delta=delta, Q=basis[:, m:], lambda_c=0.5
    )
    z = basis[:, 0] + basis[:, 1] + basis[:, m - 1]
    eps = 0.1
    err_2 = perturbation_error(model, 2, eps, z)
    err_m = perturbation_error(model, m, eps, z)
    return {"model": model, "z": z, "epsilon": eps, "error_2": err_2,
            "error_m": err_m, "ratio": err_m / err_2}


def annualized_sharpe(pnl: np.ndarray, periods_per_year: int = 252) -> float:
    """mean/std * sqrt(periods); population std; NaN for a flat series."""
    pnl = np.asarray(pnl, dtype=np.float64)
    sd = float(pnl.std())
    if sd == 0.0:
        return float("nan")
    return float(pnl.mean()) / sd * math.sqrt(periods_per_year)


@dataclass(frozen=True)
class BacktestResult:
    pnl: np.ndarray = field(repr=False)
    dates: tuple = ()
    h: int = 1
    lag: int = 1
    legs: str = "long_short"
    sharpe: float = float("nan")


def backtest_mean_reversion(
    panel: ReturnsPanel,
    h: int,
    legs: str = "long_short",
    quintile: float = 0.2,
) -> BacktestResult:
    """Cross-sectional mean reversion on trailing compounded returns.

    On day t the signal is the h-day compounded return ending at t - lag
    with lag = max(h // 10, 1). Assets are ranked by descending signal with
    ties broken by ticker order; the top ceil(d * quintile) are shorted and
    the bottom ceil(d * quintile) are held long at weight 1/q each
    ("long_short"), or only the bottom leg is held ("long_only"). The PnL
    entry dated t+1 is w' r_{t+1}; no future information enters the weights.
    """
    if h < 1:
        raise ValueError(f"h must be >= 1, got {h}")
    if legs not in ("long_short", "long_only"):
        raise ValueError(f"unknown legs {legs!r}")
    if not 0.0 < quintile <= 0.5:
        raise ValueError(f"quintile must be in (0, 0.5], got {quintile}")
    values = panel.values
    n, d = values.shape
    q = math.ceil(d * quintile)
    if legs == "long_short" and d < 2 * q:
        raise ValueError(f"d={d} too small for two disjoint legs of {q}")
    lag = max(h // 10, 1)
    first_t = h + lag - 1  # earliest day whose lagged window fits
    if first_t >= n - 1:
        raise ValueError(f"panel of {n} rows too short for h={h} (needs > {first_t + 1})")
    logc = np.vstack([np.zeros(d), np.cumsum(np.log1p(values), axis=0)])
    pnl = np.empty(n - 1 - first_t)
    for t in range(first_t, n - 1):
        # window of h returns ending at t - lag (inclusive), 0-based rows
        end = t - lag + 1
        signal = np.exp(logc[end] - logc[end - h]) - 1.0
        order = np.argsort(-signal, kind="stable")
        w = np.zeros(d)
        w[order[-q:]] = 1.0 / q
        if legs == "long_short":
            w[order[:q]] = -1.0 / q
        pnl[t - first_t] = float(w @ values[t + 1])
    dates = tuple(panel.dates[first_t + 1 :])
    return BacktestResult(
        pnl=pnl, dates=dates, h=h, lag=lag, legs=legs, sharpe=annualized_sharpe(pnl)
    )


def block_bootstrap(
    panel: ReturnsPanel, target_len: int | None = None, block_len: int = 63, seed: int = 0
) -> ReturnsPanel:
    """Moving-block bootstrap of whole rows (columns stay joint).

    Blocks of block_len consecutive rows start at uniform positions drawn
    with replacement; the concatenation is truncated to target_len (default:
    the panel length). Dates are a fresh synthetic weekday calendar.
    """
    values = panel.values
    n = values.shape[0]
    target = n if target_len is None else int(target_len)
    if target < 2:
        raise ValueError("target_len must be >= 2")
    if not 1 <= block_len <= n:
        raise ValueError(f"block_len {block_len} out of range for n={n}")
    rng = np.random.default_rng(seed)
    nblocks = -(-target // block_len)
    starts = rng.integers(0, n - block_len + 1, size=nblocks)
    rows = np.vstack([values[s : s + block_len] for s in starts])[:target]
    return ReturnsPanel(synthetic_dates(target), panel.tickers, rows)


@dataclass(frozen=True)
class SharpeProfile:
    """Distribution of backtest Sharpe across scenarios per signal horizon."""

    h_values: tuple[int, ...]
    median: np.ndarray = field(repr=False)
    lo: np.ndarray = field(repr=False)
    hi: np.ndarray = field(repr=False)
    sharpes: np.ndarray = field(repr=False)  # scenarios x horizons
    in_sample: np.ndarray | None = field(default=None, repr=False)
    out_of_sample: np.ndarray | None = field(default=None, repr=False)

    def to_csv(self, path) -> None:
        def col(arr, i):
            return "" if arr is None else repr(float(arr[i]))

        with open(path, "w") as fh:
            fh.write("h,median,lo,hi,in_sample,out_of_sample\n")
            for i, h in enumerate(self.h_values):
                fh.write(
                    f"{h},{repr(float(self.median[i]))},{repr(float(self.lo[i]))},"
                    f"{repr(float(self.hi[i]))},{col(self.in_sample, i)},"
                    f"{col(self.out_of_sample, i)}\n"
                )


def sharpe_profile(
    panels: list[ReturnsPanel],
    h_values: tuple[int, ...] = tuple(range(1, 66, 2)),
    legs: str = "long_short",
    band: tuple[float, float] = (2.5, 97.5),
    in_sample: ReturnsPanel | None = None,
    out_of_sample: ReturnsPanel | None = None,
) -> SharpeProfile:
    """Median and nearest-rank percentile band of Sharpe over scenarios.

    The median is the nearest-rank 50th percentile, consistent with the
    band; optional reference panels add in/out-of-sample columns.
    """
    if not panels:
        raise ValueError("need at least one scenario panel")
    sharpes = np.array(
        [
            [backtest_mean_reversion(p, h, legs).sharpe for h in h_values]
            for p in panels
        ]
    )
    med = np.array([nearest_rank_percentile(sharpes[:, i], 50.0) for i in range(len(h_values))])
    lo = np.array([nearest_rank_percentile(sharpes[:, i], band[0]) for i in range(len(h_values))])
    hi = np.array([nearest_rank_percentile(sharpes[:, i], band[1]) for i in range(len(h_values))])
    extras = {}
    for name, ref in (("in_sample", in_sample), ("out_of_sample", out_of_sample)):
        if ref is not None:
            extras[name] = np.array(
                [backtest_mean_reversion(ref, h, legs).sharpe for h in h_values]
            )
    return SharpeProfile(
        h_values=tuple(h_values),
        median=med,
        lo=lo,
        hi=hi,
        sharpes=sharpes,
        in_sample=extras.get("in_sample"),
        out_of_sample=extras.get("out_of_sample"),
    )
