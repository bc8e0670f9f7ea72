"""Seeded synthetic datasets: the bundled desk panel and test fixtures.

The desk panel is a 20-asset factor-plus-GARCH world small enough for the
whole pipeline to run in minutes yet rich enough to exercise every stage: a
dominant market factor and two weaker sector factors (so several
eigenvalues clear the noise edge), GARCH(1,1) volatility with Student-t
shocks on the market factor (volatility clustering, heavy tails), a
leverage tilt (negative shocks pump next-day variance), and t-distributed
idiosyncratic noise.

simulate_mean_reverting_panel plants a short-horizon cross-sectional
reversal (idiosyncratic shocks partially undone two days later, matching
the backtester's signal-to-PnL gap) so that a 1-day reversal signal is
profitable while a 61-day one is not; used to validate the backtester end
to end.
"""

from __future__ import annotations

import datetime as _dt

import numpy as np

from .panel import ReturnsPanel, synthetic_dates, write_csv

__all__ = [
    "simulate_desk_panel",
    "simulate_mean_reverting_panel",
    "write_desk_dataset",
    "DESK_SEED",
]

DESK_SEED = 20240901


def _garch_t_series(
    rng: np.random.Generator,
    n: int,
    omega: float,
    alpha: float,
    beta: float,
    nu: float,
    leverage: float = 0.0,
) -> np.ndarray:
    """GARCH(1,1) with unit-variance t shocks and an optional leverage term."""
    scale = np.sqrt((nu - 2.0) / nu)  # unit-variance standardized t
    var = omega / (1.0 - alpha - beta)
    out = np.empty(n)
    for t in range(n):
        shock = rng.standard_t(nu) * scale
        out[t] = np.sqrt(var) * shock
        down = max(-out[t], 0.0)
        var = omega + alpha * out[t] ** 2 + beta * var + leverage * down**2
    return out


def simulate_desk_panel(
    n: int = 1764, d: int = 20, seed: int = DESK_SEED, start: _dt.date | None = None
) -> ReturnsPanel:
    """Three-factor GARCH world; deterministic in (n, d, seed)."""
    if d < 6:
        raise ValueError("need at least 6 assets for the sector structure")
    rng = np.random.default_rng(seed)
    market = _garch_t_series(rng, n, omega=7e-7, alpha=0.10, beta=0.85, nu=6.0, leverage=0.06)
    sector_a = _garch_t_series(rng, n, omega=1.4e-6, alpha=0.06, beta=0.90, nu=8.0)
    sector_b = _garch_t_series(rng, n, omega=1.4e-6, alpha=0.06, beta=0.90, nu=8.0)
    beta_mkt = rng.uniform(0.7, 1.3, size=d)
    beta_a = np.where(np.arange(d) % 2 == 0, rng.uniform(0.8, 1.4, size=d), 0.0)
    beta_b = np.where(np.arange(d) % 2 == 1, rng.uniform(0.8, 1.4, size=d), 0.0)
    idio_scale = rng.uniform(0.006, 0.012, size=d)
    drift = rng.normal(3e-4, 2e-4, size=d)
    nu_idio = 7.0
    idio = (
        rng.standard_t(nu_idio, size=(n, d))
        * np.sqrt((nu_idio - 2.0) / nu_idio)
        * idio_scale
    )
    values = (
        drift
        + np.outer(market, beta_mkt)
        + np.outer(sector_a, beta_a)
        + np.outer(sector_b, beta_b)
        + idio
    )
    tickers = tuple(f"A{i:02d}" for i in range(d))
    return ReturnsPanel(synthetic_dates(n, start), tickers, values)


def simulate_mean_reverting_panel(
    n: int = 1000,
    d: int = 20,
    seed: int = 0,
    phi: float = -0.6,
    idio_scale: float = 0.01,
    market_scale: float = 0.002,
) -> ReturnsPanel:
    """Cross-sectional reversal world: idio_t = eps_t + phi * eps_{t-2}.

    The backtester ranks on the trailing window ending at t - lag and earns
    w' r_{t+1}, so at h=1 the signal day and the PnL day sit exactly two
    rows apart. Planting the bounce at lag 2 (phi < 0) makes the 1-day
    reversal profitable there while leaving long-horizon signals, whose
    windows end further back, with no edge.
    """
    if not -1.0 < phi < 0.0:
        raise ValueError(f"phi must be in (-1, 0) for a reversal, got {phi}")
    rng = np.random.default_rng(seed)
    market = rng.normal(0.0, market_scale, size=n)
    beta = rng.uniform(0.8, 1.2, size=d)
    eps = rng.normal(0.0, idio_scale, size=(n + 2, d))
    idio = eps[2:] + phi * eps[:-2]
    values = np.outer(market, beta) + idio
    tickers = tuple(f"A{i:02d}" for i in range(d))
    return ReturnsPanel(synthetic_dates(n), tickers, values)


def write_desk_dataset(path, n: int = 1764, d: int = 20, seed: int = DESK_SEED) -> ReturnsPanel:
    """Materialize the bundled desk panel as CSV; returns the panel."""
    panel = simulate_desk_panel(n=n, d=d, seed=seed)
    write_csv(panel, path)
    return panel
