"""Figure rendering for the report path.

Every figure is drawn from the same arrays that land in the CSV/JSON
artifacts, never from intermediate state, so the PNGs are a faithful view
of the delimited output. Rendering uses the Agg backend and is optional
everywhere (reports remain complete without it).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spectral import mp_density

__all__ = [
    "save_figure",
    "fig_sharpe_profile",
    "fig_regurgitation",
    "fig_coverage",
    "fig_eigen_spectrum",
    "fig_rolling_corr",
    "fig_acf_profile",
    "fig_wasserstein",
]

FIGSIZE = (8.0, 4.5)


def save_figure(fig, path) -> None:
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)


def fig_sharpe_profile(profile, title: str = "Sharpe profile"):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    h = np.asarray(profile.h_values)
    ax.fill_between(h, profile.lo, profile.hi, alpha=0.25, label="2.5-97.5%")
    ax.plot(h, profile.median, lw=1.8, label="median")
    if profile.in_sample is not None:
        ax.plot(h, profile.in_sample, "--", lw=1.2, label="in-sample")
    if profile.out_of_sample is not None:
        ax.plot(h, profile.out_of_sample, ":", lw=1.2, label="out-of-sample")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("signal horizon h (days)")
    ax.set_ylabel("annualized Sharpe")
    ax.set_title(title)
    ax.legend(frameon=False)
    return fig


def fig_regurgitation(h_values, truth, regurg, boot, title: str = "Regurgitation check"):
    """truth: array; regurg/boot: (lo, median, hi) triples of arrays."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    h = np.asarray(h_values)
    ax.fill_between(h, regurg[0], regurg[2], alpha=0.25, label="regenerated 2.5-97.5%")
    ax.plot(h, regurg[1], lw=1.2, label="regenerated median")
    ax.plot(h, boot[0], ":", lw=1.0, color="gray")
    ax.plot(h, boot[2], ":", lw=1.0, color="gray", label="bootstrap 2.5-97.5%")
    ax.plot(h, truth, "k--", lw=1.6, label="reference truth")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("signal horizon h (days)")
    ax.set_ylabel("annualized Sharpe")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    return fig


def fig_coverage(rows, title: str = "Coverage vs synthetic sample size"):
    """rows: dicts from bias.coverage_table."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    n = np.array([r["n_tilde"] for r in rows], dtype=float)
    ax.plot(n, [r["center"] for r in rows], lw=1.8, label="normal center")
    ax.fill_between(
        n, [r["lower"] for r in rows], [r["upper"] for r in rows], alpha=0.2,
        label="center +/- envelope",
    )
    if rows and "mc_coverage" in rows[0]:
        ax.plot(n, [r["mc_coverage"] for r in rows], "o", ms=4, label="Monte Carlo")
    ax.set_xscale("log")
    ax.set_xlabel("synthetic sample size")
    ax.set_ylabel("P(|U - truth| <= b)")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(frameon=False)
    return fig


def fig_eigen_spectrum(eigenvalues, n: int, d: int, edge: float):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    vals = np.asarray(eigenvalues)
    bulk = vals[vals <= edge]
    if bulk.size:
        ax.hist(bulk, bins=max(10, d // 4), density=True, alpha=0.5, label="bulk eigenvalues")
        grid = np.linspace(1e-6, max(edge * 1.3, float(bulk.max()) * 1.1), 400)
        ax.plot(grid, mp_density(grid, n, d), lw=1.5, label="Marchenko-Pastur")
    for v in vals[vals > edge]:
        ax.axvline(v, color="crimson", lw=1.0)
    ax.axvline(edge, color="k", ls="--", lw=1.0, label="noise edge")
    ax.set_xlabel("eigenvalue")
    ax.set_ylabel("density")
    ax.set_title(f"Correlation spectrum: {int(np.sum(vals > edge))} factors above the edge")
    ax.legend(frameon=False)
    return fig


def fig_rolling_corr(hist, synth, window: int):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(np.arange(len(hist)), hist, lw=1.4, label="historical")
    if synth is not None:
        ax.plot(np.arange(len(synth)), synth, lw=1.0, alpha=0.8, label="generated")
    ax.set_xlabel(f"window end ({window}-day window)")
    ax.set_ylabel("mean pairwise correlation")
    ax.set_title("Rolling mean correlation")
    ax.legend(frameon=False)
    return fig


def fig_acf_profile(hist, synth_median, kind: str):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    lags = np.arange(1, len(hist) + 1)
    ax.plot(lags, hist, lw=1.4, label="historical")
    if synth_median is not None:
        ax.plot(lags, synth_median, lw=1.2, label="generated median")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("lag (days)")
    ax.set_ylabel("correlation")
    ax.set_title(f"{kind} autocorrelation profile")
    ax.legend(frameon=False)
    return fig


def fig_wasserstein(tickers, generator_median, baselines: dict):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    x = np.arange(len(tickers))
    ax.plot(x, generator_median, "o-", ms=3, lw=1.0, label="generator (median)")
    for name, vals in baselines.items():
        ax.plot(x, vals, "s--", ms=3, lw=0.8, alpha=0.8, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels(tickers, rotation=90, fontsize=6)
    ax.set_ylabel("Wasserstein-1 distance")
    ax.set_title("Marginal distance to the reference panel")
    ax.legend(frameon=False)
    return fig
