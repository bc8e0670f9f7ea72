"""Report assembly: delimited tables, JSON documents, schema validation.

All numeric cells are written with shortest round-trip repr so reruns are
byte-identical; NaN prints as "nan" in CSV but is mapped to null in JSON
(JSON has no NaN). Every report JSON validates against the schema shipped
under synthmarket/schemas before it is written.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import jsonschema
import numpy as np

from . import metrics
from .panel import ReturnsPanel

__all__ = [
    "write_table",
    "validate_report",
    "json_safe",
    "scenario_metrics",
    "aggregate_band",
    "equal_weight",
    "fit_baseline_marginals",
    "evaluate_report",
]


def write_table(path, header: list[str], rows: list[list]) -> None:
    """CSV with repr-formatted floats; strings and ints pass through."""

    def cell(v) -> str:
        if isinstance(v, bool):
            return str(v).lower()
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell(v) for v in row) + "\n")


def json_safe(obj):
    """Recursively replace NaN/inf floats with None for strict JSON."""
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def validate_report(obj: dict, name: str) -> None:
    """Check a report document against the shipped schema; raises on failure."""
    schema_text = resources.files("synthmarket.schemas").joinpath(f"{name}.schema.json").read_text()
    jsonschema.validate(obj, json.loads(schema_text))


def equal_weight(panel: ReturnsPanel) -> np.ndarray:
    """Daily-rebalanced equal-weight portfolio returns."""
    return panel.values.mean(axis=1)


def scenario_metrics(args) -> dict:
    """Per-scenario metric extraction (module-level so it can cross process
    boundaries for parallel evaluation).

    args: (panel, reference_values, reference_corr, max_lag). Returns
    per-asset Wasserstein distances, per-asset temporal scores and tail
    stats, the correlation distance, equal-weight portfolio stats, and the
    portfolio ACF profiles.
    """
    scenario, ref_values, ref_corr, max_lag = args
    values = scenario.values
    d = values.shape[1]
    w1 = np.array(
        [metrics.wasserstein1(values[:, j], ref_values[:, j]) for j in range(d)]
    )
    vol = np.array([metrics.clustering_score(values[:, j], "vol", max_lag) for j in range(d)])
    lev = np.array(
        [metrics.clustering_score(values[:, j], "leverage", max_lag) for j in range(d)]
    )
    tails = {}
    for alpha in (0.95, 0.99):
        pair = [metrics.var_es(values[:, j], alpha) for j in range(d)]
        tails[f"var_{int(alpha * 100)}"] = np.array([p[0] for p in pair])
        tails[f"es_{int(alpha * 100)}"] = np.array([p[1] for p in pair])
    kurt = np.array([metrics.excess_kurtosis(values[:, j]) for j in range(d)])
    corr_dist = metrics.corr_distance(np.corrcoef(values, rowvar=False), ref_corr)
    port = equal_weight(scenario)
    return {
        "w1": w1,
        "vol": vol,
        "leverage": lev,
        "tails": tails,
        "kurtosis": kurt,
        "corr_distance": corr_dist,
        "portfolio_stats": metrics.portfolio_stats(port, temporal_max_lag=max_lag),
        "acf_vol": metrics.acf_profile(port, "vol", max_lag),
        "acf_leverage": metrics.acf_profile(port, "leverage", max_lag),
    }


def aggregate_band(values, band=(2.5, 97.5)) -> dict:
    """median/lo/hi via nearest rank, NaN-tolerant (NaNs dropped)."""
    arr = np.asarray(values, dtype=np.float64)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        nan = float("nan")
        return {"median": nan, "lo": nan, "hi": nan}
    return {
        "median": metrics.nearest_rank_percentile(arr, 50.0),
        "lo": metrics.nearest_rank_percentile(arr, band[0]),
        "hi": metrics.nearest_rank_percentile(arr, band[1]),
    }


def fit_baseline_marginals(train_values: np.ndarray, mode: str, seed: int, size: int):
    """Per-asset marginal baseline samples: fit the named law on the training
    column, then draw one seeded sample of the requested size."""
    from .mixture import fit_em, sample  # local import keeps module load light

    d = train_values.shape[1]
    rng_seeds = np.random.SeedSequence(seed).spawn(d)
    out = np.empty((size, d))
    for j in range(d):
        fit = fit_em(train_values[:, j], mode=mode, n_restarts=3, seed=j)
        rng = np.random.default_rng(rng_seeds[j])
        out[:, j] = sample(fit.params, size, rng)
    return out


def evaluate_report(
    reference: ReturnsPanel,
    segment: str,
    per_scenario: list[dict],
    baseline_w1: dict[str, np.ndarray],
    bench_distances: dict[str, float],
    band=(2.5, 97.5),
    max_lag: int = 63,
) -> dict:
    """Assemble the evaluate report document from per-scenario extractions."""
    tickers = list(reference.tickers)
    d = len(tickers)
    w1_matrix = np.vstack([s["w1"] for s in per_scenario])  # scenarios x assets
    per_asset = []
    for j in range(d):
        row = {"ticker": tickers[j]}
        row.update(
            {f"generator_{k}": v for k, v in aggregate_band(w1_matrix[:, j], band).items()}
        )
        for name, vals in baseline_w1.items():
            row[name] = float(vals[j])
        per_asset.append(row)
    median_block = {"generator": aggregate_band(np.median(w1_matrix, axis=1), band)}
    for name, vals in baseline_w1.items():
        median_block[name] = float(np.median(vals))

    ref_values = reference.values
    temporal = []
    vol_matrix = np.vstack([s["vol"] for s in per_scenario])
    lev_matrix = np.vstack([s["leverage"] for s in per_scenario])
    for j in range(d):
        temporal.append(
            {
                "ticker": tickers[j],
                "historical_vol_score": metrics.clustering_score(
                    ref_values[:, j], "vol", max_lag
                ),
                "historical_leverage_score": metrics.clustering_score(
                    ref_values[:, j], "leverage", max_lag
                ),
                "generator_vol": aggregate_band(vol_matrix[:, j], band),
                "generator_leverage": aggregate_band(lev_matrix[:, j], band),
            }
        )

    tails = []
    kurt_matrix = np.vstack([s["kurtosis"] for s in per_scenario])
    tail_keys = ("var_95", "es_95", "var_99", "es_99")
    for j in range(d):
        entry = {"ticker": tickers[j]}
        for key in tail_keys:
            alpha = float(key.split("_")[1]) / 100.0
            hist_var, hist_es = metrics.var_es(ref_values[:, j], alpha)
            entry[f"historical_{key}"] = hist_var if key.startswith("var") else hist_es
            gen = np.array([s["tails"][key][j] for s in per_scenario])
            entry[f"generator_{key}"] = aggregate_band(gen, band)
        entry["historical_kurtosis"] = metrics.excess_kurtosis(ref_values[:, j])
        entry["generator_kurtosis"] = aggregate_band(kurt_matrix[:, j], band)
        tails.append(entry)

    corr_block = {
        f"generator_{k}": v
        for k, v in aggregate_band(
            [s["corr_distance"] for s in per_scenario], band
        ).items()
    }
    corr_block.update(bench_distances)

    port_hist = metrics.portfolio_stats(equal_weight(reference), temporal_max_lag=max_lag)
    port_block = {}
    for key in port_hist:
        gen = [s["portfolio_stats"][key] for s in per_scenario]
        port_block[key] = {"historical": port_hist[key], "generator": aggregate_band(gen, band)}

    acf_decay = {}
    acf_median = {}
    for kind in ("vol", "leverage"):
        stack = np.vstack([s[f"acf_{kind}"] for s in per_scenario])
        median_profile = np.median(stack, axis=0)
        acf_median[kind] = median_profile
        a_exp, g_exp = metrics.fit_acf_decay(median_profile, "exponential")
        a_pow, g_pow = metrics.fit_acf_decay(median_profile, "power")
        acf_decay[kind] = {
            "exponential": {"a": a_exp, "gamma": g_exp},
            "power": {"a": a_pow, "gamma": g_pow},
        }

    report = {
        "format": "evaluate-report/1",
        "reference": {"rows": reference.n, "tickers": tickers, "segment": segment},
        "scenario_count": len(per_scenario),
        "wasserstein": {"per_asset": per_asset, "median": median_block},
        "temporal": temporal,
        "tails": tails,
        "correlation": corr_block,
        "portfolio": port_block,
        "acf_decay": acf_decay,
    }
    return json_safe(report), acf_median
