"""Pipeline stages behind the CLI commands.

Each run_* function consumes a resolved config dict, a master seed, a worker
count and an output directory, writes its artifacts (manifest, report JSON,
tables/, optional figures/) and returns the manifest dict. Manifests contain
no timestamps: rerunning a command with the same config and seed yields
byte-identical data artifacts.

Seed discipline: every stage splits the master seed with SeedSequence into
named children (gan per cluster, mixture per asset, scenario sets, bootstrap
draws), so sub-results are reproducible in isolation.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__, metrics
from .clusters import cluster_pipeline
from .figures import (
    fig_acf_profile,
    fig_coverage,
    fig_eigen_spectrum,
    fig_regurgitation,
    fig_rolling_corr,
    fig_sharpe_profile,
    fig_wasserstein,
    save_figure,
)
from .gan import DESK_SPEC, FULL_SPEC, TcnSpec, TrainConfig, desk_config, train_gan
from .generator import (
    GaussianStub,
    GeneratorBundle,
    ScenarioSet,
    sample_size_guard,
    scenario_set,
    synthesize,
)
from .mixture import fit_em
from .panel import ReturnsPanel, load_csv, split, standardize
from .portfolio import SharpeProfile, backtest_mean_reversion, block_bootstrap
from .reports import (
    aggregate_band,
    equal_weight,
    evaluate_report,
    fit_baseline_marginals,
    scenario_metrics,
    validate_report,
    write_table,
)
from .serialize import dump_json, sha256_of_json
from .spectral import decompose, fit_factor_model

__all__ = [
    "ConfigError",
    "load_config",
    "run_fit",
    "run_generate",
    "run_evaluate",
    "run_backtest",
    "run_regurgitate",
    "run_biaslab",
    "fit_bundle",
    "DEFAULT_H_VALUES",
]

DEFAULT_H_VALUES = tuple(range(1, 66, 2))


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


def load_config(path) -> dict:
    """Parse a JSON config; relative paths inside resolve against its folder."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    base = os.path.dirname(os.path.abspath(path))
    for key in ("data", "bundle", "scenarios"):
        if isinstance(cfg.get(key), str):
            cfg[key] = os.path.normpath(os.path.join(base, cfg[key]))
    source = cfg.get("source")
    if isinstance(source, dict):
        for key in ("data", "path"):
            if isinstance(source.get(key), str):
                source[key] = os.path.normpath(os.path.join(base, source[key]))
    return cfg


def _require(cfg: dict, key: str, command: str):
    if key not in cfg or cfg[key] is None:
        raise ConfigError(f"{command} config needs '{key}'")
    return cfg[key]


def _spawn(seed: int, count: int) -> list[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(count)]


def _parallel_map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _ensure_dirs(out_dir, figures: bool, tables: bool = True) -> None:
    os.makedirs(out_dir, exist_ok=True)
    if tables:
        os.makedirs(os.path.join(out_dir, "tables"), exist_ok=True)
    if figures:
        os.makedirs(os.path.join(out_dir, "figures"), exist_ok=True)


def _write_manifest(out_dir, command, config, seed, workers, outputs, warnings=()):
    manifest = {
        "format": "run-manifest/1",
        "command": command,
        "package_version": __version__,
        "config": config,
        "config_sha256": sha256_of_json(config),
        "seed": int(seed),
        "workers": int(workers),
        "outputs": sorted(outputs),
    }
    if warnings:
        manifest["warnings"] = list(warnings)
    dump_json(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest


def _load_reference(cfg: dict, command: str):
    """(train, reference, segment) per the data/train_boundary config keys."""
    panel = load_csv(_require(cfg, "data", command))
    boundary = cfg.get("train_boundary")
    if boundary:
        train, test = split(panel, boundary)
    else:
        train, test = panel, None
    segment = cfg.get("segment") or ("test" if boundary else "all")
    if segment == "train":
        reference = train
    elif segment == "test":
        if test is None:
            raise ConfigError("segment 'test' needs a train_boundary")
        reference = test
    else:
        reference = panel
    return train, reference, segment


# ---------------------------------------------------------------------------
# fit


_GAN_SPECS = {"full": FULL_SPEC, "desk": DESK_SPEC}
_GAN_CONFIGS = {
    "full": TrainConfig(),
    "desk": desk_config(),
}
_SPEC_KEYS = ("hidden", "dilations", "kernels", "noise_channels")
_TRAIN_KEYS = (
    "iterations", "batch_size", "lr_generator", "lr_discriminator",
    "adam_beta1", "adam_beta2", "adam_eps", "d_steps", "log_every",
    "patience", "dtype",
)


def resolve_gan_profile(gan_cfg: dict | None, window: int):
    """(kind, TcnSpec, TrainConfig) from the fit config's gan block.

    kind is "stub" (no networks) or "tcn". Named profiles "full" and "desk"
    may be overridden field by field; the spec's receptive field must equal
    the training window.
    """
    gan_cfg = dict(gan_cfg or {})
    profile = gan_cfg.pop("profile", "desk")
    if profile == "stub":
        return "stub", None, None
    if profile not in _GAN_SPECS:
        raise ConfigError(f"unknown gan profile {profile!r}")
    spec = _GAN_SPECS[profile]
    train_cfg = _GAN_CONFIGS[profile]
    spec_over = {k: gan_cfg.pop(k) for k in _SPEC_KEYS if k in gan_cfg}
    train_over = {k: gan_cfg.pop(k) for k in _TRAIN_KEYS if k in gan_cfg}
    if gan_cfg:
        raise ConfigError(f"unknown gan config keys {sorted(gan_cfg)}")
    if spec_over:
        as_dict = spec.to_json_dict()
        as_dict.update(spec_over)
        spec = TcnSpec.from_json_dict(as_dict)
    if train_over:
        train_cfg = replace(train_cfg, **train_over)
    if spec.window != window:
        raise ConfigError(
            f"gan receptive field {spec.window} must equal the training window {window}"
        )
    return "tcn", spec, train_cfg


def _fit_mixture_task(args):
    column, mode, restarts, seed = args
    return fit_em(column, mode=mode, n_restarts=restarts, seed=seed).params


def fit_bundle(train_panel: ReturnsPanel, cfg: dict, seed: int, workers: int = 1):
    """Standardize, extract factors, cluster, train generators, fit residuals.

    Returns (bundle, gan_results) where gan_results maps cluster label to
    the TrainResult (empty for the stub profile).
    """
    window = int(cfg.get("window", 63))
    exponent = float(cfg.get("exponent", 0.5))
    n_clusters = int(cfg.get("n_clusters", 2))
    mode = cfg.get("residual_mode", "single_t")
    restarts = int(cfg.get("mixture_restarts", 5))
    kind, spec, train_cfg = resolve_gan_profile(cfg.get("gan"), window)

    std = standardize(train_panel)
    model = fit_factor_model(std)
    if n_clusters > model.m:
        raise ConfigError(
            f"n_clusters={n_clusters} exceeds the {model.m} factors above the noise edge"
        )
    decomp = decompose(std, model)
    scaled, clustering, training_sets = cluster_pipeline(decomp, n_clusters, exponent, window)

    gan_seed_root, mix_seed_root = _spawn(seed, 2)
    gan_seeds = _spawn(gan_seed_root, n_clusters)
    gans: dict[int, object] = {}
    gan_results = {}
    for label in sorted(training_sets):
        if kind == "stub":
            gans[label] = GaussianStub.fit(training_sets[label])
        else:
            result = train_gan(training_sets[label], spec, train_cfg, gan_seeds[label - 1])
            gans[label] = result.model
            gan_results[label] = result
    mix_seeds = _spawn(mix_seed_root, model.d)
    tasks = [
        (decomp.residuals[:, j], mode, restarts, mix_seeds[j]) for j in range(model.d)
    ]
    mixtures = _parallel_map(_fit_mixture_task, tasks, workers)
    bundle = GeneratorBundle(
        factor_model=model,
        clustering=clustering,
        gans=gans,
        mixtures=list(mixtures),
        residual_mode=mode,
    )
    return bundle, gan_results


def run_fit(cfg: dict, seed: int, workers: int, out_dir, figures: bool = True) -> dict:
    panel = load_csv(_require(cfg, "data", "fit"))
    boundary = cfg.get("train_boundary")
    train = split(panel, boundary)[0] if boundary else panel
    bundle, gan_results = fit_bundle(train, cfg, seed, workers)
    _ensure_dirs(out_dir, figures, tables=False)
    bundle_dir = os.path.join(out_dir, "bundle")
    bundle.save(bundle_dir)
    outputs = [
        os.path.join("bundle", name)
        for name in sorted(os.listdir(bundle_dir))
    ]
    for label, result in gan_results.items():
        name = os.path.join("bundle", f"gan_{label}_log.csv")
        result.write_log_csv(os.path.join(out_dir, name))
        outputs.append(name)
    if figures:
        model = bundle.factor_model
        fig = fig_eigen_spectrum(model.eigenvalues, model.n_train, model.d, model.edge)
        save_figure(fig, os.path.join(out_dir, "figures", "eigen_spectrum.png"))
        outputs.append(os.path.join("figures", "eigen_spectrum.png"))
    manifest = _write_manifest(out_dir, "fit", cfg, seed, workers, outputs)
    manifest["bundle_hash"] = bundle.content_hash()
    dump_json(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest


# ---------------------------------------------------------------------------
# generate


def run_generate(cfg: dict, seed: int, workers: int, out_dir, figures: bool = True) -> dict:
    bundle = GeneratorBundle.load(_require(cfg, "bundle", "generate"))
    n = int(cfg.get("n") or bundle.factor_model.n_train)
    count = int(cfg.get("count", 100))
    guard = float(cfg.get("guard_multiple", 10.0))
    warnings = []
    note = sample_size_guard(count, n, bundle.factor_model.n_train, guard)
    if note:
        warnings.append(note)
        print(f"warning: {note}", file=sys.stderr)
    scenarios = scenario_set(bundle, n, count, seed)
    _ensure_dirs(out_dir, figures=False, tables=False)
    scen_dir = os.path.join(out_dir, "scenarios")
    scenarios.save(scen_dir)
    outputs = [os.path.join("scenarios", f) for f in sorted(os.listdir(scen_dir))]
    return _write_manifest(out_dir, "generate", cfg, seed, workers, outputs, warnings)


# ---------------------------------------------------------------------------
# evaluate


def _corr_of(values: np.ndarray) -> np.ndarray:
    return np.corrcoef(values, rowvar=False)


def _cov_to_corr(cov: np.ndarray) -> np.ndarray:
    sd = np.sqrt(np.diag(cov))
    return cov / np.outer(sd, sd)


def run_evaluate(cfg: dict, seed: int, workers: int, out_dir, figures: bool = True) -> dict:
    train, reference, segment = _load_reference(cfg, "evaluate")
    scenarios = ScenarioSet.load(_require(cfg, "scenarios", "evaluate"))
    max_lag = int(cfg.get("max_lag", 63))
    band = tuple(cfg.get("band", (2.5, 97.5)))
    rolling_window = int(cfg.get("rolling_window", 252))

    ref_corr = _corr_of(reference.values)
    tasks = [(p, reference.values, ref_corr, max_lag) for p in scenarios.panels]
    per_scenario = _parallel_map(scenario_metrics, tasks, workers)

    baseline_w1 = {}
    base_seeds = _spawn(seed, 2)
    for i, mode in enumerate(cfg.get("baselines", ["gaussian", "single_t"])):
        if mode not in ("gaussian", "single_t", "two_t"):
            raise ConfigError(f"unknown baseline {mode!r}")
        sample_matrix = fit_baseline_marginals(
            train.values, mode, base_seeds[i % 2] + i, reference.n
        )
        baseline_w1[mode] = np.array(
            [
                metrics.wasserstein1(sample_matrix[:, j], reference.values[:, j])
                for j in range(reference.d)
            ]
        )

    one_factor_matrix, _ = metrics.one_factor_corr(train.values)
    lw_cov, _ = metrics.ledoit_wolf(train.values)
    bench = {
        "one_factor": metrics.corr_distance(one_factor_matrix, ref_corr),
        "ledoit_wolf": metrics.corr_distance(_cov_to_corr(lw_cov), ref_corr),
    }

    report, acf_median = evaluate_report(
        reference, segment, per_scenario, baseline_w1, bench, band, max_lag
    )
    validate_report(report, "evaluate")
    _ensure_dirs(out_dir, figures)
    dump_json(report, os.path.join(out_dir, "report.json"))
    outputs = ["report.json"]

    # tables
    w1_rows = [
        [
            r["ticker"], r["generator_median"], r["generator_lo"], r["generator_hi"],
            *[r.get(m, float("nan")) for m in baseline_w1],
        ]
        for r in report["wasserstein"]["per_asset"]
    ]
    path = os.path.join("tables", "wasserstein.csv")
    write_table(
        os.path.join(out_dir, path),
        ["ticker", "generator_median", "generator_lo", "generator_hi", *baseline_w1],
        w1_rows,
    )
    outputs.append(path)

    temp_rows = [
        [
            t["ticker"],
            t["historical_vol_score"],
            t["generator_vol"]["median"], t["generator_vol"]["lo"], t["generator_vol"]["hi"],
            t["historical_leverage_score"],
            t["generator_leverage"]["median"], t["generator_leverage"]["lo"],
            t["generator_leverage"]["hi"],
        ]
        for t in report["temporal"]
    ]
    path = os.path.join("tables", "temporal.csv")
    write_table(
        os.path.join(out_dir, path),
        [
            "ticker", "historical_vol", "gen_vol_median", "gen_vol_lo", "gen_vol_hi",
            "historical_leverage", "gen_lev_median", "gen_lev_lo", "gen_lev_hi",
        ],
        [[v if v is not None else float("nan") for v in row] for row in temp_rows],
    )
    outputs.append(path)

    tail_keys = ("var_95", "es_95", "var_99", "es_99")
    tail_rows = []
    for t in report["tails"]:
        row = [t["ticker"]]
        for key in tail_keys:
            row.append(t[f"historical_{key}"])
            row.append(t[f"generator_{key}"]["median"])
        row.append(t["historical_kurtosis"])
        row.append(t["generator_kurtosis"]["median"])
        tail_rows.append([v if v is not None else float("nan") for v in row])
    header = ["ticker"]
    for key in tail_keys:
        header += [f"historical_{key}", f"generator_{key}_median"]
    header += ["historical_kurtosis", "generator_kurtosis_median"]
    path = os.path.join("tables", "tails.csv")
    write_table(os.path.join(out_dir, path), header, tail_rows)
    outputs.append(path)

    corr = report["correlation"]
    corr_rows = [
        ["one_factor", corr.get("one_factor"), "", ""],
        ["ledoit_wolf", corr.get("ledoit_wolf"), "", ""],
        [
            "generator", corr["generator_median"], corr["generator_lo"],
            corr["generator_hi"],
        ],
    ]
    path = os.path.join("tables", "correlation.csv")
    write_table(
        os.path.join(out_dir, path), ["method", "distance", "lo", "hi"],
        [[v if v is not None else float("nan") for v in row] for row in corr_rows],
    )
    outputs.append(path)

    port_rows = []
    for stat, entry in report["portfolio"].items():
        hist = entry["historical"]
        gen = entry["generator"]
        port_rows.append(
            [
                stat,
                hist if hist is not None else float("nan"),
                *[gen[k] if gen[k] is not None else float("nan") for k in ("median", "lo", "hi")],
            ]
        )
    path = os.path.join("tables", "portfolio.csv")
    write_table(
        os.path.join(out_dir, path),
        ["stat", "historical", "generator_median", "generator_lo", "generator_hi"],
        port_rows,
    )
    outputs.append(path)

    hist_port = equal_weight(reference)
    for kind in ("vol", "leverage"):
        hist_profile = metrics.acf_profile(hist_port, kind, max_lag)
        rows = [
            [lag + 1, hist_profile[lag], acf_median[kind][lag]]
            for lag in range(max_lag)
        ]
        path = os.path.join("tables", f"acf_{kind}.csv")
        write_table(
            os.path.join(out_dir, path), ["lag", "historical", "generator_median"], rows
        )
        outputs.append(path)
        if figures:
            fig = fig_acf_profile(hist_profile, acf_median[kind], kind)
            fig_path = os.path.join("figures", f"acf_{kind}.png")
            save_figure(fig, os.path.join(out_dir, fig_path))
            outputs.append(fig_path)

    roll_hist = roll_synth = None
    if reference.n >= rolling_window + 1:
        roll_hist = metrics.rolling_mean_corr(reference.values, rolling_window)
        first = scenarios.panels[0]
        if first.n >= rolling_window + 1:
            roll_synth = metrics.rolling_mean_corr(first.values, rolling_window)
        length = max(len(roll_hist), 0 if roll_synth is None else len(roll_synth))
        rows = []
        for i in range(length):
            rows.append(
                [
                    i,
                    roll_hist[i] if i < len(roll_hist) else "",
                    "" if roll_synth is None or i >= len(roll_synth) else roll_synth[i],
                ]
            )
        path = os.path.join("tables", "rolling_corr.csv")
        write_table(os.path.join(out_dir, path), ["index", "historical", "generated"], rows)
        outputs.append(path)
        if figures:
            fig = fig_rolling_corr(roll_hist, roll_synth, rolling_window)
            fig_path = os.path.join("figures", "rolling_corr.png")
            save_figure(fig, os.path.join(out_dir, fig_path))
            outputs.append(fig_path)

    if figures:
        med = [r["generator_median"] for r in report["wasserstein"]["per_asset"]]
        fig = fig_wasserstein(
            list(reference.tickers), med,
            {m: baseline_w1[m] for m in baseline_w1},
        )
        fig_path = os.path.join("figures", "wasserstein.png")
        save_figure(fig, os.path.join(out_dir, fig_path))
        outputs.append(fig_path)

    return _write_manifest(out_dir, "evaluate", cfg, seed, workers, outputs)


# ---------------------------------------------------------------------------
# backtest


def _sharpe_rows_task(args):
    panel, h_values, legs = args
    return [backtest_mean_reversion(panel, h, legs).sharpe for h in h_values]


def _profile_from_matrix(
    sharpes: np.ndarray, h_values, band, in_sample=None, out_of_sample=None
) -> SharpeProfile:
    cols = range(len(h_values))
    med = np.array([metrics.nearest_rank_percentile(sharpes[:, i], 50.0) for i in cols])
    lo = np.array([metrics.nearest_rank_percentile(sharpes[:, i], band[0]) for i in cols])
    hi = np.array([metrics.nearest_rank_percentile(sharpes[:, i], band[1]) for i in cols])
    return SharpeProfile(
        h_values=tuple(h_values), median=med, lo=lo, hi=hi, sharpes=sharpes,
        in_sample=in_sample, out_of_sample=out_of_sample,
    )


def _profiles_for_panels(panels, h_values, legs, band, workers, in_ref=None, out_ref=None):
    rows = _parallel_map(_sharpe_rows_task, [(p, h_values, legs) for p in panels], workers)
    in_col = out_col = None
    if in_ref is not None:
        in_col = np.array([backtest_mean_reversion(in_ref, h, legs).sharpe for h in h_values])
    if out_ref is not None:
        out_col = np.array([backtest_mean_reversion(out_ref, h, legs).sharpe for h in h_values])
    return _profile_from_matrix(np.array(rows), h_values, band, in_col, out_col)


def _backtest_panels(cfg: dict, seed: int):
    source = _require(cfg, "source", "backtest")
    kind = source.get("kind")
    if kind == "scenarios":
        scenarios = ScenarioSet.load(_require(source, "path", "backtest.source"))
        return scenarios.panels, {"kind": "scenarios", "count": scenarios.count}
    if kind == "bootstrap":
        base = load_csv(_require(source, "data", "backtest.source"))
        boundary = source.get("train_boundary")
        if boundary:
            base = split(base, boundary)[0]
        count = int(source.get("count", 100))
        block_len = int(source.get("block_len", 63))
        target = source.get("target_len")
        seeds = _spawn(seed, count)
        panels = [
            block_bootstrap(base, target_len=target, block_len=block_len, seed=s)
            for s in seeds
        ]
        return panels, {"kind": "bootstrap", "count": count, "block_len": block_len}
    raise ConfigError(f"unknown backtest source kind {kind!r}")


def run_backtest(cfg: dict, seed: int, workers: int, out_dir, figures: bool = True) -> dict:
    panels, source_info = _backtest_panels(cfg, seed)
    h_values = [int(h) for h in cfg.get("h_values", DEFAULT_H_VALUES)]
    legs_list = cfg.get("legs", ["long_short", "long_only"])
    if isinstance(legs_list, str):
        legs_list = [legs_list]
    band = tuple(cfg.get("band", (2.5, 97.5)))
    in_ref = out_ref = None
    if cfg.get("data"):
        train, reference, _ = _load_reference(cfg, "backtest")
        in_ref = train
        out_ref = reference if cfg.get("train_boundary") else None

    _ensure_dirs(out_dir, figures)
    outputs = []
    profiles_json = {}
    for legs in legs_list:
        profile = _profiles_for_panels(
            panels, h_values, legs, band, workers, in_ref, out_ref
        )
        path = os.path.join("tables", f"sharpe_profile_{legs}.csv")
        profile.to_csv(os.path.join(out_dir, path))
        outputs.append(path)
        profiles_json[legs] = {
            "median": profile.median.tolist(),
            "lo": profile.lo.tolist(),
            "hi": profile.hi.tolist(),
            "in_sample": None if profile.in_sample is None else profile.in_sample.tolist(),
            "out_of_sample": (
                None if profile.out_of_sample is None else profile.out_of_sample.tolist()
            ),
        }
        if figures:
            fig = fig_sharpe_profile(profile, f"Sharpe profile ({legs.replace('_', '-')})")
            fig_path = os.path.join("figures", f"sharpe_profile_{legs}.png")
            save_figure(fig, os.path.join(out_dir, fig_path))
            outputs.append(fig_path)

    report = {
        "format": "backtest-report/1",
        "source": source_info,
        "h_values": h_values,
        "profiles": profiles_json,
    }
    validate_report(report, "backtest")
    dump_json(report, os.path.join(out_dir, "report.json"))
    outputs.append("report.json")
    return _write_manifest(out_dir, "backtest", cfg, seed, workers, outputs)


# ---------------------------------------------------------------------------
# regurgitate


def run_regurgitate(cfg: dict, seed: int, workers: int, out_dir, figures: bool = True) -> dict:
    bundle = GeneratorBundle.load(_require(cfg, "bundle", "regurgitate"))
    n_train = bundle.factor_model.n_train
    h_values = [int(h) for h in cfg.get("h_values", DEFAULT_H_VALUES)]
    legs = cfg.get("legs", "long_short")
    band = tuple(cfg.get("band", (2.5, 97.5)))
    truth_cfg = cfg.get("truth", {})
    truth_len = int(truth_cfg.get("length", 120 * 252))
    truth_count = int(truth_cfg.get("count", 10))
    scen_count = int(cfg.get("scenario_count", 100))
    boot_count = int(cfg.get("bootstrap_count", 100))
    block_len = int(cfg.get("block_len", 63))

    seed_sample, seed_truth, seed_bands, seed_boot, seed_fit = _spawn(seed, 5)

    sample = synthesize(bundle, n_train, seed_sample)
    fit_cfg = dict(cfg.get("fit", {}))
    fit_cfg.setdefault("n_clusters", bundle.clustering.n_clusters)
    fit_cfg.setdefault("exponent", bundle.clustering.exponent)
    fit_cfg.setdefault("residual_mode", bundle.residual_mode)
    second, _ = fit_bundle(sample, fit_cfg, seed_fit, workers)

    truth_set = scenario_set(bundle, truth_len, truth_count, seed_truth)
    truth_profile = _profiles_for_panels(
        truth_set.panels, h_values, legs, band, workers
    )
    truth = truth_profile.median

    regen_set = scenario_set(second, n_train, scen_count, seed_bands)
    regen_profile = _profiles_for_panels(regen_set.panels, h_values, legs, band, workers)

    boot_seeds = _spawn(seed_boot, boot_count)
    boot_panels = [
        block_bootstrap(sample, block_len=block_len, seed=s) for s in boot_seeds
    ]
    boot_profile = _profiles_for_panels(boot_panels, h_values, legs, band, workers)

    covered = [
        bool(regen_profile.lo[i] <= truth[i] <= regen_profile.hi[i])
        for i in range(len(h_values))
    ]
    report = {
        "format": "regurgitate-report/1",
        "h_values": h_values,
        "truth": truth.tolist(),
        "regenerated": {
            "median": regen_profile.median.tolist(),
            "lo": regen_profile.lo.tolist(),
            "hi": regen_profile.hi.tolist(),
        },
        "bootstrap": {
            "median": boot_profile.median.tolist(),
            "lo": boot_profile.lo.tolist(),
            "hi": boot_profile.hi.tolist(),
        },
        "covered": covered,
        "coverage_fraction": sum(covered) / len(covered),
    }
    validate_report(report, "regurgitate")
    _ensure_dirs(out_dir, figures)
    dump_json(report, os.path.join(out_dir, "report.json"))
    outputs = ["report.json"]
    rows = [
        [
            h_values[i], truth[i],
            regen_profile.lo[i], regen_profile.median[i], regen_profile.hi[i],
            boot_profile.lo[i], boot_profile.median[i], boot_profile.hi[i],
            covered[i],
        ]
        for i in range(len(h_values))
    ]
    path = os.path.join("tables", "regurgitation.csv")
    write_table(
        os.path.join(out_dir, path),
        [
            "h", "truth", "regen_lo", "regen_median", "regen_hi",
            "boot_lo", "boot_median", "boot_hi", "covered",
        ],
        rows,
    )
    outputs.append(path)
    if figures:
        fig = fig_regurgitation(
            h_values, truth,
            (regen_profile.lo, regen_profile.median, regen_profile.hi),
            (boot_profile.lo, boot_profile.median, boot_profile.hi),
        )
        fig_path = os.path.join("figures", "regurgitation.png")
        save_figure(fig, os.path.join(out_dir, fig_path))
        outputs.append(fig_path)
    return _write_manifest(out_dir, "regurgitate", cfg, seed, workers, outputs)


# ---------------------------------------------------------------------------
# biaslab


def run_biaslab(cfg: dict, seed: int, workers: int, out_dir, figures: bool = True) -> dict:
    from .bias import UStatSpec, analytic_sigma1_normal, coverage_table

    kernel = cfg.get("kernel", "mean")
    a_n = float(cfg.get("a_n", 0.1))
    b = float(_require(cfg, "b", "biaslab"))
    n_grid = [int(n) for n in cfg.get("n_grid", (100, 316, 1000, 3162, 10000))]
    sigma = float(cfg.get("sigma", 1.0))
    sigma1 = cfg.get("sigma1")
    if sigma1 is None:
        sigma1 = analytic_sigma1_normal(kernel, sigma)
    spec = UStatSpec(
        kernel=kernel,
        sigma1=float(sigma1),
        c_hat=float(cfg.get("c_hat", 1.0)),
        beta=float(cfg.get("beta", 3.0)),
    )
    mc_cfg = cfg.get("monte_carlo")
    sampler_factory = None
    theta = 0.0
    trials = 0
    if mc_cfg:
        theta = float(mc_cfg.get("theta", 0.0))
        trials = int(mc_cfg.get("trials", 2000))
        if kernel == "mean":
            loc, scale = theta + a_n, sigma
        else:
            # variance kernel: inflate the sd so that Var = theta + a_n
            loc, scale = 0.0, float(np.sqrt(theta + a_n))

        def sampler_factory(_n):
            return lambda rng, size: rng.normal(loc, scale, size=size)

    rows = coverage_table(
        spec, a_n, b, n_grid,
        sampler_factory=sampler_factory, theta_true=theta, trials=trials, seed=seed,
    )
    report = {
        "format": "biaslab-report/1",
        "kernel": kernel,
        "a_n": a_n,
        "b": b,
        "rows": rows,
    }
    validate_report(report, "biaslab")
    _ensure_dirs(out_dir, figures)
    dump_json(report, os.path.join(out_dir, "report.json"))
    outputs = ["report.json"]
    header = ["n_tilde", "center", "envelope", "lower", "upper"]
    if rows and "mc_coverage" in rows[0]:
        header += ["mc_coverage", "mc_se"]
    path = os.path.join("tables", "coverage.csv")
    write_table(
        os.path.join(out_dir, path), header, [[r[k] for k in header] for r in rows]
    )
    outputs.append(path)
    if figures:
        fig = fig_coverage(rows)
        fig_path = os.path.join("figures", "coverage.png")
        save_figure(fig, os.path.join(out_dir, fig_path))
        outputs.append(fig_path)
    return _write_manifest(out_dir, "biaslab", cfg, seed, workers, outputs)
