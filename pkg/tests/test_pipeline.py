import json
import os
from pathlib import Path

import numpy as np
import pytest

from conftest import make_panel
from synthmarket.gan import DESK_SPEC
from synthmarket.panel import write_csv
from synthmarket.pipeline import (
    ConfigError,
    fit_bundle,
    load_config,
    resolve_gan_profile,
    run_backtest,
    run_fit,
    run_generate,
)


@pytest.fixture()
def tiny_csv(tmp_path, rng):
    common = rng.standard_normal(150)
    values = 0.01 * (np.outer(common, np.linspace(0.7, 1.3, 5)) + rng.standard_normal((150, 5)))
    panel = make_panel(values)
    path = tmp_path / "tiny.csv"
    write_csv(panel, path)
    return path


STUB_FIT = {"n_clusters": 1, "window": 10, "residual_mode": "gaussian", "gan": {"profile": "stub"}}


# ---------------------------------------------------------------------------
# config handling


def test_load_config_resolves_relative_paths(tmp_path):
    sub = tmp_path / "cfgs"
    sub.mkdir()
    cfg_path = sub / "fit.json"
    cfg_path.write_text(json.dumps({
        "data": "../data/x.csv",
        "bundle": "bundle",
        "scenarios": "out/scen",
        "source": {"kind": "scenarios", "path": "out/scen"},
        "count": 7,
    }))
    cfg = load_config(cfg_path)
    assert cfg["data"] == os.path.normpath(str(tmp_path / "data" / "x.csv"))
    assert cfg["bundle"] == str(sub / "bundle")
    assert cfg["scenarios"] == str(sub / "out" / "scen")
    assert cfg["source"]["path"] == str(sub / "out" / "scen")
    assert cfg["count"] == 7  # non-path keys untouched


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="JSON object"):
        load_config(arr)


def test_resolve_gan_profile_stub_and_named():
    assert resolve_gan_profile({"profile": "stub"}, 63) == ("stub", None, None)
    kind, spec, train_cfg = resolve_gan_profile({"profile": "desk"}, 63)
    assert kind == "tcn" and spec == DESK_SPEC
    assert train_cfg.batch_size == 64


def test_resolve_gan_profile_overrides():
    kind, spec, train_cfg = resolve_gan_profile(
        {"profile": "desk", "hidden": 8, "iterations": 11, "lr_generator": 1e-4}, 63
    )
    assert spec.hidden == 8 and spec.window == 63  # architecture keys preserved
    assert train_cfg.iterations == 11
    assert train_cfg.lr_generator == 1e-4


def test_resolve_gan_profile_rejects_bad_config():
    with pytest.raises(ConfigError, match="unknown gan profile"):
        resolve_gan_profile({"profile": "huge"}, 63)
    with pytest.raises(ConfigError, match="unknown gan config keys"):
        resolve_gan_profile({"profile": "desk", "learning_rate": 0.1}, 63)
    with pytest.raises(ConfigError, match="must equal the training window"):
        resolve_gan_profile({"profile": "desk"}, 10)


def test_fit_bundle_rejects_oversized_cluster_count(tiny_csv):
    from synthmarket.panel import load_csv

    panel = load_csv(tiny_csv)
    cfg = dict(STUB_FIT, n_clusters=10)
    with pytest.raises(ConfigError, match="n_clusters"):
        fit_bundle(panel, cfg, seed=0)


# ---------------------------------------------------------------------------
# fit / generate runs


def _run_tiny_fit(tiny_csv, out, seed=5):
    cfg = dict(STUB_FIT, data=str(tiny_csv))
    return run_fit(cfg, seed=seed, workers=1, out_dir=str(out), figures=False)


def test_run_fit_outputs_and_manifest(tiny_csv, tmp_path):
    out = tmp_path / "fit"
    manifest = _run_tiny_fit(tiny_csv, out)
    assert manifest["format"] == "run-manifest/1"
    assert manifest["command"] == "fit"
    assert manifest["seed"] == 5 and manifest["workers"] == 1
    assert "bundle_hash" in manifest
    for rel in manifest["outputs"]:
        assert (out / rel).is_file()
    on_disk = json.loads((out / "manifest.json").read_text())
    assert on_disk["config_sha256"] == manifest["config_sha256"]


def test_fit_reruns_are_byte_identical(tiny_csv, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    _run_tiny_fit(tiny_csv, out1)
    _run_tiny_fit(tiny_csv, out2)
    files1 = sorted(p.relative_to(out1) for p in out1.rglob("*") if p.is_file())
    files2 = sorted(p.relative_to(out2) for p in out2.rglob("*") if p.is_file())
    assert files1 == files2
    diff = [str(rel) for rel in files1 if (out1 / rel).read_bytes() != (out2 / rel).read_bytes()]
    assert diff == []


def test_run_generate_and_guard(tiny_csv, tmp_path):
    fit_out = tmp_path / "fit"
    _run_tiny_fit(tiny_csv, fit_out)
    gen_out = tmp_path / "gen"
    cfg = {"bundle": str(fit_out / "bundle"), "n": 50, "count": 4}
    manifest = run_generate(cfg, seed=9, workers=1, out_dir=str(gen_out), figures=False)
    assert "warnings" not in manifest
    scen_files = sorted(os.listdir(gen_out / "scenarios"))
    assert scen_files == [f"scenario_{i:04d}.csv" for i in range(4)] + ["scenarios.json"]
    head = json.loads((gen_out / "scenarios" / "scenarios.json").read_text())
    assert head["count"] == 4 and head["n"] == 50

    # absurd request trips the sample-size guard
    big = {"bundle": str(fit_out / "bundle"), "n": 50, "count": 40, "guard_multiple": 1.0}
    manifest2 = run_generate(big, seed=9, workers=1, out_dir=str(tmp_path / "g2"), figures=False)
    assert any("synthetic rows" in w for w in manifest2["warnings"])


def test_run_backtest_bootstrap_source(tiny_csv, tmp_path):
    out = tmp_path / "bt"
    cfg = {
        "source": {"kind": "bootstrap", "data": str(tiny_csv), "count": 6, "block_len": 20},
        "h_values": [1, 5],
        "legs": "long_short",
    }
    manifest = run_backtest(cfg, seed=3, workers=1, out_dir=str(out), figures=False)
    assert manifest["command"] == "backtest"
    report = json.loads((out / "report.json").read_text())
    assert report["format"] == "backtest-report/1"
    assert report["h_values"] == [1, 5]
    assert report["source"] == {"kind": "bootstrap", "count": 6, "block_len": 20}
    prof = report["profiles"]["long_short"]
    assert len(prof["median"]) == 2
    assert all(prof["lo"][i] <= prof["median"][i] <= prof["hi"][i] for i in range(2))
    csv_head = (out / "tables" / "sharpe_profile_long_short.csv").read_text().splitlines()[0]
    assert csv_head == "h,median,lo,hi,in_sample,out_of_sample"


def test_run_backtest_unknown_source_kind(tmp_path):
    with pytest.raises(ConfigError, match="source kind"):
        run_backtest(
            {"source": {"kind": "oracle"}}, seed=0, workers=1,
            out_dir=str(tmp_path / "x"), figures=False,
        )


def test_generate_rejects_missing_bundle_key(tmp_path):
    with pytest.raises(ConfigError, match="generate config needs 'bundle'"):
        run_generate({}, seed=0, workers=1, out_dir=str(tmp_path / "y"), figures=False)
