"""Joint scenario synthesis: factor GANs plus mixture residuals.

A fitted bundle carries the factor model (eigenvectors, eigenvalues, m,
per-asset mean/std), the factor clustering with its scaling exponent, one
window generator per cluster, and one residual mixture per asset. A
synthetic standardized panel is assembled as

    X[i, j] = sum_k beta[j, k] * lambda_k**e * g_k[i]  +  Finv_j(u[i, j])

with g_k the cluster generator's output for factor k (scaled-factor units)
and u an independent uniform field; returns are then sigma_j * X + mu_j.

Randomness discipline: SeedSequence(seed) is split into one child per
factor plus one for the uniform field, in that order, so a scenario is a
pure function of (bundle, n, seed). Scenario sets derive per-scenario seeds
the same way from a master seed and record them in the manifest, making
every scenario individually reproducible.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .clusters import FactorClustering
from .gan import GanModel
from .mixture import MixtureParams, inverse_cdf
from .panel import ReturnsPanel, load_csv, synthetic_dates, write_csv
from .serialize import dump_json, sha256_of_json
from .spectral import FactorModel

__all__ = [
    "GaussianStub",
    "GeneratorBundle",
    "ScenarioSet",
    "synthesize",
    "scenario_set",
    "load_window_generator",
    "sample_size_guard",
]


@dataclass(frozen=True)
class GaussianStub:
    """Trivially identifiable window generator: i.i.d. N(mean, scale^2).

    Drop-in for a trained GAN wherever only the generate() interface is
    needed; used by the "stub" pipeline profile and closed-loop tests where
    the ground truth must be knowable.
    """

    mean: float
    scale: float

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @classmethod
    def fit(cls, windows: np.ndarray) -> "GaussianStub":
        x = np.asarray(windows, dtype=np.float64)
        return cls(mean=float(x.mean()), scale=max(float(x.std()), 1e-12))

    def generate(self, s: int, count: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return rng.normal(self.mean, self.scale, size=(count, s))

    def to_json_dict(self) -> dict:
        return {"format": "stub-gan/1", "mean": self.mean, "scale": self.scale}

    def save(self, path) -> None:
        dump_json(self.to_json_dict(), path)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GaussianStub":
        return cls(mean=float(obj["mean"]), scale=float(obj["scale"]))


def load_window_generator(path):
    """Load a window generator checkpoint, dispatching on its format tag."""
    with open(path) as fh:
        obj = json.load(fh)
    tag = obj.get("format")
    if tag == "tcn-gan/1":
        return GanModel.from_json_dict(obj)
    if tag == "stub-gan/1":
        return GaussianStub.from_json_dict(obj)
    raise ValueError(f"unknown window generator format {tag!r}")


@dataclass
class GeneratorBundle:
    """Everything needed to synthesize panels that mimic the training data."""

    factor_model: FactorModel
    clustering: FactorClustering
    gans: dict[int, object]  # cluster label -> window generator
    mixtures: list[MixtureParams]
    residual_mode: str = "single_t"

    def __post_init__(self) -> None:
        if self.clustering.m != self.factor_model.m:
            raise ValueError(
                f"clustering covers {self.clustering.m} factors, model has {self.factor_model.m}"
            )
        expected = set(range(1, self.clustering.n_clusters + 1))
        if set(self.gans) != expected:
            raise ValueError(f"generator labels {sorted(self.gans)} != clusters {sorted(expected)}")
        if len(self.mixtures) != self.factor_model.d:
            raise ValueError(
                f"need one residual mixture per asset: {len(self.mixtures)} != {self.factor_model.d}"
            )

    @property
    def exponent(self) -> float:
        return self.clustering.exponent

    def content_hash(self) -> str:
        """Hash of the full fitted state; identical refits hash identically."""
        return sha256_of_json(
            {
                "factor_model": self.factor_model.to_json_dict(),
                "clustering": self.clustering.to_json_dict(),
                "gans": {str(k): self.gans[k].to_json_dict() for k in sorted(self.gans)},
                "mixtures": [m.to_json_dict() for m in self.mixtures],
                "residual_mode": self.residual_mode,
            }
        )

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        self.factor_model.save(os.path.join(directory, "factor_model.json"))
        self.clustering.save(os.path.join(directory, "clustering.json"))
        gan_files = {}
        for label in sorted(self.gans):
            name = f"gan_{label}.json"
            self.gans[label].save(os.path.join(directory, name))
            gan_files[str(label)] = name
        dump_json(
            {
                "format": "residual-mixtures/1",
                "mode": self.residual_mode,
                "params": [m.to_json_dict() for m in self.mixtures],
            },
            os.path.join(directory, "mixtures.json"),
        )
        dump_json(
            {
                "format": "generator-bundle/1",
                "factor_model": "factor_model.json",
                "clustering": "clustering.json",
                "gans": gan_files,
                "mixtures": "mixtures.json",
                "residual_mode": self.residual_mode,
                "content_hash": self.content_hash(),
            },
            os.path.join(directory, "bundle.json"),
        )

    @classmethod
    def load(cls, directory) -> "GeneratorBundle":
        with open(os.path.join(directory, "bundle.json")) as fh:
            head = json.load(fh)
        if head.get("format") != "generator-bundle/1":
            raise ValueError(f"unsupported bundle format {head.get('format')!r}")
        factor_model = FactorModel.load(os.path.join(directory, head["factor_model"]))
        clustering = FactorClustering.load(os.path.join(directory, head["clustering"]))
        gans = {
            int(label): load_window_generator(os.path.join(directory, name))
            for label, name in head["gans"].items()
        }
        with open(os.path.join(directory, head["mixtures"])) as fh:
            mix = json.load(fh)
        mixtures = [MixtureParams.from_json_dict(m) for m in mix["params"]]
        return cls(
            factor_model=factor_model,
            clustering=clustering,
            gans=gans,
            mixtures=mixtures,
            residual_mode=head.get("residual_mode", mix.get("mode", "single_t")),
        )


def _spawn_seeds(seed: int, count: int) -> list[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(count)]


def synthesize(bundle: GeneratorBundle, n: int, seed: int) -> ReturnsPanel:
    """One synthetic panel of n rows, deterministic in (bundle, n, seed)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    model = bundle.factor_model
    m, d = model.m, model.d
    lam = model.eigenvalues[:m]
    children = _spawn_seeds(seed, m + 1)
    scaled = np.empty((n, m))
    for k in range(m):
        label = bundle.clustering.assignments[k]
        scaled[:, k] = bundle.gans[label].generate(n, 1, children[k])[0]
    factors = scaled * lam**bundle.exponent
    systematic = factors @ model.loadings.T
    u_rng = np.random.default_rng(children[m])
    u = u_rng.uniform(size=(n, d))
    tiny = np.finfo(float).tiny
    u = np.clip(u, tiny, 1.0 - np.finfo(float).epsneg)
    residuals = np.empty((n, d))
    for j in range(d):
        residuals[:, j] = inverse_cdf(u[:, j], bundle.mixtures[j])
    values = model.sigma * (systematic + residuals) + model.mu
    return ReturnsPanel(synthetic_dates(n), model.tickers, values)


@dataclass
class ScenarioSet:
    """A batch of synthetic panels with full reproducibility metadata."""

    panels: list[ReturnsPanel]
    seeds: list[int]
    master_seed: int
    n: int
    bundle_hash: str

    @property
    def count(self) -> int:
        return len(self.panels)

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        files = []
        for i, panel in enumerate(self.panels):
            name = f"scenario_{i:04d}.csv"
            write_csv(panel, os.path.join(directory, name))
            files.append(name)
        dump_json(
            {
                "format": "scenario-set/1",
                "master_seed": self.master_seed,
                "seeds": list(self.seeds),
                "n": self.n,
                "count": self.count,
                "bundle_hash": self.bundle_hash,
                "files": files,
            },
            os.path.join(directory, "scenarios.json"),
        )

    @classmethod
    def load(cls, directory) -> "ScenarioSet":
        with open(os.path.join(directory, "scenarios.json")) as fh:
            head = json.load(fh)
        if head.get("format") != "scenario-set/1":
            raise ValueError(f"unsupported scenario set format {head.get('format')!r}")
        panels = [load_csv(os.path.join(directory, name)) for name in head["files"]]
        return cls(
            panels=panels,
            seeds=[int(s) for s in head["seeds"]],
            master_seed=int(head["master_seed"]),
            n=int(head["n"]),
            bundle_hash=head["bundle_hash"],
        )


def scenario_set(
    bundle: GeneratorBundle, n: int, count: int, master_seed: int
) -> ScenarioSet:
    """count independent scenarios; scenario i uses the i-th spawned child
    seed of master_seed and can be regenerated alone from the manifest."""
    if count < 1:
        raise ValueError("count must be >= 1")
    seeds = _spawn_seeds(master_seed, count)
    panels = [synthesize(bundle, n, s) for s in seeds]
    return ScenarioSet(
        panels=panels,
        seeds=seeds,
        master_seed=master_seed,
        n=n,
        bundle_hash=bundle.content_hash(),
    )


def sample_size_guard(count: int, n: int, n_train: int, multiple: float = 10.0) -> str | None:
    """Warning text when a scenario request dwarfs the training evidence."""
    if count * n > multiple * n_train:
        return (
            f"requested {count} x {n} = {count * n} synthetic rows from a model "
            f"fit on {n_train} rows (> {multiple:g}x); treat tail statistics "
            "with suspicion"
        )
    return None
