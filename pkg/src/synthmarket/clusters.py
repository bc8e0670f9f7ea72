"""Factor scaling, per-factor shape features, and Ward clustering.

Factor columns are rescaled by an eigenvalue power so that columns with very
different variances become comparable GAN targets: column i is multiplied by
lambda_i**(-exponent). Exponent 0.5 puts every column at unit variance
(factor i has sample variance lambda_i); exponent 1.0 reproduces the plain
1/lambda convention. Synthesis multiplies the same power back.

Each scaled factor is summarized by five shape features (skewness, excess
kurtosis, eigenvalue, volatility-clustering score, leverage score over 63
lags), the features are z-scored per dimension, and Ward-linkage
agglomerative clustering groups the factors so one GAN is trained per group
on the row-concatenated sliding windows of its members.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.cluster.hierarchy import fcluster, linkage

from .metrics import clustering_score, excess_kurtosis, skewness
from .serialize import dump_json
from .spectral import Decomposition

__all__ = [
    "FEATURE_NAMES",
    "FactorClustering",
    "scale_factors",
    "factor_features",
    "cluster_factors",
    "sliding_windows",
    "build_training_sets",
    "cluster_pipeline",
]

FEATURE_NAMES = ("skewness", "excess_kurtosis", "eigenvalue", "vol_clustering", "leverage")


def scale_factors(factors: np.ndarray, eigenvalues: np.ndarray, exponent: float = 0.5) -> np.ndarray:
    """Multiply factor column i by eigenvalues[i]**(-exponent)."""
    f = np.asarray(factors, dtype=np.float64)
    lam = np.asarray(eigenvalues, dtype=np.float64)[: f.shape[1]]
    if np.any(lam <= 0):
        raise ValueError("factor eigenvalues must be positive for scaling")
    return f * lam ** (-exponent)


def factor_features(scaled_column: np.ndarray, eigenvalue: float, max_lag: int = 63) -> np.ndarray:
    """Five shape features for one scaled factor column.

    Needs more rows than max_lag + 1 so the temporal scores are defined.
    """
    x = np.asarray(scaled_column, dtype=np.float64)
    if x.size < max_lag + 2:
        raise ValueError(f"need at least {max_lag + 2} rows, got {x.size}")
    return np.array(
        [
            skewness(x),
            excess_kurtosis(x),
            float(eigenvalue),
            clustering_score(x, "vol", max_lag),
            clustering_score(x, "leverage", max_lag),
        ]
    )


@dataclass(frozen=True)
class FactorClustering:
    """Assignment of factor indices to cluster labels 1..n_clusters.

    Labels are renumbered by first appearance so cluster 1 always contains
    factor 0; members(label) lists factor indices in ascending order.
    """

    assignments: tuple[int, ...]
    n_clusters: int
    exponent: float
    features: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignments", tuple(int(a) for a in self.assignments))
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        labels = set(self.assignments)
        if labels != set(range(1, self.n_clusters + 1)):
            raise ValueError(f"labels {sorted(labels)} are not 1..{self.n_clusters}")

    @property
    def m(self) -> int:
        return len(self.assignments)

    def members(self, label: int) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.assignments) if a == label)

    def to_json_dict(self) -> dict:
        return {
            "format": "factor-clustering/1",
            "assignments": list(self.assignments),
            "n_clusters": self.n_clusters,
            "exponent": self.exponent,
            "features": self.features.tolist(),
            "feature_names": list(FEATURE_NAMES),
        }

    def save(self, path) -> None:
        dump_json(self.to_json_dict(), path)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "FactorClustering":
        if obj.get("format") != "factor-clustering/1":
            raise ValueError(f"unsupported clustering format {obj.get('format')!r}")
        return cls(
            assignments=tuple(obj["assignments"]),
            n_clusters=int(obj["n_clusters"]),
            exponent=float(obj["exponent"]),
            features=np.array(obj["features"], dtype=np.float64),
        )

    @classmethod
    def load(cls, path) -> "FactorClustering":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def _zscore_columns(features: np.ndarray) -> np.ndarray:
    """Per-feature z-score; constant features map to zero."""
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    out = np.zeros_like(features)
    ok = std > 0
    out[:, ok] = (features[:, ok] - mean[ok]) / std[ok]
    return out


def cluster_factors(
    features: np.ndarray, n_clusters: int, exponent: float = 0.5
) -> FactorClustering:
    """Ward-linkage agglomerative clustering of z-scored factor features.

    Requires 1 <= n_clusters <= m. A single factor or n_clusters == m is
    handled without calling the linkage machinery. Ties in merge distance
    resolve by scipy's deterministic ordering; labels are then renumbered by
    first appearance (lowest factor index first) so output is deterministic.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != len(FEATURE_NAMES):
        raise ValueError(f"features must be m x {len(FEATURE_NAMES)}")
    m = feats.shape[0]
    if not 1 <= n_clusters <= m:
        raise ValueError(f"n_clusters={n_clusters} out of range for m={m}")
    if n_clusters == m:
        raw = np.arange(1, m + 1)
    elif n_clusters == 1:
        raw = np.ones(m, dtype=int)
    else:
        z = _zscore_columns(feats)
        tree = linkage(z, method="ward")
        raw = fcluster(tree, t=n_clusters, criterion="maxclust")
    remap: dict[int, int] = {}
    labels = []
    for a in raw:
        if int(a) not in remap:
            remap[int(a)] = len(remap) + 1
        labels.append(remap[int(a)])
    return FactorClustering(
        assignments=tuple(labels), n_clusters=n_clusters, exponent=exponent, features=feats
    )


def sliding_windows(column: np.ndarray, s: int) -> np.ndarray:
    """(n - s + 1) x s matrix of every contiguous window of length s."""
    x = np.asarray(column, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("column must be one-dimensional")
    if not 1 <= s <= x.size:
        raise ValueError(f"window length {s} out of range for n={x.size}")
    return sliding_window_view(x, s).copy()


def build_training_sets(
    scaled: np.ndarray, clustering: FactorClustering, s: int = 63
) -> dict[int, np.ndarray]:
    """Per-cluster GAN training matrices.

    For cluster label l with members (ascending factor index), stack each
    member's sliding windows vertically: |members| * (n - s + 1) rows of
    length s.
    """
    x = np.asarray(scaled, dtype=np.float64)
    if x.shape[1] != clustering.m:
        raise ValueError(
            f"scaled factors have {x.shape[1]} columns but clustering covers {clustering.m}"
        )
    out: dict[int, np.ndarray] = {}
    for label in range(1, clustering.n_clusters + 1):
        blocks = [sliding_windows(x[:, i], s) for i in clustering.members(label)]
        out[label] = np.vstack(blocks)
    return out


def cluster_pipeline(
    decomp: Decomposition, n_clusters: int, exponent: float = 0.5, s: int = 63
) -> tuple[np.ndarray, FactorClustering, dict[int, np.ndarray]]:
    """scale -> features -> cluster -> training sets, in one call."""
    lam = decomp.model.eigenvalues[: decomp.model.m]
    scaled = scale_factors(decomp.factors, lam, exponent)
    feats = np.vstack(
        [factor_features(scaled[:, i], lam[i]) for i in range(decomp.model.m)]
    )
    clustering = cluster_factors(feats, n_clusters, exponent)
    return scaled, clustering, build_training_sets(scaled, clustering, s)
