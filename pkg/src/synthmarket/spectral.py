"""Spectral factor extraction from standardized return panels.

The empirical correlation matrix of a standardized panel is eigendecomposed,
the number of signal factors m is chosen as the count of eigenvalues above
the Marchenko-Pastur upper edge for the panel's aspect ratio, and the panel
splits exactly into factor returns plus an orthogonal residual:

    C = (1/n) X'X,   C = P diag(lambda) P',
    F = X P[:, :m],  Z = X - F P[:, :m]',   X = F B' + Z with B = P[:, :m].

Eigenvalues are sorted descending and eigenvector signs are fixed so the
first nonzero component of each column is positive, which makes the
decomposition deterministic across runs and platforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .panel import StandardizedPanel
from .serialize import dump_json

__all__ = [
    "FactorModel",
    "Decomposition",
    "correlation_matrix",
    "mp_edge",
    "mp_density",
    "select_m",
    "fit_factor_model",
    "decompose",
    "orient_columns",
]


def correlation_matrix(values: np.ndarray) -> np.ndarray:
    """(1/n) X'X for standardized X; symmetrized to kill roundoff asymmetry."""
    x = np.asarray(values, dtype=np.float64)
    n = x.shape[0]
    c = x.T @ x / n
    return (c + c.T) / 2.0


def mp_edge(n: int, d: int, sigma2: float = 1.0) -> float:
    """Upper Marchenko-Pastur bulk edge sigma2 * (1 + sqrt(d/n))**2.

    Requires n >= d (aspect ratio q = n/d >= 1) and positive sigma2.
    """
    if d < 1 or n < d:
        raise ValueError(f"need n >= d >= 1, got n={n}, d={d}")
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    return sigma2 * (1.0 + math.sqrt(d / n)) ** 2


def mp_density(x, n: int, d: int, sigma2: float = 1.0) -> np.ndarray:
    """Marchenko-Pastur eigenvalue density for aspect ratio q = n/d >= 1.

    f(x) = q / (2 pi sigma2) * sqrt((l+ - x)(x - l-)) / x inside the bulk
    [l-, l+], zero outside. Used for spectrum-vs-noise-bulk plots.
    """
    if d < 1 or n < d:
        raise ValueError(f"need n >= d >= 1, got n={n}, d={d}")
    q = n / d
    lo = sigma2 * (1.0 - math.sqrt(1.0 / q)) ** 2
    hi = sigma2 * (1.0 + math.sqrt(1.0 / q)) ** 2
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    inside = (x > lo) & (x < hi) & (x > 0)
    xi = x[inside]
    out[inside] = q / (2.0 * np.pi * sigma2) * np.sqrt((hi - xi) * (xi - lo)) / xi
    return out


def select_m(eigenvalues: np.ndarray, edge: float) -> int:
    """Count of eigenvalues strictly above the bulk edge; must be >= 1."""
    m = int(np.sum(np.asarray(eigenvalues) > edge))
    if m < 1:
        raise ValueError(f"no eigenvalue above the noise edge {edge:.6g}")
    return m


def orient_columns(vectors: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's first nonzero entry is positive.

    "Nonzero" is relative to the column's largest magnitude (1e-12 cutoff) so
    the convention is stable under tiny roundoff perturbations.
    """
    v = np.array(vectors, dtype=np.float64, copy=True)
    for j in range(v.shape[1]):
        col = v[:, j]
        tol = 1e-12 * max(1.0, float(np.abs(col).max()))
        nz = np.nonzero(np.abs(col) > tol)[0]
        if nz.size and col[nz[0]] < 0:
            v[:, j] = -col
    return v


@dataclass(frozen=True)
class FactorModel:
    """Eigenstructure of a standardized panel plus the de-standardization data.

    eigenvalues: descending, length d. eigenvectors: d x d, column i pairs
    with eigenvalues[i]. m signal factors; loadings B = eigenvectors[:, :m].
    mu/sigma are the per-ticker mean and population std of the training panel,
    carried so synthetic standardized panels can be mapped to return units.
    """

    tickers: tuple[str, ...]
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    m: int
    mu: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    n_train: int
    edge: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "tickers", tuple(self.tickers))
        for name in ("eigenvalues", "eigenvectors", "mu", "sigma"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        d = len(self.tickers)
        if self.eigenvalues.shape != (d,) or self.eigenvectors.shape != (d, d):
            raise ValueError("eigenstructure shapes do not match ticker count")
        if not 1 <= self.m <= d:
            raise ValueError(f"m={self.m} out of range for d={d}")
        if np.any(np.diff(self.eigenvalues) > 1e-12):
            raise ValueError("eigenvalues must be sorted descending")

    @property
    def d(self) -> int:
        return len(self.tickers)

    @property
    def loadings(self) -> np.ndarray:
        """d x m loading matrix B (leading eigenvectors)."""
        return self.eigenvectors[:, : self.m]

    def to_json_dict(self) -> dict:
        return {
            "format": "factor-model/1",
            "tickers": list(self.tickers),
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenvectors": self.eigenvectors.tolist(),
            "m": self.m,
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "n_train": self.n_train,
            "edge": self.edge,
        }

    def save(self, path) -> None:
        dump_json(self.to_json_dict(), path)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "FactorModel":
        if obj.get("format") != "factor-model/1":
            raise ValueError(f"unsupported factor model format {obj.get('format')!r}")
        return cls(
            tickers=tuple(obj["tickers"]),
            eigenvalues=np.array(obj["eigenvalues"], dtype=np.float64),
            eigenvectors=np.array(obj["eigenvectors"], dtype=np.float64),
            m=int(obj["m"]),
            mu=np.array(obj["mu"], dtype=np.float64),
            sigma=np.array(obj["sigma"], dtype=np.float64),
            n_train=int(obj["n_train"]),
            edge=float(obj["edge"]),
        )

    @classmethod
    def load(cls, path) -> "FactorModel":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class Decomposition:
    """F (n x m factor returns), Z (n x d residuals) and the model they came from."""

    factors: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    model: FactorModel = field(repr=False)


def fit_factor_model(panel: StandardizedPanel, sigma2: float = 1.0) -> FactorModel:
    """Correlation eigendecomposition with Marchenko-Pastur factor selection."""
    corr = correlation_matrix(panel.values)
    vals, vecs = np.linalg.eigh(corr)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = orient_columns(vecs[:, order])
    edge = mp_edge(panel.n, panel.d, sigma2)
    m = select_m(vals, edge)
    return FactorModel(
        tickers=panel.tickers,
        eigenvalues=vals,
        eigenvectors=vecs,
        m=m,
        mu=panel.mu,
        sigma=panel.sigma,
        n_train=panel.n,
        edge=edge,
    )


def decompose(panel: StandardizedPanel, model: FactorModel) -> Decomposition:
    """Project onto the leading eigenvectors: F = X B, Z = X - F B'."""
    if panel.tickers != model.tickers:
        raise ValueError("panel tickers do not match the factor model")
    beta = model.loadings
    factors = panel.values @ beta
    residuals = panel.values - factors @ beta.T
    return Decomposition(factors=factors, residuals=residuals, model=model)
