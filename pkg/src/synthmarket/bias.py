"""Coverage analysis for U-statistics computed on synthetic samples.

When a statistic U (sample mean, sample variance) is evaluated on draws from
a learned law whose parameter sits a_n away from the true value, the
probability that U lands within b of the truth is bracketed by a normal
center term and a decaying envelope term:

    center(a_n, b, n) = Phi((a_n + b) sqrt(n) / (r sigma1))
                      - Phi((a_n - b) sqrt(n) / (r sigma1)),
    envelope = c~(a_n, b, n) + c~(a_n, -b, n),
    c~(x, y, z) = c_hat / ((1 + |(y - x) sqrt(z) / (r sigma1)|)^beta
                           * sqrt(z - r + 1)),

with r the kernel degree and sigma1 the projection standard deviation of
the kernel. If |a_n| >= b the center collapses and coverage vanishes as the
sample grows: a persistent training bias larger than the tolerance is
eventually detected with probability one. c_hat is a user-supplied envelope
scale (default 1), so the envelope is shape-only unless calibrated.

Monte Carlo utilities estimate the same coverage empirically for normal (or
any user-sampled) laws, vectorized over trials in memory-bounded chunks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = [
    "UStatSpec",
    "BiasScenario",
    "u_statistic",
    "naive_u_statistic",
    "analytic_sigma1_normal",
    "jackknife_sigma1",
    "probability_bracket",
    "normal_mean_coverage",
    "monte_carlo_coverage",
    "coverage_table",
]

KERNEL_DEGREE = {"mean": 1, "variance": 2}


@dataclass(frozen=True)
class UStatSpec:
    """Kernel choice plus the constants entering the bracket."""

    kernel: str = "mean"
    sigma1: float = 1.0
    c_hat: float = 1.0
    beta: float = 3.0

    def __post_init__(self) -> None:
        if self.kernel not in KERNEL_DEGREE:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.sigma1 <= 0:
            raise ValueError("sigma1 must be positive")
        if not 2.0 < self.beta <= 3.0:
            raise ValueError(f"beta must be in (2, 3], got {self.beta}")
        if self.c_hat <= 0:
            raise ValueError("c_hat must be positive")

    @property
    def degree(self) -> int:
        return KERNEL_DEGREE[self.kernel]


@dataclass(frozen=True)
class BiasScenario:
    """Learned-minus-true parameter shift a_n, tolerance b, sample size n_tilde."""

    a_n: float
    b: float
    n_tilde: int

    def __post_init__(self) -> None:
        if self.b <= 0:
            raise ValueError("tolerance b must be positive")
        if self.n_tilde < 2:
            raise ValueError("n_tilde must be >= 2")


def u_statistic(sample, kernel: str) -> float:
    """U-statistic of the named kernel.

    "mean": g(x) = x, the sample mean. "variance": f(x1, x2) = (x1-x2)^2/2,
    whose U-statistic equals the unbiased (divisor n-1) sample variance.
    """
    x = np.asarray(sample, dtype=np.float64)
    if kernel == "mean":
        return float(x.mean())
    if kernel == "variance":
        if x.size < 2:
            raise ValueError("variance kernel needs n >= 2")
        return float(x.var(ddof=1))
    raise ValueError(f"unknown kernel {kernel!r}")


def naive_u_statistic(sample, kernel: str) -> float:
    """Average of the kernel over every index tuple; enumeration oracle.

    Quadratic in n; intended for small-sample cross-checks of u_statistic.
    """
    x = np.asarray(sample, dtype=np.float64)
    if kernel == "mean":
        return float(sum(x) / x.size)
    if kernel == "variance":
        pairs = list(itertools.combinations(range(x.size), 2))
        return float(sum((x[i] - x[j]) ** 2 / 2.0 for i, j in pairs) / len(pairs))
    raise ValueError(f"unknown kernel {kernel!r}")


def analytic_sigma1_normal(kernel: str, sigma: float) -> float:
    """Projection sd of the kernel under N(mu, sigma^2) data.

    mean: sigma. variance: Var((X-mu)^2)/4 = sigma^4/2, so sigma1 =
    sigma^2/sqrt(2).
    """
    if kernel == "mean":
        return float(sigma)
    if kernel == "variance":
        return float(sigma**2) / math.sqrt(2.0)
    raise ValueError(f"unknown kernel {kernel!r}")


def jackknife_sigma1(sample, kernel: str) -> float:
    """Leave-one-out estimate of sigma1 for laws without a closed form."""
    x = np.asarray(sample, dtype=np.float64)
    n = x.size
    r = KERNEL_DEGREE[kernel]
    if n <= r + 1:
        raise ValueError("sample too small for jackknife")
    loo = np.array([u_statistic(np.delete(x, i), kernel) for i in range(n)])
    var_u = (n - 1) / n * float(np.sum((loo - loo.mean()) ** 2))
    return math.sqrt(max(var_u * n, 0.0)) / r


def _c_tilde(x: float, y: float, z: int, spec: UStatSpec) -> float:
    r = spec.degree
    scale = abs((y - x) * math.sqrt(z) / (r * spec.sigma1))
    return spec.c_hat / ((1.0 + scale) ** spec.beta * math.sqrt(z - r + 1))


def probability_bracket(scenario: BiasScenario, spec: UStatSpec) -> tuple[float, float]:
    """(center, envelope) of the coverage probability bracket.

    The true coverage lies within center +/- envelope asymptotically; the
    envelope uses the user's c_hat, so only its shape is meaningful by
    default.
    """
    a, b, n = scenario.a_n, scenario.b, scenario.n_tilde
    r = spec.degree
    if n - r + 1 <= 0:
        raise ValueError(f"n_tilde={n} too small for kernel degree {r}")
    k = math.sqrt(n) / (r * spec.sigma1)
    center = stats.norm.cdf((a + b) * k) - stats.norm.cdf((a - b) * k)
    envelope = _c_tilde(a, b, n, spec) + _c_tilde(a, -b, n, spec)
    return float(center), float(envelope)


def normal_mean_coverage(a_n: float, b: float, n_tilde: int, sigma: float = 1.0) -> float:
    """Exact P(|U - theta| <= b) for the mean of n_tilde draws from
    N(theta + a_n, sigma^2): the center term with r=1, sigma1=sigma."""
    k = math.sqrt(n_tilde) / sigma
    return float(stats.norm.cdf((b - a_n) * k) - stats.norm.cdf((-b - a_n) * k))


def monte_carlo_coverage(
    sampler,
    theta_true: float,
    kernel: str,
    b: float,
    n_tilde: int,
    trials: int = 10000,
    seed: int = 0,
    chunk: int = 256,
) -> tuple[float, float]:
    """Fraction of trials where |U(sample) - theta_true| <= b, plus its
    binomial standard error.

    sampler(rng, size) -> 1-D array draws one synthetic sample from the
    learned law; samples are drawn in chunks of `chunk` trials at a time so
    memory stays bounded at chunk * n_tilde floats.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        take = min(chunk, trials - done)
        block = np.vstack([sampler(rng, n_tilde) for _ in range(take)])
        if kernel == "mean":
            u = block.mean(axis=1)
        elif kernel == "variance":
            u = block.var(axis=1, ddof=1)
        else:
            raise ValueError(f"unknown kernel {kernel!r}")
        hits += int(np.sum(np.abs(u - theta_true) <= b))
        done += take
    coverage = hits / trials
    se = math.sqrt(max(coverage * (1.0 - coverage), 1e-12) / trials)
    return coverage, se


def coverage_table(
    spec: UStatSpec,
    a_n: float,
    b: float,
    n_grid,
    sampler_factory=None,
    theta_true: float = 0.0,
    trials: int = 2000,
    seed: int = 0,
) -> list[dict]:
    """Bracket (and optional Monte Carlo) coverage over a sample-size grid.

    sampler_factory(n_tilde) -> sampler adds empirical columns when given.
    Returns one dict per n_tilde, ready for CSV serialization.
    """
    rows = []
    for i, n in enumerate(n_grid):
        scenario = BiasScenario(a_n=a_n, b=b, n_tilde=int(n))
        center, envelope = probability_bracket(scenario, spec)
        row = {
            "n_tilde": int(n),
            "center": center,
            "envelope": envelope,
            "lower": max(center - envelope, 0.0),
            "upper": min(center + envelope, 1.0),
        }
        if sampler_factory is not None:
            cov, se = monte_carlo_coverage(
                sampler_factory(int(n)), theta_true, spec.kernel, b, int(n),
                trials=trials, seed=seed + i,
            )
            row["mc_coverage"] = cov
            row["mc_se"] = se
        rows.append(row)
    return rows
