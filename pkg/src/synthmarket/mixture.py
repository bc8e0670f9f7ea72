"""Two-component Student-t mixtures for residual return columns.

Density

    f(x) = p * f_t(x | mu1, s1, nu1) + (1 - p) * f_t(x | mu2, s2, nu2)

where f_t is the location-scale Student-t. Degrees of freedom live in
(1, 200]; a component with nu above the cap (stored as inf) is evaluated as
a Gaussian. Fitting is EM (ECM for the t updates: latent scale weights for
location/scale, then a bracketed root of the digamma score equation for nu),
run in one of three modes: "two_t", "single_t" (p fixed at 1), "gaussian"
(closed-form mean/std). The log-likelihood trace is recorded and is
non-decreasing up to roundoff; multiple seeded restarts keep the best final
likelihood. Sampling goes through the inverse CDF, solved by bisection
between the component quantiles, so synthetic draws are deterministic
functions of the input uniforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

__all__ = ["MixtureParams", "FitResult", "pdf", "cdf", "inverse_cdf", "sample", "fit_em"]

NU_MAX = 200.0
NU_MIN = 1.0 + 1e-6


@dataclass(frozen=True)
class MixtureParams:
    """Mixture weight and the two location/scale/dof triples.

    nu may be math.inf to denote an exactly Gaussian component; finite nu
    must lie in (1, 200].
    """

    p: float
    mu1: float
    s1: float
    nu1: float
    mu2: float
    s2: float
    nu2: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0,1], got {self.p}")
        for tag, s, nu in (("1", self.s1, self.nu1), ("2", self.s2, self.nu2)):
            if s <= 0:
                raise ValueError(f"s{tag} must be positive, got {s}")
            if not (nu > 1.0 and (nu <= NU_MAX or math.isinf(nu))):
                raise ValueError(f"nu{tag} must be in (1, {NU_MAX}] or inf, got {nu}")

    @classmethod
    def single(cls, mu: float, s: float, nu: float) -> "MixtureParams":
        return cls(p=1.0, mu1=mu, s1=s, nu1=nu, mu2=mu, s2=s, nu2=nu)

    def to_json_dict(self) -> dict:
        def enc(nu: float):
            return None if math.isinf(nu) else nu

        return {
            "p": self.p,
            "mu1": self.mu1, "s1": self.s1, "nu1": enc(self.nu1),
            "mu2": self.mu2, "s2": self.s2, "nu2": enc(self.nu2),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "MixtureParams":
        def dec(v):
            return math.inf if v is None else float(v)

        return cls(
            p=float(obj["p"]),
            mu1=float(obj["mu1"]), s1=float(obj["s1"]), nu1=dec(obj["nu1"]),
            mu2=float(obj["mu2"]), s2=float(obj["s2"]), nu2=dec(obj["nu2"]),
        )


def _component_pdf(x: np.ndarray, mu: float, s: float, nu: float) -> np.ndarray:
    if math.isinf(nu) or nu > NU_MAX:
        return stats.norm.pdf(x, loc=mu, scale=s)
    return stats.t.pdf((x - mu) / s, df=nu) / s


def _component_logpdf(x: np.ndarray, mu: float, s: float, nu: float) -> np.ndarray:
    if math.isinf(nu) or nu > NU_MAX:
        return stats.norm.logpdf(x, loc=mu, scale=s)
    return stats.t.logpdf((x - mu) / s, df=nu) - math.log(s)


def _component_cdf(x: np.ndarray, mu: float, s: float, nu: float) -> np.ndarray:
    if math.isinf(nu) or nu > NU_MAX:
        return stats.norm.cdf(x, loc=mu, scale=s)
    return stats.t.cdf((x - mu) / s, df=nu)


def _component_ppf(u: np.ndarray, mu: float, s: float, nu: float) -> np.ndarray:
    if math.isinf(nu) or nu > NU_MAX:
        return stats.norm.ppf(u, loc=mu, scale=s)
    return mu + s * stats.t.ppf(u, df=nu)


def pdf(x, params: MixtureParams) -> np.ndarray | float:
    xx = np.asarray(x, dtype=np.float64)
    out = params.p * _component_pdf(xx, params.mu1, params.s1, params.nu1)
    if params.p < 1.0:
        out = out + (1.0 - params.p) * _component_pdf(xx, params.mu2, params.s2, params.nu2)
    return float(out) if np.ndim(x) == 0 else out


def cdf(x, params: MixtureParams) -> np.ndarray | float:
    xx = np.asarray(x, dtype=np.float64)
    out = params.p * _component_cdf(xx, params.mu1, params.s1, params.nu1)
    if params.p < 1.0:
        out = out + (1.0 - params.p) * _component_cdf(xx, params.mu2, params.s2, params.nu2)
    return float(out) if np.ndim(x) == 0 else out


def inverse_cdf(u, params: MixtureParams) -> np.ndarray | float:
    """Quantile function of the mixture.

    Pure components use the exact Student-t/Gaussian quantile. A proper
    mixture is solved by bisection: the mixture quantile always lies between
    the two component quantiles, which gives a rigorous starting bracket.
    Accuracy: |cdf(result) - u| <= 1e-10.
    """
    scalar = np.ndim(u) == 0
    uu = np.atleast_1d(np.asarray(u, dtype=np.float64)).copy()
    if np.any((uu <= 0.0) | (uu >= 1.0)):
        raise ValueError("u must lie strictly inside (0, 1)")
    if params.p >= 1.0:
        x = _component_ppf(uu, params.mu1, params.s1, params.nu1)
    elif params.p <= 0.0:
        x = _component_ppf(uu, params.mu2, params.s2, params.nu2)
    else:
        q1 = _component_ppf(uu, params.mu1, params.s1, params.nu1)
        q2 = _component_ppf(uu, params.mu2, params.s2, params.nu2)
        lo = np.minimum(q1, q2)
        hi = np.maximum(q1, q2)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = cdf(mid, params) < uu
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < 1e-14 * max(1.0, float(np.max(np.abs(hi)))):
                break
        x = 0.5 * (lo + hi)
    return float(x[0]) if scalar else x


def sample(params: MixtureParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws; deterministic given the generator state."""
    u = rng.uniform(size=size)
    # uniform() can return 0.0; nudge into the open interval
    u = np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
    return np.asarray(inverse_cdf(u, params))


@dataclass
class FitResult:
    params: MixtureParams
    loglik_trace: list[float]
    converged: bool
    mode: str
    n_iter: int

    @property
    def loglik(self) -> float:
        return self.loglik_trace[-1]


def _loglik(x: np.ndarray, params: MixtureParams) -> float:
    l1 = _component_logpdf(x, params.mu1, params.s1, params.nu1) + (
        math.log(params.p) if params.p > 0 else -math.inf
    )
    if params.p >= 1.0:
        return float(np.sum(l1))
    l2 = _component_logpdf(x, params.mu2, params.s2, params.nu2) + math.log(1.0 - params.p)
    return float(np.sum(np.logaddexp(l1, l2)))


def _solve_nu(c: float) -> float:
    """Root of -digamma(nu/2) + log(nu/2) + 1 + c = 0 on (NU_MIN, NU_MAX].

    The left side is strictly decreasing in nu, so the constrained maximizer
    is the bracket endpoint when no interior root exists.
    """

    def phi(nu: float) -> float:
        return -special.digamma(nu / 2.0) + math.log(nu / 2.0) + 1.0 + c

    if phi(NU_MAX) > 0.0:
        return NU_MAX
    if phi(NU_MIN) < 0.0:
        return NU_MIN
    return float(optimize.brentq(phi, NU_MIN, NU_MAX, xtol=1e-10))


def _t_weights(x: np.ndarray, mu: float, s: float, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """E[u] and E[log u] of the latent scale given data, at the current params."""
    if math.isinf(nu):
        w = np.ones_like(x)
        return w, np.zeros_like(x)
    delta2 = ((x - mu) / s) ** 2
    w = (nu + 1.0) / (nu + delta2)
    logw = special.digamma((nu + 1.0) / 2.0) - np.log((nu + delta2) / 2.0)
    return w, logw


def _t_component_update(
    x: np.ndarray, r: np.ndarray, mu: float, s: float, nu: float, update_nu: bool
) -> tuple[float, float, float]:
    """One ECM update of (mu, s, nu) for a component with responsibilities r."""
    w, logw = _t_weights(x, mu, s, nu)
    rw = r * w
    denom = float(np.sum(rw))
    n_eff = float(np.sum(r))
    mu_new = float(np.sum(rw * x)) / denom
    s2 = float(np.sum(rw * (x - mu_new) ** 2)) / n_eff
    s_new = math.sqrt(max(s2, 1e-24))
    if update_nu and not math.isinf(nu):
        c = float(np.sum(r * (logw - w))) / n_eff
        nu_new = _solve_nu(c)
    else:
        nu_new = nu
    return mu_new, s_new, nu_new


def _kmeans_split(x: np.ndarray, c0: float, c1: float, iters: int = 50) -> np.ndarray:
    """1-D 2-means labels from initial centroids; deterministic."""
    for _ in range(iters):
        mid = 0.5 * (c0 + c1)
        lower = x <= mid
        if lower.all() or (~lower).all():
            break
        n0, n1 = float(np.mean(x[lower])), float(np.mean(x[~lower]))
        if n0 == c0 and n1 == c1:
            break
        c0, c1 = n0, n1
    return (x > 0.5 * (c0 + c1)).astype(np.float64)


def _moment_nu(x: np.ndarray) -> float:
    """Method-of-moments start: excess kurtosis k of a t is 6/(nu-4)."""
    c = x - x.mean()
    m2 = float(np.mean(c**2))
    if m2 <= 0:
        return 10.0
    k = float(np.mean(c**4)) / m2**2 - 3.0
    if k <= 0.05:
        return 50.0
    return min(max(4.0 + 6.0 / k, 2.1), NU_MAX)


def fit_em(
    x,
    mode: str = "single_t",
    n_restarts: int = 5,
    max_iter: int = 500,
    tol: float = 1e-8,
    seed: int = 0,
    min_n: int = 50,
) -> FitResult:
    """Maximum-likelihood mixture fit by EM.

    mode: "two_t" (free weight, both components t), "single_t" (one t),
    "gaussian" (closed form, nu = inf). Restarts perturb the initialization;
    the best final log-likelihood wins. Raises for n < min_n or a constant
    sample.
    """
    data = np.asarray(x, dtype=np.float64).ravel()
    n = data.size
    if n < min_n:
        raise ValueError(f"need at least {min_n} observations, got {n}")
    sd = float(data.std())
    if sd == 0.0:
        raise ValueError("sample is constant; mixture fit undefined")
    mean = float(data.mean())

    if mode == "gaussian":
        params = MixtureParams.single(mean, sd, math.inf)
        return FitResult(params, [_loglik(data, params)], True, mode, 0)
    if mode not in ("single_t", "two_t"):
        raise ValueError(f"unknown mode {mode!r}")

    rng = np.random.default_rng(seed)
    best: FitResult | None = None
    for restart in range(n_restarts):
        if mode == "single_t":
            jitter = 1.0 if restart == 0 else float(rng.uniform(0.5, 2.0))
            mu1, s1 = mean, sd * jitter
            nu1 = _moment_nu(data) if restart == 0 else float(rng.uniform(2.5, 50.0))
            params = MixtureParams.single(mu1, s1, nu1)
        else:
            if restart == 0:
                c0, c1 = np.quantile(data, 0.25), np.quantile(data, 0.75)
            else:
                c0, c1 = rng.choice(data, size=2, replace=False)
            labels = _kmeans_split(data, min(c0, c1), max(c0, c1))
            if labels.std() == 0.0:  # degenerate split: fall back to halves around the median
                labels = (data > np.median(data)).astype(np.float64)
            lo, hi = data[labels == 0], data[labels == 1]
            if lo.size < 2 or hi.size < 2:
                continue
            params = MixtureParams(
                p=float(lo.size) / n,
                mu1=float(lo.mean()), s1=max(float(lo.std()), 1e-6 * sd), nu1=_moment_nu(lo),
                mu2=float(hi.mean()), s2=max(float(hi.std()), 1e-6 * sd), nu2=_moment_nu(hi),
            )
        result = _em_loop(data, params, mode, max_iter, tol)
        if result is None:
            continue
        if best is None or result.loglik > best.loglik:
            best = result
    if best is None:
        raise RuntimeError("every EM restart collapsed; sample unsuitable for this mode")
    return best


def _em_loop(
    data: np.ndarray, params: MixtureParams, mode: str, max_iter: int, tol: float
) -> FitResult | None:
    trace = [_loglik(data, params)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if mode == "single_t":
            r = np.ones_like(data)
            mu1, s1, nu1 = _t_component_update(
                data, r, params.mu1, params.s1, params.nu1, update_nu=True
            )
            params = MixtureParams.single(mu1, s1, nu1)
        else:
            log1 = _component_logpdf(data, params.mu1, params.s1, params.nu1) + math.log(
                max(params.p, 1e-300)
            )
            log2 = _component_logpdf(data, params.mu2, params.s2, params.nu2) + math.log(
                max(1.0 - params.p, 1e-300)
            )
            norm = np.logaddexp(log1, log2)
            r1 = np.exp(log1 - norm)
            r2 = 1.0 - r1
            if r1.sum() < 1e-8 or r2.sum() < 1e-8:
                return None  # a component died; let the restart loop try again
            mu1, s1, nu1 = _t_component_update(
                data, r1, params.mu1, params.s1, params.nu1, update_nu=True
            )
            mu2, s2, nu2 = _t_component_update(
                data, r2, params.mu2, params.s2, params.nu2, update_nu=True
            )
            params = MixtureParams(
                p=float(np.mean(r1)), mu1=mu1, s1=s1, nu1=nu1, mu2=mu2, s2=s2, nu2=nu2
            )
        ll = _loglik(data, params)
        trace.append(ll)
        if abs(ll - trace[-2]) < tol * (1.0 + abs(ll)):
            converged = True
            break
    return FitResult(params, trace, converged, mode, it)
