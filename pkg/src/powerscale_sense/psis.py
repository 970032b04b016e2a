"""Pareto smoothed importance sampling.

The upper tail of the importance weights is modelled with a generalized
Pareto distribution (GPD) fitted by the Zhang & Stephens (2009) profile
estimator, then replaced by the fitted quantiles.  The GPD shape estimate
``khat`` doubles as the reliability diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .draws import _frozen
from .errors import DegenerateTail
from .powerscale import LogWeights

KHAT_THRESHOLD = 0.7
MIN_DRAWS = 25


@dataclass(frozen=True)
class GpdFit:
    khat: float
    sigma: float
    tail_size: int


@dataclass(frozen=True, eq=False)
class SmoothedWeights:
    log_w: np.ndarray
    khat: float
    reliable: bool
    reason: str = ""

    def __post_init__(self):
        object.__setattr__(self, "log_w", _frozen(self.log_w))

    @property
    def estimable(self) -> bool:
        return bool(np.isfinite(self.khat))

    def normalized(self) -> np.ndarray:
        return np.exp(self.log_w - logsumexp(self.log_w))


def tail_size(n_draws: int) -> int:
    return int(math.ceil(min(0.2 * n_draws, 3.0 * math.sqrt(n_draws))))


def fit_gpd_tail(excesses, min_grid_points: int = 30, prior_strength: float = 3.0) -> GpdFit:
    """Estimate GPD shape and scale from non-negative threshold excesses.

    Profile posterior mean over a fixed grid of ``theta = -k / sigma`` values,
    followed by the weakly informative shrinkage of ``k`` toward 0.5 used for
    importance-weight tails.
    """
    x = np.sort(np.asarray(excesses, dtype=float))
    n = len(x)
    if n < 5:
        raise DegenerateTail(f"need at least 5 excesses, got {n}")
    if not np.all(np.isfinite(x)) or x[0] < 0:
        raise DegenerateTail("excesses must be finite and non-negative")
    if x[-1] - x[0] <= 0:
        raise DegenerateTail("all excesses are equal")
    m = min_grid_points + int(math.floor(math.sqrt(n)))
    j = np.arange(1, m + 1)
    first_quartile = x[int(math.floor(n / 4 + 0.5)) - 1]
    if first_quartile <= 0:
        first_quartile = x[x > 0][0]
    theta = 1.0 / x[-1] + (1.0 - np.sqrt(m / (j - 0.5))) / prior_strength / first_quartile
    k_grid = np.log1p(-theta[:, None] * x[None, :]).mean(axis=1)
    profile = n * (np.log(-theta / k_grid) - k_grid - 1.0)
    profile = np.where(np.isfinite(profile), profile, -np.inf)
    w = np.exp(profile - logsumexp(profile))
    theta_hat = float(np.sum(theta * w))
    k = float(np.mean(np.log1p(-theta_hat * x)))
    sigma = -k / theta_hat
    k = (n * k + 10 * 0.5) / (n + 10)
    if not (np.isfinite(k) and np.isfinite(sigma) and sigma > 0):
        raise DegenerateTail("GPD fit did not produce a finite estimate")
    return GpdFit(khat=k, sigma=float(sigma), tail_size=n)


def gpd_quantile(p, k: float, sigma: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if abs(k) < 1e-12:
        return -sigma * np.log1p(-p)
    return sigma * np.expm1(-k * np.log1p(-p)) / k


def psis_smooth(lw, threshold: float = KHAT_THRESHOLD) -> SmoothedWeights:
    """Pareto-smooth log importance weights.

    Accepts a :class:`LogWeights` or a plain array.  Fewer than 25 draws or a
    tail without variation pass through untouched with ``khat = nan`` and
    ``reliable = False``.
    """
    raw = np.asarray(lw.log_w if isinstance(lw, LogWeights) else lw, dtype=float)
    S = len(raw)
    if S < MIN_DRAWS:
        return SmoothedWeights(raw.copy(), float("nan"), False, "too few draws")
    shift = raw.max()
    x = raw - shift
    M = tail_size(S)
    order = np.argsort(x, kind="stable")
    tail_idx = order[-M:]
    cutoff = max(x[order[-M - 1]], np.log(np.finfo(float).tiny))
    exp_cutoff = np.exp(cutoff)
    excess = np.exp(x[tail_idx]) - exp_cutoff
    if excess[-1] - excess[0] <= 0:
        return SmoothedWeights(raw.copy(), float("nan"), False, "no tail variation")
    try:
        fit = fit_gpd_tail(excess)
    except DegenerateTail as err:
        return SmoothedWeights(raw.copy(), float("nan"), False, str(err))
    probs = (np.arange(1, M + 1) - 0.5) / M
    q = gpd_quantile(probs, fit.khat, fit.sigma) + exp_cutoff
    smoothed = raw.copy()
    # tail_idx is in ascending raw order, matching ascending quantiles
    smoothed[tail_idx] = np.minimum(np.log(q), 0.0) + shift
    reliable = fit.khat <= threshold
    reason = "" if reliable else f"khat {fit.khat:.2f} > {threshold}"
    return SmoothedWeights(smoothed, fit.khat, bool(reliable), reason)
