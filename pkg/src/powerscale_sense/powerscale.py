"""Power-scaling importance weights, alpha grids, resampling and whitening."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .draws import DrawsMatrix, _frozen, _normalize
from .errors import InvalidGrid, SingularCovariance

COMPONENTS = ("prior", "likelihood")


@dataclass(frozen=True)
class PowerScaleSpec:
    component: str
    alpha: float

    def __post_init__(self):
        if self.component not in COMPONENTS:
            raise ValueError(f"component must be one of {COMPONENTS}, got '{self.component}'")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class AlphaGrid:
    lower: float = 0.5
    upper: float = 2.0
    count: int = 11

    def __post_init__(self):
        if not (0.0 < self.lower < 1.0 < self.upper) or not np.isfinite(self.upper):
            raise InvalidGrid(
                f"need 0 < lower < 1 < upper, got lower={self.lower}, upper={self.upper}"
            )
        if int(self.count) != self.count or self.count < 2:
            raise InvalidGrid(f"count must be an integer >= 2, got {self.count}")


@dataclass(frozen=True, eq=False)
class LogWeights:
    spec: PowerScaleSpec
    log_w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "log_w", _frozen(self.log_w))


def component_log_density(draws: DrawsMatrix, component: str) -> np.ndarray:
    """Per-draw log density of the component being power-scaled."""
    if component == "prior":
        return draws.log_prior
    if component == "likelihood":
        return draws.joint_log_lik
    raise ValueError(f"component must be one of {COMPONENTS}, got '{component}'")


def log_weights(draws: DrawsMatrix, spec: PowerScaleSpec) -> LogWeights:
    """log w = (alpha - 1) * log p_comp(theta); only the scaled component matters."""
    lc = component_log_density(draws, spec.component)
    return LogWeights(spec, (spec.alpha - 1.0) * lc)


def alpha_grid(grid: AlphaGrid) -> list[float]:
    """Alphas equally spaced in log2 between the grid ends, with alpha = 1 removed."""
    exps = np.linspace(np.log2(grid.lower), np.log2(grid.upper), int(grid.count))
    alphas = np.exp2(exps)
    alphas[0], alphas[-1] = grid.lower, grid.upper
    return [float(a) for a in alphas if abs(a - 1.0) > 1e-9]


def importance_resample(draws: DrawsMatrix, w, n: int, seed: int) -> DrawsMatrix:
    """Systematic resampling of ``n`` rows with probability proportional to ``w``."""
    wn = _normalize(w)
    if len(wn) != draws.n_draws:
        raise ValueError(f"{len(wn)} weights for {draws.n_draws} draws")
    rng = np.random.default_rng(seed)
    u = (rng.uniform() + np.arange(n)) / n
    cdf = np.cumsum(wn)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, draws.n_draws - 1)
    return draws.take(idx)


@dataclass(frozen=True, eq=False)
class WhiteningTransform:
    center: np.ndarray
    transform: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(self.center))
        object.__setattr__(self, "transform", _frozen(self.transform))

    def apply(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.center) @ self.transform.T

    def invert(self, whitened) -> np.ndarray:
        return np.linalg.solve(self.transform, np.asarray(whitened, dtype=float).T).T + self.center


def whiten(draws: DrawsMatrix, rtol: float = 1e-12) -> tuple[DrawsMatrix, WhiteningTransform]:
    """ZCA whitening: zero mean and identity sample covariance.

    The symmetric inverse square root keeps each whitened component as close
    as possible to the original parameter with the same index.  Names become
    ``C1`` .. ``CD``; the log density columns are carried unchanged.
    """
    x = draws.values
    center = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    evals, evecs = np.linalg.eigh(cov)
    if evals.min() <= rtol * max(evals.max(), 0.0) or evals.max() <= 0:
        raise SingularCovariance("sample covariance of the draws is singular")
    transform = (evecs / np.sqrt(evals)) @ evecs.T
    wt = WhiteningTransform(center, transform)
    names = tuple(f"C{j + 1}" for j in range(draws.n_params))
    return draws.with_values(wt.apply(x), names), wt
