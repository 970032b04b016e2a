"""Closed-form power-scaled distributions and conjugate test models.

The conjugate models give exact perturbed posteriors for any pair of prior and
likelihood powers, plus exact samplers and in-process density evaluators.
Random numbers come from numpy's PCG64 generator; normal variates use its
ziggurat method, which is bit-stable across platforms for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .draws import DrawsMatrix
from .errors import InvalidResultingParameters
from .moment_match import Evaluation


def _check_alpha(alpha):
    if not (np.isfinite(alpha) and alpha > 0):
        raise InvalidResultingParameters(f"alpha must be positive, got {alpha}")


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidResultingParameters(f"Normal sigma must be positive, got {self.sigma}")

    def logpdf(self, x):
        return stats.norm.logpdf(x, self.mu, self.sigma)

    def power_scaled(self, alpha):
        _check_alpha(alpha)
        return Normal(self.mu, alpha**-0.5 * self.sigma)


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidResultingParameters(f"Exponential rate must be positive, got {self.rate}")

    def logpdf(self, x):
        return stats.expon.logpdf(x, scale=1.0 / self.rate)

    def power_scaled(self, alpha):
        _check_alpha(alpha)
        return Exponential(alpha * self.rate)


@dataclass(frozen=True)
class Beta:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidResultingParameters(f"Beta shapes must be positive, got ({self.a}, {self.b})")

    def logpdf(self, x):
        return stats.beta.logpdf(x, self.a, self.b)

    def power_scaled(self, alpha):
        _check_alpha(alpha)
        return Beta(alpha * self.a - alpha + 1, alpha * self.b - alpha + 1)


@dataclass(frozen=True)
class Gamma:
    """Gamma with shape ``a`` and rate ``b``."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidResultingParameters(f"Gamma parameters must be positive, got ({self.a}, {self.b})")

    def logpdf(self, x):
        return stats.gamma.logpdf(x, self.a, scale=1.0 / self.b)

    def power_scaled(self, alpha):
        _check_alpha(alpha)
        return Gamma(alpha * self.a - alpha + 1, alpha * self.b)


def power_scaled_form(dist, alpha: float):
    """Same-family distribution proportional to ``dist`` density raised to ``alpha``."""
    if alpha == 1:
        return dist
    return dist.power_scaled(alpha)


@dataclass(frozen=True)
class NormalNormal:
    """Normal prior on a location with known-variance normal observations."""

    mu0: float
    s0: float
    sigma: float
    data: tuple

    parameter_names = ("mu",)

    def __post_init__(self):
        object.__setattr__(self, "data", tuple(float(y) for y in np.atleast_1d(self.data)))
        if not (self.s0 > 0 and self.sigma > 0):
            raise InvalidResultingParameters("s0 and sigma must be positive")
        if not self.data:
            raise InvalidResultingParameters("need at least one observation")

    def prior(self) -> Normal:
        return Normal(self.mu0, self.s0)

    def perturbed_posterior(self, alpha_prior: float = 1.0, alpha_lik: float = 1.0) -> Normal:
        _check_alpha(alpha_prior)
        _check_alpha(alpha_lik)
        y = np.asarray(self.data)
        precision = alpha_prior / self.s0**2 + alpha_lik * len(y) / self.sigma**2
        mean = (alpha_prior * self.mu0 / self.s0**2 + alpha_lik * y.sum() / self.sigma**2) / precision
        return Normal(mean, precision**-0.5)

    def log_prior(self, theta):
        return stats.norm.logpdf(np.asarray(theta, dtype=float), self.mu0, self.s0)

    def log_lik(self, theta):
        theta = np.asarray(theta, dtype=float)
        y = np.asarray(self.data)
        return stats.norm.logpdf(y[None, :], theta[:, None], self.sigma)

    def _sample(self, post: Normal, S, rng):
        return post.mu + post.sigma * rng.standard_normal(S)

    def in_support(self, theta):
        return np.isfinite(theta)


@dataclass(frozen=True)
class BetaBernoulli:
    """Beta prior on a success probability with ``trials`` Bernoulli outcomes."""

    a: float
    b: float
    successes: int
    trials: int

    parameter_names = ("theta",)

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidResultingParameters("Beta prior shapes must be positive")
        if not 0 <= self.successes <= self.trials or self.trials < 1:
            raise InvalidResultingParameters("need trials >= successes >= 0 and trials >= 1")

    def prior(self) -> Beta:
        return Beta(self.a, self.b)

    def perturbed_posterior(self, alpha_prior: float = 1.0, alpha_lik: float = 1.0) -> Beta:
        _check_alpha(alpha_prior)
        _check_alpha(alpha_lik)
        scaled = power_scaled_form(self.prior(), alpha_prior)
        return Beta(scaled.a + alpha_lik * self.successes, scaled.b + alpha_lik * (self.trials - self.successes))

    def log_prior(self, theta):
        return stats.beta.logpdf(np.asarray(theta, dtype=float), self.a, self.b)

    def log_lik(self, theta):
        theta = np.asarray(theta, dtype=float)
        y = np.r_[np.ones(self.successes), np.zeros(self.trials - self.successes)]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(y[None, :] == 1, np.log(theta)[:, None], np.log1p(-theta)[:, None])

    def _sample(self, post: Beta, S, rng):
        return rng.beta(post.a, post.b, S)

    def in_support(self, theta):
        return (theta > 0) & (theta < 1)


ConjugateModel = NormalNormal | BetaBernoulli


def perturbed_posterior(model, alpha_prior: float = 1.0, alpha_lik: float = 1.0):
    return model.perturbed_posterior(alpha_prior, alpha_lik)


def sample_exact(model, alpha_prior: float, alpha_lik: float, S: int, seed: int) -> DrawsMatrix:
    """Exact iid draws from a perturbed posterior, annotated with the unscaled log densities."""
    if S < 2:
        raise ValueError("need S >= 2")
    post = model.perturbed_posterior(alpha_prior, alpha_lik)
    rng = np.random.Generator(np.random.PCG64(seed))
    theta = model._sample(post, int(S), rng)
    return DrawsMatrix(model.parameter_names, theta[:, None], model.log_prior(theta), model.log_lik(theta))


class BuiltinEvaluator:
    """In-process density evaluator for a conjugate model."""

    def __init__(self, model):
        self.model = model

    def __call__(self, points) -> Evaluation:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        theta = pts[:, 0]
        ok = self.model.in_support(theta)
        safe = np.where(ok, theta, 0.5)
        lp = np.where(ok, self.model.log_prior(safe), np.nan)
        ll = np.where(ok[:, None], self.model.log_lik(safe), np.nan)
        return Evaluation(lp, ll, ok & np.isfinite(lp) & np.all(np.isfinite(ll), axis=1))


def builtin_evaluator(model) -> BuiltinEvaluator:
    return BuiltinEvaluator(model)


_ORACLE_KEYS = {
    "normal-normal": {"mu0": float, "s0": float, "sigma": float, "y": float},
    "beta-bernoulli": {"a": float, "b": float, "k": int, "n": int},
}


def parse_oracle(spec: str):
    """Parse ``normal-normal:mu0=0,s0=2.5,sigma=1,y=10`` or ``beta-bernoulli:a=1,b=1,k=0,n=100``.

    ``y`` may repeat to give several observations.
    """
    name, _, rest = spec.partition(":")
    name = name.strip()
    if name not in _ORACLE_KEYS:
        raise ValueError(f"unknown oracle '{name}' (choose from {', '.join(_ORACLE_KEYS)})")
    kinds = _ORACLE_KEYS[name]
    values: dict[str, list] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, val = item.partition("=")
        if not sep or key not in kinds:
            raise ValueError(f"bad oracle option '{item}' for {name}")
        try:
            values.setdefault(key, []).append(kinds[key](val))
        except ValueError:
            raise ValueError(f"bad value for oracle option '{key}': {val!r}") from None
    if name == "normal-normal":
        return NormalNormal(
            _one(values, "mu0", 0.0), _one(values, "s0", 2.5), _one(values, "sigma", 1.0),
            tuple(values.get("y", [10.0])),
        )
    return BetaBernoulli(_one(values, "a", 1.0), _one(values, "b", 1.0), _one(values, "k", 0), _one(values, "n", 100))


def _one(values, key, default):
    got = values.get(key)
    if not got:
        return default
    if len(got) > 1:
        raise ValueError(f"oracle option '{key}' given more than once")
    return got[0]


def fit_model(model, S: int = 4000, seed: int = 0) -> DrawsMatrix:
    """Base-posterior draws, standing in for an MCMC fit of ``model``."""
    return sample_exact(model, 1.0, 1.0, S, seed)
