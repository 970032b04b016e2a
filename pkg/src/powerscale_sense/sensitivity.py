"""Perturbed-posterior sequences, quantity sensitivity and diagnosis."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .divergence import cjs_dist, d_cjs, pooled_ecdfs
from .draws import (
    DrawsMatrix,
    Quantity,
    WeightedECDF,
    effective_sample_size,
    validate_draws,
    weighted_ecdf,
    weighted_moments,
    weighted_quantile,
)
from .errors import LengthMismatch, UnknownParameter
from .moment_match import DensityEvaluator, moment_match
from .powerscale import (
    COMPONENTS,
    AlphaGrid,
    PowerScaleSpec,
    alpha_grid,
    component_log_density,
    log_weights,
)
from .psis import KHAT_THRESHOLD, SmoothedWeights, psis_smooth

DEFAULT_DELTA = 0.01
DEFAULT_THRESHOLD = 0.05
LN2 = float(np.log(2.0))


class Diagnosis(str, enum.Enum):
    PRIOR_DATA_CONFLICT = "prior_data_conflict"
    WEAK_LIKELIHOOD = "weak_likelihood"
    LIKELIHOOD_DOMINATION = "likelihood_domination"
    INSENSITIVE = "insensitive"

    @property
    def comment(self) -> str:
        """Report wording; the unproblematic patterns carry no comment."""
        return _COMMENTS[self]


_COMMENTS = {
    Diagnosis.PRIOR_DATA_CONFLICT: "prior-data conflict",
    Diagnosis.WEAK_LIKELIHOOD: "weak likelihood",
    Diagnosis.LIKELIHOOD_DOMINATION: "",
    Diagnosis.INSENSITIVE: "",
}


def diagnose(prior_s: float, lik_s: float, threshold: float = DEFAULT_THRESHOLD) -> Diagnosis:
    prior_hit = prior_s >= threshold
    lik_hit = lik_s >= threshold
    if prior_hit and lik_hit:
        return Diagnosis.PRIOR_DATA_CONFLICT
    if prior_hit:
        return Diagnosis.WEAK_LIKELIHOOD
    if lik_hit:
        return Diagnosis.LIKELIHOOD_DOMINATION
    return Diagnosis.INSENSITIVE


@dataclass(eq=False)
class PerturbedPosterior:
    """Base (or moment-matched) draws with smoothed weights for one perturbation."""

    spec: PowerScaleSpec
    weights: SmoothedWeights
    draws: DrawsMatrix
    method: str = "psis"
    _ecdfs: dict = field(default_factory=dict, repr=False)

    @property
    def alpha(self) -> float:
        return self.spec.alpha

    @property
    def component(self) -> str:
        return self.spec.component

    @property
    def exact(self) -> bool:
        """All weights equal: the perturbation leaves the posterior unchanged."""
        lw = self.weights.log_w
        return bool(np.all(lw == lw[0]))

    @property
    def reliable(self) -> bool:
        return self.weights.reliable or self.exact

    @property
    def normalized_weights(self) -> np.ndarray:
        return self.weights.normalized()

    def ecdf(self, parameter: str) -> WeightedECDF:
        if parameter not in self._ecdfs:
            self._ecdfs[parameter] = weighted_ecdf(self.draws.column(parameter), self.normalized_weights)
        return self._ecdfs[parameter]


def perturb(
    draws: DrawsMatrix,
    spec: PowerScaleSpec,
    stabilize: str = "psis",
    evaluator: Optional[DensityEvaluator] = None,
    khat_threshold: float = KHAT_THRESHOLD,
) -> PerturbedPosterior:
    """Smoothed weights for one perturbation, moment matching if asked and needed."""
    if stabilize not in ("psis", "iwmm"):
        raise ValueError(f"stabilize must be 'psis' or 'iwmm', got '{stabilize}'")
    sm = psis_smooth(log_weights(draws, spec), khat_threshold)
    if stabilize == "iwmm" and evaluator is not None and not sm.reliable:
        mm = moment_match(draws, spec, evaluator, khat_threshold)
        if mm.iterations > 0:
            return PerturbedPosterior(spec, mm.smoothed(), draws.with_values(mm.draws), "iwmm")
    return PerturbedPosterior(spec, sm, draws, "psis")


def powerscale_sequence(
    draws: DrawsMatrix,
    component: str,
    grid: AlphaGrid = AlphaGrid(),
    stabilize: str = "psis",
    evaluator: Optional[DensityEvaluator] = None,
    khat_threshold: float = KHAT_THRESHOLD,
) -> list[PerturbedPosterior]:
    validate_draws(draws)
    return [
        perturb(draws, PowerScaleSpec(component, a), stabilize, evaluator, khat_threshold)
        for a in alpha_grid(grid)
    ]


def _ecdf_quantile_mcse(ecdf: WeightedECDF, p: float, ess: float) -> float:
    # half-width of the quantile interval from p -/+ one binomial sd
    half = np.sqrt(p * (1.0 - p) / ess)
    lo = weighted_quantile(ecdf, max(p - half, 1e-12))
    hi = weighted_quantile(ecdf, min(p + half, 1.0 - 1e-12))
    return float((hi - lo) / 2.0)


def weighted_quantity(x, w, q: Quantity) -> tuple[float, float]:
    """Estimate of ``q`` under weights ``w`` with its Monte Carlo standard error."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    ess = effective_sample_size(w)
    mean, sd = weighted_moments(x, w)
    if q.kind == "mean":
        return mean, sd / np.sqrt(ess)
    if q.kind in ("variance", "sd"):
        _, sd_sq = weighted_moments((x - mean) ** 2, w)
        var_mcse = sd_sq / np.sqrt(ess)
        if q.kind == "variance":
            return sd**2, var_mcse
        return sd, var_mcse / (2.0 * sd) if sd > 0 else 0.0
    if q.kind in ("median", "quantile"):
        p = 0.5 if q.kind == "median" else q.p
        ecdf = weighted_ecdf(x, w)
        return weighted_quantile(ecdf, p), _ecdf_quantile_mcse(ecdf, p, ess)
    raise ValueError(f"'{q.kind}' is not a scalar quantity")


def quantity_estimate(pp: PerturbedPosterior, parameter: str, q: Quantity) -> tuple[float, float]:
    """Self-normalized estimate and MCSE; the mean's MCSE is weighted sd / sqrt(ESS)."""
    if parameter not in pp.draws.parameter_names:
        raise UnknownParameter(f"unknown parameter '{parameter}'")
    return weighted_quantity(pp.draws.column(parameter), pp.normalized_weights, q)


def quantity_derivative(h_values, log_comp) -> float:
    """d E[h] / d log2(alpha) at alpha = 1: ln 2 times the 1/S covariance of h and log p_comp."""
    h = np.asarray(h_values, dtype=float)
    lc = np.asarray(log_comp, dtype=float)
    if h.shape != lc.shape:
        raise LengthMismatch(f"h has shape {h.shape} but log_comp has shape {lc.shape}")
    return LN2 * (float(np.mean(lc * h)) - float(np.mean(h)) * float(np.mean(lc)))


@dataclass
class QuantitySensitivity:
    parameter: str
    component: str
    quantity: Quantity
    base: float
    base_mcse: float
    derivative: float
    estimates: list = field(default_factory=list)


def quantity_sensitivity(
    draws: DrawsMatrix,
    parameter: str,
    component: str,
    q: Quantity,
    delta: float = DEFAULT_DELTA,
) -> QuantitySensitivity:
    """Local sensitivity of one quantity with respect to log2(alpha) at alpha = 1.

    Expectation-type quantities (mean, variance, sd) use the analytic
    derivative; quantiles use a central difference over alpha = 1/(1+delta)
    and 1+delta with smoothed weights.
    """
    x = draws.column(parameter)
    lc = component_log_density(draws, component)
    S = len(x)
    base, base_mcse = weighted_quantity(x, np.full(S, 1.0 / S), q)
    if q.kind == "mean":
        deriv = quantity_derivative(x, lc)
    elif q.kind in ("variance", "sd"):
        m = x.mean()
        dmean = quantity_derivative(x, lc)
        dvar = quantity_derivative(x**2, lc) - 2.0 * m * dmean
        deriv = dvar if q.kind == "variance" else (dvar / (2.0 * base) if base > 0 else 0.0)
    else:
        lo = perturb(draws, PowerScaleSpec(component, 1.0 / (1.0 + delta)))
        hi = perturb(draws, PowerScaleSpec(component, 1.0 + delta))
        q_lo, _ = quantity_estimate(lo, parameter, q)
        q_hi, _ = quantity_estimate(hi, parameter, q)
        deriv = (q_hi - q_lo) / (2.0 * np.log2(1.0 + delta))
    return QuantitySensitivity(parameter, component, q, base, base_mcse, float(deriv))


@dataclass
class SensitivityRecord:
    parameter: str
    prior_sensitivity: float
    likelihood_sensitivity: float
    diagnosis: Diagnosis
    khat_prior: float
    khat_lik: float
    reliable_prior: bool
    reliable_lik: bool

    @property
    def reliable(self) -> bool:
        return self.reliable_prior and self.reliable_lik


def _component_sensitivity(draws, base_w, component, params, delta, stabilize, evaluator, khat_threshold):
    pair = [
        perturb(draws, PowerScaleSpec(component, a), stabilize, evaluator, khat_threshold)
        for a in (1.0 / (1.0 + delta), 1.0 + delta)
    ]
    khats = [pp.weights.khat for pp in pair]
    khat = float("nan") if any(np.isnan(khats)) else float(max(khats))
    reliable = all(pp.reliable for pp in pair)
    values = {}
    for name in params:
        x = draws.column(name)
        if all(pp.draws is draws for pp in pair):
            base_e = weighted_ecdf(x, base_w)
            values[name] = d_cjs(base_e, pair[0].ecdf(name), pair[1].ecdf(name), delta)
            continue
        # moment matching moved the draws: compare on the pooled support
        dist = 0.0
        for pp in pair:
            base_e, pert_e = pooled_ecdfs(x, base_w, pp.draws.column(name), pp.normalized_weights)
            dist += cjs_dist(base_e, pert_e)
        values[name] = dist / (2.0 * np.log2(1.0 + delta))
    return values, khat, reliable


def powerscale_sensitivity(
    draws: DrawsMatrix,
    delta: float = DEFAULT_DELTA,
    threshold: float = DEFAULT_THRESHOLD,
    stabilize: str = "psis",
    evaluator: Optional[DensityEvaluator] = None,
    parameters: Optional[Sequence[str]] = None,
    khat_threshold: float = KHAT_THRESHOLD,
) -> list[SensitivityRecord]:
    """Prior and likelihood D_CJS for each parameter, with the resulting diagnosis."""
    validate_draws(draws)
    params = list(draws.parameter_names if parameters is None else parameters)
    for name in params:
        if name not in draws.parameter_names:
            raise UnknownParameter(f"unknown parameter '{name}'")
    base_w = np.full(draws.n_draws, 1.0 / draws.n_draws)
    results = {
        c: _component_sensitivity(draws, base_w, c, params, delta, stabilize, evaluator, khat_threshold)
        for c in COMPONENTS
    }
    (pri, k_pri, r_pri), (lik, k_lik, r_lik) = results["prior"], results["likelihood"]
    return [
        SensitivityRecord(
            name,
            float(pri[name]),
            float(lik[name]),
            diagnose(pri[name], lik[name], threshold),
            k_pri,
            k_lik,
            r_pri,
            r_lik,
        )
        for name in params
    ]
