"""Importance weighted moment matching for power-scaling targets.

When Pareto smoothing flags the weights for a perturbation as unreliable,
the draws are moved by affine maps that match the importance-weighted
moments, and the model densities are re-evaluated at the moved draws.  With
``theta`` the original draw and ``T`` the accumulated map, the new log ratio
is

    [alpha * log p_comp(T theta) + log p_other(T theta) + log|det T|]
        - [log p_prior(theta) + log p_lik(theta)]

because the base posterior density at the original draws is known up to a
constant from the stored columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .draws import DrawsMatrix, _frozen
from .errors import EvaluatorFailure, EvaluatorInconsistent, SingularTransform
from .powerscale import PowerScaleSpec, log_weights
from .psis import KHAT_THRESHOLD, SmoothedWeights, psis_smooth

MAX_ITERATIONS = 10
TRANSFORMS = ("shift", "scale", "covariance")


class Evaluation(NamedTuple):
    """Densities at K points: ``log_prior`` (K,), ``log_lik`` (K, N), ``ok`` (K,) flags."""

    log_prior: np.ndarray
    log_lik: np.ndarray
    ok: np.ndarray


# Any callable mapping a K x D array of points to an Evaluation.
DensityEvaluator = Callable[[np.ndarray], Evaluation]


@dataclass(frozen=True, eq=False)
class MomentMatchResult:
    draws: np.ndarray
    log_w: np.ndarray
    khat: float
    iterations: int
    transform_chain: list = field(default_factory=list)
    initial_khat: float = float("nan")
    reliable: bool = False
    khat_trace: list = field(default_factory=list)

    def __post_init__(self):
        object.__setattr__(self, "draws", _frozen(self.draws))
        object.__setattr__(self, "log_w", _frozen(self.log_w))

    def smoothed(self) -> SmoothedWeights:
        return SmoothedWeights(self.log_w, self.khat, self.reliable)


def _evaluate(evaluator, points, n_obs):
    result = evaluator(points)
    lp = np.asarray(result.log_prior, dtype=float).reshape(-1)
    ll = np.asarray(result.log_lik, dtype=float)
    if ll.ndim == 1:
        ll = ll[:, None]
    ok = np.asarray(result.ok, dtype=bool).reshape(-1)
    K = len(points)
    if lp.shape != (K,) or ll.shape[0] != K or ok.shape != (K,):
        raise EvaluatorFailure(f"evaluator returned wrong shapes for {K} points")
    if ll.shape[1] != n_obs:
        raise EvaluatorFailure(f"evaluator returned {ll.shape[1]} likelihood terms, expected {n_obs}")
    bad = ~(ok & np.isfinite(lp) & np.all(np.isfinite(ll), axis=1))
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise EvaluatorFailure(f"evaluator failed at transformed draw row {row}", row=row)
    return lp, ll.sum(axis=1)


def target_log_ratio(spec: PowerScaleSpec, log_prior, joint_log_lik, base_log_density, logdet=0.0):
    """Log importance ratio of moved draws for the power-scaled target.

    ``log_prior`` and ``joint_log_lik`` are evaluated at the moved draws,
    ``base_log_density`` (log prior + log likelihood) at the original ones.
    """
    if spec.component == "prior":
        target = spec.alpha * log_prior + joint_log_lik
    else:
        target = log_prior + spec.alpha * joint_log_lik
    return target + logdet - base_log_density


def _khat_key(sm: SmoothedWeights) -> float:
    return sm.khat if np.isfinite(sm.khat) else np.inf


def affine_map(theta, w, kind):
    """Moment-matching map of the current draws; returns (new draws, log|det|)."""
    mean = theta.mean(axis=0)
    wmean = w @ theta
    centered = theta - mean
    if kind == "shift":
        return centered + wmean, 0.0
    if kind == "scale":
        var = np.mean(centered**2, axis=0)
        wvar = w @ (theta - wmean) ** 2
        if np.any(var <= 0) or np.any(wvar <= 0):
            raise SingularTransform("zero variance in a coordinate")
        ratio = np.sqrt(wvar / var)
        return centered * ratio + wmean, float(np.sum(np.log(ratio)))
    cov = centered.T @ centered / len(theta)
    wc = theta - wmean
    wcov = (wc * w[:, None]).T @ wc
    L = _cholesky(cov)
    Lw = _cholesky(wcov)
    A = Lw @ np.linalg.inv(L)
    logdet = float(np.sum(np.log(np.diag(Lw))) - np.sum(np.log(np.diag(L))))
    return centered @ A.T + wmean, logdet


def _cholesky(cov):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        D = cov.shape[0]
        jitter = 1e-10 * np.trace(cov) / D
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(D))
        except np.linalg.LinAlgError:
            raise SingularTransform("covariance factorization failed after regularization") from None


def moment_match(
    draws: DrawsMatrix,
    spec: PowerScaleSpec,
    evaluator: DensityEvaluator,
    khat_threshold: float = KHAT_THRESHOLD,
    max_iterations: int = MAX_ITERATIONS,
    check_tol: float = 1e-6,
) -> MomentMatchResult:
    """Adapt the draws for one power-scaling target until Pareto k is acceptable.

    Each iteration tries a shift, then shift plus per-coordinate scaling, then
    shift plus full covariance matching, and keeps the first map that strictly
    lowers khat.  Stops when khat <= ``khat_threshold``, when no map helps, or
    after ``max_iterations``.
    """
    theta0 = draws.values
    base_logp = draws.log_prior + draws.joint_log_lik

    initial = psis_smooth(log_weights(draws, spec), khat_threshold)
    if initial.reliable:
        return MomentMatchResult(theta0, initial.log_w, initial.khat, 0, [], initial.khat, True, [initial.khat])

    lp, ll = _evaluate(evaluator, theta0, draws.n_obs)
    if not (
        np.allclose(lp, draws.log_prior, rtol=0, atol=check_tol)
        and np.allclose(ll, draws.joint_log_lik, rtol=0, atol=check_tol)
    ):
        raise EvaluatorInconsistent("evaluator does not reproduce the stored log densities at the draws")

    def log_ratio(points, logdet):
        lp, ll = _evaluate(evaluator, points, draws.n_obs)
        return target_log_ratio(spec, lp, ll, base_logp, logdet)

    theta = theta0
    logdet = 0.0
    current = initial
    chain = []
    trace = [initial.khat]
    iterations = 0
    while iterations < max_iterations and _khat_key(current) > khat_threshold:
        w = current.normalized()
        accepted = False
        for kind in TRANSFORMS:
            new_theta, ld = affine_map(theta, w, kind)
            candidate = psis_smooth(log_ratio(new_theta, logdet + ld), khat_threshold)
            if _khat_key(candidate) < _khat_key(current):
                theta, logdet, current = new_theta, logdet + ld, candidate
                chain.append(kind)
                trace.append(candidate.khat)
                accepted = True
                break
        if not accepted:
            break
        iterations += 1

    if not chain:
        return MomentMatchResult(
            theta0, initial.log_w, initial.khat, 0, [], initial.khat, initial.reliable, [initial.khat]
        )
    return MomentMatchResult(
        theta, current.log_w, current.khat, iterations, chain, initial.khat, current.reliable, trace
    )
