"""Cumulative Jensen-Shannon divergence between weighted ECDFs.

Both ECDFs must live on the same support points (perturbed ECDFs reweight the
base draws).  Integrals over step functions reduce to sums over the gaps
between consecutive points; the region past the last point contributes
nothing because both CDFs equal 1 there.
"""

from __future__ import annotations

import warnings

import numpy as np

from .draws import WeightedECDF, _normalize
from .errors import DegenerateSupportWarning, GridMismatch

LN2 = np.log(2.0)


def _check_grid(p: WeightedECDF, q: WeightedECDF):
    if p.points.shape != q.points.shape or not np.array_equal(p.points, q.points):
        raise GridMismatch("ECDFs are not defined on the same support points")


def _integrand(P, Q):
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.where(P > 0, P * np.log2(2.0 * P / (P + Q)), 0.0)
    return log_term + (Q - P) / (2.0 * LN2)


def _cjs_terms(points, P, Q):
    dx = np.diff(points)
    return dx, P[:-1], Q[:-1]


def cjs(p: WeightedECDF, q: WeightedECDF) -> float:
    """Directed cumulative Jensen-Shannon divergence CJS(P || Q)."""
    _check_grid(p, q)
    dx, P, Q = _cjs_terms(p.points, p.cum_weights, q.cum_weights)
    return float(np.sum(dx * _integrand(P, Q)))


def _cjs_dist_signed(points, P, Q):
    dx = np.diff(points)
    P, Q = P[:-1], Q[:-1]
    bound = np.sum(dx * (P + Q))
    if bound <= 0:
        return 0.0
    num = np.sum(dx * (_integrand(P, Q) + _integrand(Q, P)))
    return float(np.sqrt(max(num, 0.0) / bound))


def negate(ecdf: WeightedECDF) -> WeightedECDF:
    """ECDF of -theta built from the same per-point masses."""
    masses = ecdf.masses[::-1]
    cum = np.minimum(np.cumsum(masses), 1.0)
    cum[-1] = 1.0
    return WeightedECDF(-ecdf.points[::-1], cum)


def cjs_dist(p: WeightedECDF, q: WeightedECDF) -> float:
    """Symmetrized, normalized square-root CJS in [0, 1], maximized over the sign of theta."""
    _check_grid(p, q)
    if p.points[-1] - p.points[0] <= 0:
        warnings.warn("all support points are identical; divergence is 0", DegenerateSupportWarning)
        return 0.0
    pos = _cjs_dist_signed(p.points, p.cum_weights, q.cum_weights)
    pn, qn = negate(p), negate(q)
    neg = _cjs_dist_signed(pn.points, pn.cum_weights, qn.cum_weights)
    return max(pos, neg)


def d_cjs(base: WeightedECDF, lower: WeightedECDF, upper: WeightedECDF, delta: float = 0.01) -> float:
    """Local sensitivity: divergence per unit log2(alpha) from a symmetric step of size log2(1 + delta)."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return (cjs_dist(base, lower) + cjs_dist(base, upper)) / (2.0 * np.log2(1.0 + delta))


def pooled_ecdfs(x1, w1, x2, w2) -> tuple[WeightedECDF, WeightedECDF]:
    """Two weighted ECDFs on the union of their support points.

    Each sample contributes zero mass at the other's points, so the result
    satisfies the shared-grid requirement of :func:`cjs` and :func:`cjs_dist`.
    """
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    points = np.concatenate([x1, x2])
    order = np.argsort(points, kind="stable")
    m1 = np.concatenate([_normalize(w1), np.zeros(len(x2))])[order]
    m2 = np.concatenate([np.zeros(len(x1)), _normalize(w2)])[order]

    def build(m):
        cum = np.minimum(np.cumsum(m), 1.0)
        cum[-1] = 1.0
        return WeightedECDF(points[order], cum)

    return build(m1), build(m2)
