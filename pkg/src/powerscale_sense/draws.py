"""Posterior draws container and weighted summary statistics.

Weighted statistics here treat weights as unnormalized and normalize them
first, so every result is invariant to rescaling the weights.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DuplicateName,
    InvalidProbability,
    NonFiniteValue,
    TooFewDraws,
    UnknownParameter,
    ZeroWeightSum,
)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DrawsMatrix:
    """S posterior draws of D parameters with per-draw log density columns.

    ``log_lik`` may be given as a length-S joint column or an S x N matrix of
    per-observation values; it is always stored as S x N.  The joint
    likelihood (row sum) is computed once here.
    """

    parameter_names: tuple
    values: np.ndarray
    log_prior: np.ndarray
    log_lik: np.ndarray
    chain_ids: Optional[np.ndarray] = None
    joint_log_lik: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        names = tuple(str(n) for n in self.parameter_names)
        values = _frozen(self.values)
        if values.ndim == 1:
            values = _frozen(values.reshape(-1, 1))
        if values.ndim != 2:
            raise ValueError("values must be an S x D matrix")
        S, D = values.shape
        if len(names) != D:
            raise ValueError(f"{len(names)} parameter names for {D} columns")
        log_prior = _frozen(self.log_prior)
        if log_prior.shape != (S,):
            raise ValueError(f"log_prior must have length {S}")
        log_lik = np.array(self.log_lik, dtype=float)
        if log_lik.ndim == 1:
            log_lik = log_lik.reshape(-1, 1)
        if log_lik.ndim != 2 or log_lik.shape[0] != S or log_lik.shape[1] < 1:
            raise ValueError(f"log_lik must be length {S} or {S} x N with N >= 1")
        log_lik = _frozen(log_lik)
        chain_ids = self.chain_ids
        if chain_ids is not None:
            chain_ids = _frozen(chain_ids, dtype=np.int64)
            if chain_ids.shape != (S,):
                raise ValueError(f"chain_ids must have length {S}")
        object.__setattr__(self, "parameter_names", names)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "log_prior", log_prior)
        object.__setattr__(self, "log_lik", log_lik)
        object.__setattr__(self, "chain_ids", chain_ids)
        object.__setattr__(self, "joint_log_lik", _frozen(log_lik.sum(axis=1)))

    @property
    def n_draws(self) -> int:
        return self.values.shape[0]

    @property
    def n_params(self) -> int:
        return self.values.shape[1]

    @property
    def n_obs(self) -> int:
        return self.log_lik.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.parameter_names.index(name)
        except ValueError:
            raise UnknownParameter(f"unknown parameter '{name}'") from None
        return self.values[:, j]

    def take(self, rows) -> "DrawsMatrix":
        """Row subset (with repetition allowed), all annotations carried along."""
        rows = np.asarray(rows)
        return DrawsMatrix(
            self.parameter_names,
            self.values[rows],
            self.log_prior[rows],
            self.log_lik[rows],
            None if self.chain_ids is None else self.chain_ids[rows],
        )

    def with_values(self, values, names=None) -> "DrawsMatrix":
        return DrawsMatrix(
            self.parameter_names if names is None else names,
            values,
            self.log_prior,
            self.log_lik,
            self.chain_ids,
        )


def validate_draws(raw: DrawsMatrix) -> DrawsMatrix:
    """Check the DrawsMatrix invariants; return the input unchanged."""
    if raw.n_draws < 2:
        raise TooFewDraws(f"need at least 2 draws, got {raw.n_draws}")
    seen = set()
    for name in raw.parameter_names:
        if name in seen:
            raise DuplicateName(f"duplicate parameter name '{name}'")
        seen.add(name)
    for label, arr in (("values", raw.values), ("log_prior", raw.log_prior), ("log_lik", raw.log_lik)):
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            if arr.ndim == 1:
                raise NonFiniteValue(label, int(bad[0][0]))
            raise NonFiniteValue(label, int(bad[0][0]), int(bad[0][1]))
    return raw


def _normalize(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    total = w.sum()
    if not total > 0:
        raise ZeroWeightSum("weights must have a positive sum")
    return w / total


def weighted_moments(x, w) -> tuple[float, float]:
    """Self-normalized weighted mean and standard deviation (1/sum(w) normalizer)."""
    x = np.asarray(x, dtype=float)
    wn = _normalize(w)
    mean = float(np.dot(wn, x))
    var = float(np.dot(wn, (x - mean) ** 2))
    return mean, float(np.sqrt(var))


@dataclass(frozen=True, eq=False)
class WeightedECDF:
    points: np.ndarray
    cum_weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(self.points))
        object.__setattr__(self, "cum_weights", _frozen(self.cum_weights))

    @property
    def masses(self) -> np.ndarray:
        """Per-point probability mass recovered from the cumulative weights."""
        return np.diff(self.cum_weights, prepend=0.0)

    def __call__(self, t) -> np.ndarray:
        """Right-continuous ECDF value at ``t``."""
        idx = np.searchsorted(self.points, t, side="right")
        cw = np.concatenate(([0.0], self.cum_weights))
        return cw[idx]


def weighted_ecdf(x, w) -> WeightedECDF:
    x = np.asarray(x, dtype=float)
    wn = _normalize(w)
    order = np.argsort(x, kind="stable")
    cum = np.cumsum(wn[order])
    # pin the final mass to exactly 1 so rounding never leaks past the support
    cum = np.minimum(cum, 1.0)
    cum[-1] = 1.0
    return WeightedECDF(x[order], cum)


def weighted_quantile(ecdf: WeightedECDF, p: float) -> float:
    """Left-continuous inverse: the smallest point whose cumulative mass is >= p."""
    if not 0.0 < p < 1.0:
        raise InvalidProbability(f"probability must be in (0, 1), got {p}")
    i = int(np.searchsorted(ecdf.cum_weights, p, side="left"))
    return float(ecdf.points[min(i, len(ecdf.points) - 1)])


def effective_sample_size(w) -> float:
    wn = _normalize(w)
    return float(1.0 / np.sum(wn**2))


_QUANTILE_RE = re.compile(r"^q(\d+)$")


@dataclass(frozen=True)
class Quantity:
    """A posterior summary: mean, sd, variance, median, quantile(p) or ecdf."""

    kind: str
    p: Optional[float] = None

    KINDS = ("mean", "sd", "variance", "median", "quantile", "ecdf")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown quantity kind '{self.kind}'")
        if self.kind == "quantile":
            if self.p is None or not 0.0 < self.p < 1.0:
                raise InvalidProbability(f"quantile probability must be in (0, 1), got {self.p}")

    @property
    def label(self) -> str:
        if self.kind == "quantile":
            digits = repr(self.p)[2:] if self.p < 1 else ""
            return f"q{digits}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "Quantity":
        """Parse ``mean``, ``sd``, ``variance``, ``median``, ``ecdf`` or ``qNN`` (q05 -> p=0.05)."""
        text = text.strip()
        m = _QUANTILE_RE.match(text)
        if m:
            return cls("quantile", float("0." + m.group(1)))
        if text in cls.KINDS and text != "quantile":
            return cls(text)
        raise ValueError(f"cannot parse quantity '{text}'")


def parse_quantities(spec: str | Sequence[str]) -> list[Quantity]:
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    return [Quantity.parse(s) for s in items if s.strip()]
