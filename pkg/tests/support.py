"""Shared fixtures: draw builders, exact samplers and reference integrals."""

import numpy as np
from scipy import integrate, stats

from powerscale_sense.draws import DrawsMatrix
from powerscale_sense.oracles import NormalNormal, fit_model

DATA = __import__("pathlib").Path(__file__).parent / "data"

CONFLICT = NormalNormal(0.0, 2.5, 1.0, (10.0,))
DOMINATION = NormalNormal(0.0, 10.0, 1.0, (10.0,))


def make_draws(values, log_prior=None, log_lik=None, names=None):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    S, D = values.shape
    names = tuple(names or (f"p{j}" for j in range(D)))
    log_prior = np.zeros(S) if log_prior is None else log_prior
    log_lik = np.zeros(S) if log_lik is None else log_lik
    return DrawsMatrix(names, values, np.asarray(log_prior, float), np.asarray(log_lik, float))


def conflict_draws(seed=0, S=4000):
    return fit_model(CONFLICT, S, seed)


def t_likelihood_draws(seed, S=4000, y=10.0, df=4):
    """Exact draws from N(0, 1) prior times a Student-t(df) likelihood for one observation.

    Sampled by inverse CDF on a fine grid covering the posterior mass.
    """
    grid = np.linspace(-8.0, 18.0, 400_001)
    log_post = stats.norm.logpdf(grid) + stats.t.logpdf(y - grid, df)
    dens = np.exp(log_post - log_post.max())
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    cdf /= cdf[-1]
    rng = np.random.Generator(np.random.PCG64(seed))
    theta = np.interp(rng.uniform(size=S), cdf, grid)
    return DrawsMatrix(
        ("theta",), theta[:, None], stats.norm.logpdf(theta), stats.t.logpdf(y - theta, df)[:, None]
    )


def cjs_dist_quad(F, G, lo, hi, breakpoints=()):
    """Normalized symmetric CJS metric between two analytic CDFs on [lo, hi] by adaptive quadrature."""
    ln2 = np.log(2.0)

    def term(a, b):
        def f(t):
            p, q = a(t), b(t)
            head = p * np.log2(2 * p / (p + q)) if p > 0 else 0.0
            return head + (q - p) / (2 * ln2)

        return f

    opts = dict(limit=500, points=list(breakpoints) or None)
    num = integrate.quad(term(F, G), lo, hi, **opts)[0] + integrate.quad(term(G, F), lo, hi, **opts)[0]
    den = integrate.quad(lambda t: F(t) + G(t), lo, hi, **opts)[0]
    return float(np.sqrt(num / den))


def seeded_arrays(make, min_size=2, max_size=60):
    """Hypothesis strategy: ``make(rng, n)`` on a drawn seed and size (cheap large arrays)."""
    from hypothesis import strategies as st

    return st.builds(
        lambda n, seed: make(np.random.default_rng(seed), n),
        st.integers(min_size, max_size),
        st.integers(0, 2**32 - 1),
    )
