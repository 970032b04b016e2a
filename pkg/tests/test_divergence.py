import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from powerscale_sense.divergence import cjs, cjs_dist, d_cjs, negate, pooled_ecdfs
from powerscale_sense.draws import WeightedECDF, weighted_ecdf
from powerscale_sense.errors import DegenerateSupportWarning, GridMismatch
from support import cjs_dist_quad

LN2 = np.log(2.0)


@st.composite
def shared_grid(draw, n_ecdfs=2):
    """Several ECDFs over one set of distinct support points, built from a drawn seed."""
    n = draw(st.integers(2, 60))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    x = np.unique(np.round(rng.normal(0, 20, size=n), 2))
    if len(x) < 2:
        x = np.array([0.0, 1.0])
    ws = []
    for _ in range(n_ecdfs):
        w = rng.random(len(x)) ** draw(st.sampled_from([1, 4]))
        # some exact zeros, as with point masses and pooled grids
        w[rng.random(len(x)) < draw(st.sampled_from([0.0, 0.3]))] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
        ws.append(w)
    return [weighted_ecdf(x, w) for w in ws]


class TestCjs:
    def test_identical(self):
        e = weighted_ecdf([0.0, 1.0, 3.0], [1, 2, 3])
        assert cjs(e, e) == 0.0

    def test_two_point_masses(self):
        p = WeightedECDF(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
        q = WeightedECDF(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
        assert cjs(p, q) == pytest.approx(1 - 1 / (2 * LN2), abs=1e-12)
        assert cjs(p, q) == pytest.approx(0.2787, abs=1e-4)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatch):
            cjs(weighted_ecdf([0, 1], [1, 1]), weighted_ecdf([0, 2], [1, 1]))

    def test_far_shift_approaches_bound(self):
        # disjoint supports: the normalized metric tends to its upper bound
        vals = []
        for shift in (1.0, 5.0, 50.0):
            x = np.linspace(0, 1, 201)
            p, q = pooled_ecdfs(x, np.ones_like(x), x + shift, np.ones_like(x))
            vals.append(cjs_dist(p, q))
        assert vals[0] < vals[1] < vals[2] <= 1.0
        assert vals[2] > 0.9


class TestCjsDist:
    def test_identical(self):
        e = weighted_ecdf(np.random.default_rng(0).normal(size=50), np.ones(50))
        assert cjs_dist(e, e) == 0.0

    def test_normal_shift_matches_quadrature(self):
        n = 20_000
        u = (np.arange(1, n + 1) - 0.5) / n
        x = stats.norm.ppf(u)
        p, q = pooled_ecdfs(x, np.ones(n), x + 0.3, np.ones(n))
        lo, hi = x[0], x[-1] + 0.3
        ref = cjs_dist_quad(stats.norm.cdf, lambda t: stats.norm.cdf(t - 0.3), lo, hi, (0.0, 0.3))
        assert cjs_dist(p, q) == pytest.approx(ref, abs=2e-4)

    def test_sign_flip(self):
        rng = np.random.default_rng(2)
        x = rng.gamma(2.0, size=300)
        w1, w2 = rng.random(300), rng.random(300)
        a = cjs_dist(weighted_ecdf(x, w1), weighted_ecdf(x, w2))
        b = cjs_dist(weighted_ecdf(-x, w1), weighted_ecdf(-x, w2))
        assert a == pytest.approx(b, abs=1e-12)

    def test_negate_masses(self):
        e = weighted_ecdf([1.0, 2.0, 4.0], [1, 2, 1])
        n = negate(e)
        np.testing.assert_array_equal(n.points, [-4.0, -2.0, -1.0])
        np.testing.assert_allclose(n.cum_weights, [0.25, 0.75, 1.0])

    def test_degenerate_support(self):
        e = weighted_ecdf([2.0, 2.0, 2.0], [1, 2, 3])
        with pytest.warns(DegenerateSupportWarning):
            assert cjs_dist(e, e) == 0.0

    @given(shared_grid())
    def test_symmetric_and_bounded(self, pq):
        p, q = pq
        a, b = cjs_dist(p, q), cjs_dist(q, p)
        assert a == pytest.approx(b, abs=1e-12)
        assert 0.0 <= a <= 1.0

    @given(shared_grid(3))
    def test_triangle(self, pqr):
        p, q, r = pqr
        assert cjs_dist(p, r) <= cjs_dist(p, q) + cjs_dist(q, r) + 1e-9

    @given(shared_grid(), st.floats(-1e3, 1e3))
    def test_translation(self, pq, c):
        p, q = pq
        moved = [WeightedECDF(e.points + c, e.cum_weights) for e in pq]
        assert cjs_dist(*moved) == pytest.approx(cjs_dist(p, q), abs=1e-9)

    @given(shared_grid(), st.floats(1e-3, 1e3))
    def test_scale(self, pq, s):
        p, q = pq
        scaled = [WeightedECDF(e.points * s, e.cum_weights) for e in pq]
        assert cjs_dist(*scaled) == pytest.approx(cjs_dist(p, q), abs=1e-9)

    @given(shared_grid())
    def test_zero_iff_identical(self, pq):
        p, q = pq
        same = np.allclose(p.cum_weights[:-1], q.cum_weights[:-1], atol=0, rtol=0)
        assert (cjs_dist(p, q) == 0.0) == same or not same and cjs_dist(p, q) > 0


class TestDCjs:
    def test_no_change(self):
        e = weighted_ecdf(np.arange(10.0), np.ones(10))
        assert d_cjs(e, e, e) == 0.0

    def test_denominator(self):
        x = np.arange(5.0)
        base = weighted_ecdf(x, np.ones(5))
        lo = weighted_ecdf(x, [1, 1, 1, 1, 2])
        hi = weighted_ecdf(x, [2, 1, 1, 1, 1])
        expected = (cjs_dist(base, lo) + cjs_dist(base, hi)) / (2 * np.log2(1.01))
        assert d_cjs(base, lo, hi, 0.01) == pytest.approx(expected, rel=1e-12)
        assert d_cjs(base, lo, hi) > 0


def test_pooled_ecdfs_share_grid():
    p, q = pooled_ecdfs([0.0, 2.0], [1, 1], [1.0, 3.0], [1, 3])
    np.testing.assert_array_equal(p.points, q.points)
    np.testing.assert_allclose(p.cum_weights, [0.5, 0.5, 1.0, 1.0])
    np.testing.assert_allclose(q.cum_weights, [0.0, 0.25, 0.25, 1.0])


def test_no_warnings_on_regular_input():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        e = weighted_ecdf([0.0, 1.0], [1, 1])
        cjs_dist(e, e)
