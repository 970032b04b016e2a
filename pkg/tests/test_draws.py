import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from powerscale_sense.draws import (
    DrawsMatrix,
    Quantity,
    effective_sample_size,
    parse_quantities,
    validate_draws,
    weighted_ecdf,
    weighted_moments,
    weighted_quantile,
)
from powerscale_sense.errors import (
    DuplicateName,
    InvalidProbability,
    NonFiniteValue,
    TooFewDraws,
    UnknownParameter,
    ZeroWeightSum,
)
from support import make_draws, seeded_arrays

def _sample(rng, n):
    x = rng.normal(0, 10 ** rng.uniform(-3, 6), size=n)
    if rng.random() < 0.3:
        x = np.round(x)  # ties
    w = 10 ** rng.uniform(-3, 3, size=n)
    return x, w


def samples(min_size=2, max_size=60):
    return seeded_arrays(_sample, min_size, max_size)


positive = st.floats(1e-3, 1e3)


class TestDrawsMatrix:
    def test_valid_matrix_passes_through(self):
        d = make_draws(np.arange(8.0).reshape(4, 2), np.zeros(4), np.zeros((4, 3)))
        assert validate_draws(d) is d
        assert (d.n_draws, d.n_params, d.n_obs) == (4, 2, 3)

    def test_nan_in_log_lik(self):
        ll = np.zeros((4, 2))
        ll[2, 1] = np.nan
        with pytest.raises(NonFiniteValue) as err:
            validate_draws(make_draws(np.zeros((4, 1)), np.zeros(4), ll))
        assert (err.value.field, err.value.row, err.value.column) == ("log_lik", 2, 1)

    def test_single_draw(self):
        with pytest.raises(TooFewDraws):
            validate_draws(make_draws(np.zeros((1, 1))))

    def test_duplicate_names(self):
        with pytest.raises(DuplicateName):
            validate_draws(make_draws(np.zeros((3, 2)), names=("a", "a")))

    def test_joint_column_is_row_sum(self):
        ll = np.array([[1.0, 2.0], [3.0, -4.0]])
        d = make_draws(np.zeros((2, 1)), np.zeros(2), ll)
        np.testing.assert_array_equal(d.joint_log_lik, [3.0, -1.0])

    def test_length_s_joint_column_is_one_observation(self):
        d = make_draws(np.zeros((3, 1)), np.zeros(3), np.array([1.0, 2.0, 3.0]))
        assert d.n_obs == 1

    def test_unknown_column(self):
        with pytest.raises(UnknownParameter):
            make_draws(np.zeros((3, 1))).column("nope")

    def test_immutable(self):
        d = make_draws(np.zeros((3, 1)))
        with pytest.raises(ValueError):
            d.values[0, 0] = 1.0


class TestWeightedMoments:
    def test_equal_weights(self):
        m, s = weighted_moments([1, 2, 3], [1, 1, 1])
        assert m == pytest.approx(2.0)
        assert s == pytest.approx(np.sqrt(2 / 3))

    def test_two_points(self):
        assert weighted_moments([0, 10], [3, 1])[0] == pytest.approx(2.5)

    def test_constant(self):
        assert weighted_moments([5, 5, 5], [0.2, 3, 1]) == pytest.approx((5.0, 0.0))

    def test_zero_weights(self):
        with pytest.raises(ZeroWeightSum):
            weighted_moments([1, 2], [0, 0])

    @given(samples())
    def test_equal_weights_match_unweighted(self, xw):
        x, _ = xw
        m, s = weighted_moments(x, np.ones_like(x))
        scale = max(1.0, np.abs(x).max())
        assert abs(m - x.mean()) <= 1e-12 * scale
        assert abs(s - x.std()) <= 1e-12 * scale * np.sqrt(len(x))

    @given(samples(), positive)
    def test_scale_invariant_in_weights(self, xw, c):
        x, w = xw
        a = weighted_moments(x, w)
        b = weighted_moments(x, c * w)
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9 * max(1.0, np.abs(x).max()))


class TestWeightedECDF:
    def test_sorting(self):
        e = weighted_ecdf([2, 1], [1, 1])
        np.testing.assert_array_equal(e.points, [1, 2])
        np.testing.assert_allclose(e.cum_weights, [0.5, 1.0])

    def test_point_mass(self):
        np.testing.assert_allclose(weighted_ecdf([1, 2, 3], [0, 0, 1]).cum_weights, [0, 0, 1])

    def test_ties_keep_mass(self):
        e = weighted_ecdf([1, 1, 2], [1, 1, 2])
        np.testing.assert_array_equal(e.points, [1, 1, 2])
        np.testing.assert_allclose(e.cum_weights, [0.25, 0.5, 1.0])

    def test_last_is_exactly_one(self):
        e = weighted_ecdf(np.random.default_rng(1).normal(size=1000), np.random.default_rng(2).random(1000))
        assert e.cum_weights[-1] == 1.0

    def test_call_is_right_continuous(self):
        e = weighted_ecdf([1, 2, 3, 4], [1, 1, 1, 1])
        np.testing.assert_allclose(e([0.5, 1, 2.5, 4, 9]), [0, 0.25, 0.5, 1, 1])

    @given(samples(), st.randoms(use_true_random=False))
    def test_permutation_invariant(self, xw, rnd):
        x, w = xw
        perm = list(range(len(x)))
        rnd.shuffle(perm)
        a = weighted_ecdf(x, w)
        b = weighted_ecdf(x[perm], w[perm])
        np.testing.assert_array_equal(a.points, b.points)
        # cumulative weights agree except for ordering within ties
        for v in np.unique(x):
            last = np.flatnonzero(a.points == v)[-1]
            assert a.cum_weights[last] == pytest.approx(b.cum_weights[last], abs=1e-12)


class TestWeightedQuantile:
    def test_median_left_inverse(self):
        assert weighted_quantile(weighted_ecdf([1, 2, 3, 4], np.ones(4)), 0.5) == 2

    def test_upper(self):
        assert weighted_quantile(weighted_ecdf([1, 2, 3, 4], np.ones(4)), 0.9) == 4

    def test_point_mass(self):
        e = weighted_ecdf([1, 3, 5], [0, 1, 0])
        for p in (0.01, 0.5, 0.99):
            assert weighted_quantile(e, p) == 3

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
    def test_invalid_probability(self, p):
        with pytest.raises(InvalidProbability):
            weighted_quantile(weighted_ecdf([1, 2], [1, 1]), p)

    @given(samples(), st.lists(st.floats(1e-6, 1 - 1e-6), min_size=2, max_size=10))
    def test_monotone_in_p(self, xw, ps):
        e = weighted_ecdf(*xw)
        qs = [weighted_quantile(e, p) for p in sorted(ps)]
        assert all(a <= b for a, b in zip(qs, qs[1:]))


class TestEffectiveSampleSize:
    def test_equal(self):
        assert effective_sample_size(np.ones(7)) == pytest.approx(7)

    def test_one_hot(self):
        assert effective_sample_size([0, 0, 3, 0]) == pytest.approx(1)

    def test_formula(self):
        assert effective_sample_size([2, 1, 1]) == pytest.approx(2.6667, abs=1e-4)

    @given(samples(), st.booleans())
    def test_bounds(self, xw, flatten):
        _, w = xw
        if flatten:
            w = np.full_like(w, w[0])
        ess = effective_sample_size(w)
        assert 1 - 1e-9 <= ess <= len(w) * (1 + 1e-9)
        if np.all(w == w[0]):
            assert ess == pytest.approx(len(w), rel=1e-12)
        else:
            assert ess < len(w) * (1 - 1e-12)

    @given(st.integers(2, 50), positive)
    def test_equal_weights_give_s(self, n, c):
        assert effective_sample_size(np.full(n, c)) == pytest.approx(n, rel=1e-12)


class TestQuantity:
    def test_labels(self):
        qs = parse_quantities("mean,sd,median,q05,q95")
        assert [q.label for q in qs] == ["mean", "sd", "median", "q05", "q95"]
        assert qs[3].p == pytest.approx(0.05)

    def test_bad_probability(self):
        with pytest.raises(ValueError):
            Quantity("quantile", 1.0)

    def test_unknown(self):
        with pytest.raises(ValueError):
            Quantity.parse("mode")


def test_drawsmatrix_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        DrawsMatrix(("a",), np.zeros((3, 1)), np.zeros(2), np.zeros(3))
