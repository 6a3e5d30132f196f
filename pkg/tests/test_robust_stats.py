import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from phiscore.robust_stats import (
    GlobalScale,
    QuantileSet,
    bowley_skewness,
    coefficient_of_variation,
    ecdf,
    kolmogorov_sf,
    ks_statistic,
    ks_two_sample,
    lorenz_points,
    quantile,
    rankdata,
    robust_standardise,
    spearman_rho,
    tail_ratio,
    top_share,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def brute_quantile(xs, p):
    s = sorted(xs)
    h = (len(s) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


class TestQuantile:
    def test_examples(self):
        assert quantile([1, 2, 3, 4, 5], 0.5) == 3
        assert quantile([1, 2, 3, 4], 0.5) == 2.5
        assert quantile([0, 10], 0.25) == 2.5

    def test_empty(self):
        with pytest.raises(ValueError):
            quantile([], 0.5)

    @given(st.lists(finite, min_size=1, max_size=60), st.floats(0, 1))
    def test_matches_numpy_linear(self, xs, p):
        assert quantile(xs, p) == pytest.approx(np.quantile(xs, p), rel=1e-12, abs=1e-9)
        assert quantile(xs, p) == pytest.approx(brute_quantile(xs, p), rel=1e-12, abs=1e-9)

    @given(st.lists(finite, min_size=1, max_size=40))
    def test_endpoints(self, xs):
        assert quantile(xs, 0) == min(xs)
        assert quantile(xs, 1) == max(xs)

    @given(st.lists(finite, min_size=1, max_size=40))
    def test_quantile_set_ordered(self, xs):
        q = QuantileSet.from_sample(xs)
        assert q.q05 <= q.q25 <= q.q50 <= q.q75 <= q.q95


class TestStandardise:
    def test_median_maps_to_zero_and_iqr_to_one(self):
        scale = GlobalScale(median=721.0, iqr=1500.0)
        assert robust_standardise(721.0, scale) == 0.0
        assert robust_standardise(2221.0, scale) == 1.0
        assert robust_standardise(0.0, scale) < 0

    def test_zero_iqr(self):
        from phiscore.robust_stats import DegenerateScaleError

        with pytest.raises(DegenerateScaleError):
            robust_standardise(1.0, GlobalScale(median=1.0, iqr=0.0))

    def test_roundtrip(self, rng):
        scale = GlobalScale.from_amounts(rng.lognormal(6, 1, 500))
        x = rng.lognormal(6, 1, 50)
        assert np.allclose(scale.to_gbp(robust_standardise(x, scale)), x, rtol=1e-12)


class TestShape:
    def test_bowley(self):
        assert bowley_skewness(QuantileSet.from_sample([1, 2, 3, 4, 5])) == 0.0
        assert bowley_skewness(QuantileSet.from_sample([7.0] * 9)) == 0.0
        q = QuantileSet(q05=-1, q25=0, q50=1, q75=4, q95=9, n=0)
        assert bowley_skewness(q) == pytest.approx(0.5)

    def test_tail_ratio(self, rng):
        assert tail_ratio(QuantileSet.from_sample([3.0] * 20)) == 1.0
        q = QuantileSet(q05=0.0, q25=5.0, q50=5.0, q75=5.0, q95=10.0, n=0)
        assert tail_ratio(q) == pytest.approx((10 + 1e-6) / 1e-6)
        z = rng.standard_normal(400_000)
        expected = (sps.norm.ppf(0.95) - sps.norm.ppf(0.05)) / (sps.norm.ppf(0.75) - sps.norm.ppf(0.25))
        assert expected == pytest.approx(2.4387, abs=1e-4)
        assert tail_ratio(QuantileSet.from_sample(z)) == pytest.approx(expected, rel=0.01)

    @settings(max_examples=300)
    @given(
        st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=8, max_size=80),
        st.sampled_from([2.0, 10.0]),
        st.sampled_from([-5.0, 100.0]),
    )
    def test_affine_invariance(self, xs, alpha, beta):
        x = np.asarray(xs)
        q = QuantileSet.from_sample(x)
        if q.q75 - q.q25 < 1e-2:
            return
        qa = QuantileSet.from_sample(alpha * x + beta)
        assert bowley_skewness(qa) == pytest.approx(bowley_skewness(q), abs=1e-9)
        # eps scales differently from the spans; use eps=0 for the pure identity
        assert math.log(tail_ratio(qa, 0.0)) == pytest.approx(math.log(tail_ratio(q, 0.0)), abs=1e-9)

    def test_cv(self):
        assert coefficient_of_variation([5, 5, 5]) == 0.0
        assert coefficient_of_variation([1, 3]) == 0.5
        assert coefficient_of_variation([1, 3], ddof=1) == pytest.approx(math.sqrt(2) / 2)
        with pytest.raises(ZeroDivisionError):
            coefficient_of_variation([-1, 1])


def count_ranks(xs):
    # rank = (#less) + (#equal + 1) / 2
    return [sum(y < x for y in xs) + (sum(y == x for y in xs) + 1) / 2 for x in xs]


class TestRanks:
    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=40))
    def test_average_ranks_by_counting(self, xs):
        assert np.allclose(rankdata(xs), count_ranks(xs))

    def test_spearman_examples(self):
        x = np.arange(10.0)
        assert spearman_rho(x, x**3)[0] == pytest.approx(1.0)
        assert spearman_rho(x, -np.exp(x))[0] == pytest.approx(-1.0)
        with pytest.raises(ValueError):
            spearman_rho([1, 1, 1], [1, 2, 3])
        with pytest.raises(ValueError):
            spearman_rho([1, 2], [1, 2])

    def test_spearman_matches_scipy(self, rng):
        for _ in range(20):
            n = int(rng.integers(5, 80))
            x = rng.integers(0, 10, n).astype(float)
            y = x + rng.normal(0, 3, n)
            rho, p = spearman_rho(x, y)
            ref = sps.spearmanr(x, y)
            assert rho == pytest.approx(ref.statistic, abs=1e-12)
            assert p == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-300)


def brute_ks(a, b):
    pts = sorted(set(a) | set(b))
    return max(abs(sum(x <= t for x in a) / len(a) - sum(x <= t for x in b) / len(b)) for t in pts)


class TestKS:
    def test_examples(self):
        assert ks_statistic([1, 2, 3], [1, 2, 3]) == 0.0
        assert ks_statistic([1, 2, 3], [10, 11]) == 1.0

    @given(
        st.lists(st.integers(0, 20), min_size=1, max_size=30),
        st.lists(st.integers(0, 20), min_size=1, max_size=30),
    )
    def test_brute_force_and_symmetry(self, a, b):
        d = ks_statistic(a, b)
        assert d == pytest.approx(brute_ks(a, b), abs=1e-12)
        assert ks_statistic(b, a) == d

    def test_matches_scipy_statistic(self, rng):
        for _ in range(10):
            a, b = rng.normal(0, 1, 60), rng.normal(0.3, 1, 90)
            assert ks_statistic(a, b) == pytest.approx(sps.ks_2samp(a, b).statistic, abs=1e-12)

    def test_kolmogorov_series(self):
        for lam in (0.3, 0.8, 1.36, 2.0):
            assert kolmogorov_sf(lam) == pytest.approx(sps.kstwobign.sf(lam), abs=1e-12)
        assert kolmogorov_sf(0.0) == 1.0

    def test_p_value_methods(self, rng):
        a, b = rng.normal(0, 1, 148), rng.normal(0.5, 1, 969)
        d, p = ks_two_sample(a, b)
        en = 148 * 969 / (148 + 969)
        assert p == pytest.approx(sps.kstwobign.sf(math.sqrt(en) * d), abs=1e-12)
        d2, pf = ks_two_sample(a, b, method="finite")
        assert d2 == d
        assert pf == pytest.approx(sps.ks_2samp(a, b, method="asymp").pvalue, rel=1e-9)
        with pytest.raises(ValueError):
            ks_two_sample(a, b, method="exact-ish")

    def test_ecdf(self):
        xs, ys = ecdf([3, 1, 2])
        assert list(xs) == [1, 2, 3]
        assert list(ys) == pytest.approx([1 / 3, 2 / 3, 1])


class TestLorenz:
    def test_equal_and_concentrated(self):
        pts = lorenz_points([5, 5, 5, 5])
        assert all(x == pytest.approx(y) for x, y in pts)
        pts = lorenz_points([0, 0, 0, 9])
        assert [y for _, y in pts] == [0, 0, 0, 0, 1]
        assert top_share(pts, 0.25) == pytest.approx(1.0)

    def test_errors(self):
        with pytest.raises(ValueError):
            lorenz_points([0, 0])
        with pytest.raises(ValueError):
            lorenz_points([1, -1])

    @given(st.lists(st.floats(0, 1e6), min_size=2, max_size=50).filter(lambda v: sum(v) > 0))
    def test_convex_and_anchored(self, spend):
        pts = lorenz_points(spend)
        ys = np.array([y for _, y in pts])
        assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
        assert np.all(np.diff(ys, 2) >= -1e-12)
