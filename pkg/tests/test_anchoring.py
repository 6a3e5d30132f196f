import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from phiscore.anchoring import (
    AnchoringConfig,
    CentreObservation,
    analyse,
    bin_edges,
    detect_peaks,
    ecdf_rows,
    gaussian_kernel,
    histogram_counts,
    local_maxima,
    nearest_peak,
    nearest_peaks,
    permutation_null,
    permutation_test,
    prominences,
    proximity_flags,
    smoothed_histogram,
    tier_proximity_table,
)

CFG = AnchoringConfig()


class TestHistogram:
    def test_edges_and_bins(self):
        e = bin_edges(CFG)
        assert e[0] == 0 and e[-1] == 30000 and e.size == 301
        c = histogram_counts([0, 99.99, 100, 30000, 30000.01, -1], CFG)
        assert c[0] == 2 and c[1] == 1 and c[-1] == 1 and c.sum() == 4

    def test_kernel(self):
        k = gaussian_kernel(4.0)
        assert k.size == 33 and k.sum() == pytest.approx(1.0) and np.argmax(k) == 16

    def test_delta_smoothing(self):
        d = smoothed_histogram([5050.0] * 20, CFG)
        assert d.sum() == pytest.approx(20.0)
        assert np.argmax(d) == 50

    def test_flat_interior(self):
        d = smoothed_histogram(np.arange(50, 30000, 100.0), CFG)
        assert np.allclose(d[20:-20], 1.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            smoothed_histogram([40000.0], CFG)


class TestPeaks:
    @settings(max_examples=200)
    @given(st.lists(st.integers(0, 6), min_size=3, max_size=60))
    def test_match_scipy(self, xs):
        x = np.asarray(xs, dtype=float)
        ref, _ = signal.find_peaks(x)
        assert np.array_equal(local_maxima(x), ref)
        if ref.size:
            assert np.allclose(prominences(x, ref), signal.peak_prominences(x, ref)[0])

    def test_monotone_has_no_peaks(self):
        assert detect_peaks(np.arange(300.0), CFG).size == 0

    def test_two_humps(self):
        vals = np.r_[np.full(30, 2050.0), np.full(30, 7050.0)]
        peaks = detect_peaks(smoothed_histogram(vals, CFG), CFG)
        assert peaks.size == 2
        assert abs(peaks[0] - 2050) <= 100 and abs(peaks[1] - 7050) <= 100

    def test_filters(self):
        vals = np.r_[np.full(30, 150.0), np.full(30, 5050.0), np.full(1, 12050.0)]
        d = smoothed_histogram(vals, CFG)
        peaks = detect_peaks(d, CFG)
        # 150 is below the position floor; the single 12050 is under 4% prominence
        assert list(peaks) == [5050.0]

    def test_out_of_range_values_ignored(self):
        vals = [2050.0] * 10 + [9050.0] * 10
        a = detect_peaks(smoothed_histogram(vals, CFG), CFG)
        b = detect_peaks(smoothed_histogram(vals + [45000.0, -10.0], CFG), CFG)
        assert np.array_equal(a, b)


class TestNearest:
    def test_examples(self):
        assert nearest_peak(1150.0, [1150.0, 7450.0]) == (1150.0, 0.0)
        p, pct = nearest_peak(1265.0, [1150.0, 7450.0])
        assert p == 1150.0 and pct == pytest.approx(10.0)
        assert proximity_flags([pct], 10.0)[0]
        assert nearest_peak(9250.0, [11050.0, 7450.0])[0] == 7450.0

    def test_empty(self):
        with pytest.raises(ValueError):
            nearest_peak(1.0, [])

    def test_vectorised_agrees_and_partitions(self, rng):
        peaks = [1150.0, 7450.0, 11050.0]
        c = rng.uniform(0, 30000, 500)
        near, pct = nearest_peaks(c, peaks)
        for ci, n, p in zip(c, near, pct):
            assert (n, p) == pytest.approx(nearest_peak(ci, peaks))
        assert sum((near == pk).sum() for pk in peaks) == c.size


class TestPermutation:
    def test_all_in_target(self):
        r = permutation_test([1, 0, 1], ["High"] * 3, n_perm=200)
        assert r.observed == 2 and r.p_value == 1.0

    def test_empty_target(self):
        with pytest.raises(ValueError):
            permutation_test([1, 0], ["Low", "Low"], n_perm=10)

    def test_null_is_hypergeometric(self):
        flags = np.r_[np.ones(30), np.zeros(70)].astype(bool)
        null = permutation_null(flags, 20, n_perm=20000, seed=3)
        assert null.mean() == pytest.approx(20 * 0.3, abs=0.05)
        from scipy.stats import hypergeom

        assert null.var() == pytest.approx(hypergeom(100, 30, 20).var(), rel=0.05)

    def test_reproducible_and_worker_independent(self):
        flags = np.arange(200) % 3 == 0
        a = permutation_null(flags, 40, 3500, seed=9, workers=1)
        b = permutation_null(flags, 40, 3500, seed=9, workers=4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, permutation_null(flags, 40, 3500, seed=10))

    def test_order_invariant(self, rng):
        flags = rng.random(150) < 0.3
        tiers = np.where(rng.random(150) < 0.2, "High", "Low")
        perm = rng.permutation(150)
        a = permutation_test(flags, tiers, n_perm=2000, seed=1)
        b = permutation_test(flags[perm], tiers[perm], n_perm=2000, seed=1)
        assert a.p_value == b.p_value and a.observed == b.observed

    def test_plus_one(self):
        r = permutation_test([1, 1, 0, 0, 0, 0], ["High", "High", "Low", "Low", "Low", "Low"], n_perm=999, plus_one=True)
        ge = int((r.null_counts >= r.observed).sum())
        assert r.p_value == pytest.approx((1 + ge) / 1000)
        assert r.to_dict()["p_value_kind"] == "(1+count)/(1+N)"


class TestAnalyse:
    def make_obs(self, rng):
        obs = []
        for i in range(60):
            tier = "High" if i < 10 else "Moderate" if i < 20 else "Low"
            base = 5000.0 if tier == "High" else rng.uniform(500, 20000)
            obs.append(CentreObservation(f"S-{i}", base * rng.uniform(0.97, 1.03), tier, 1.0))
        return obs

    def test_end_to_end(self, rng):
        res = analyse(self.make_obs(rng), AnchoringConfig(n_perm=500))
        assert res.peaks.size >= 1
        assert res.permutation[0].p_value < 0.05
        assert res.ks["statistic"] > 0.5 and res.ks["n_high"] == 10
        d = res.to_dict(AnchoringConfig(n_perm=500))
        assert d["peak_source"].startswith("endogenous")
        rows = ecdf_rows(res.pct_distance, [o.tier for o in res.observations])
        assert {r["tier"] for r in rows} == {"High", "Low"}

    def test_exogenous_peaks(self, rng):
        cfg = AnchoringConfig(n_perm=100, peaks=(1000.0, 5000.0))
        res = analyse(self.make_obs(rng), cfg)
        assert list(res.peaks) == [1000.0, 5000.0] and res.density is None

    def test_table(self):
        t = tier_proximity_table(["High", "Low"], [100.0, 100.0], [3.0, 50.0], [100.0])
        assert t["by_tier"]["High"]["within_5pct"] == 1.0
        assert t["by_tier"]["Low"]["within_10pct"] == 0.0
        assert t["by_tier"]["Moderate"] == {"n": 0, "within_5pct": 0.0, "count_5pct": 0, "within_10pct": 0.0, "count_10pct": 0}
