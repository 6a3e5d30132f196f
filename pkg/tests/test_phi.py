import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phiscore.gmm import MixtureModel
from phiscore.phi import (
    PhiComponents,
    PhiScore,
    asymmetry_component,
    assign_tiers,
    compute_phi,
    dispersion_component,
    log_contributions,
    percentile_ranks,
    tail_component,
    tier_counts,
)
from phiscore.robust_stats import QuantileSet


def model(w, mu, s):
    return MixtureModel(np.array(w, float), np.array(mu, float), np.array(s, float) ** 2, 0.0, 0.0, 100)


class TestComponents:
    def test_asymmetry(self):
        assert asymmetry_component(QuantileSet.from_sample([1, 2, 3, 4, 5])) == 1.0
        assert asymmetry_component(QuantileSet(0, 1, 1, 3, 5, 0)) == 2.0

    def test_tail(self, rng):
        assert tail_component(QuantileSet.from_sample([2.0] * 10)) == 1.0
        z = rng.standard_normal(400_000)
        assert tail_component(QuantileSet.from_sample(z)) == pytest.approx(1 + math.log(2.4387), abs=0.01)

    def test_dispersion(self):
        assert dispersion_component(model([1.0], [0.0], [0.4])) == pytest.approx(1.4)
        assert dispersion_component(model([0.8, 0.2], [0, 10], [1, 1])) == pytest.approx(1 + 0.8 + 0.2 * math.log(11))
        # dominant component need not be first
        assert dispersion_component(model([0.2, 0.8], [-10, 0], [1, 1])) == pytest.approx(1 + 0.8 + 0.2 * math.log(11))

    def test_compute_phi(self):
        q = QuantileSet.from_sample(np.linspace(-1, 1, 101))
        c = compute_phi(model([0.5, 0.5], [-0.5, 0.5], [0.2, 0.2]), q)
        assert c.M == 2 and c.A == pytest.approx(1.0)
        assert c.phi == pytest.approx(c.M * c.A * c.T * c.D)

    def test_identity_product(self):
        assert PhiComponents(1, 1.0, 1.0, 1.0).phi == 1.0


class TestContributions:
    def test_single_factor(self):
        contrib, ok = log_contributions(PhiComponents(1, 1.0, 3.7, 1.0))
        assert ok and contrib == pytest.approx({"M": 0.0, "A": 0.0, "T": 100.0, "D": 0.0}, abs=1e-12)

    def test_degenerate(self):
        contrib, ok = log_contributions(PhiComponents(1, 1.0, 1.0, 1.0))
        assert not ok and set(contrib.values()) == {0.0}

    def test_published_shape(self):
        c = PhiComponents(3, 1.0, 1.0, 6.854 / 3)
        assert log_contributions(c)[0]["M"] == pytest.approx(100 * math.log(3) / math.log(6.854))

    @settings(max_examples=500)
    @given(
        st.integers(1, 4),
        st.floats(1, 2),
        st.floats(1, 30),
        st.floats(1, 60),
    )
    def test_identity(self, m, a, t, d):
        c = PhiComponents(m, a, t, d)
        logs = sum(math.log(v) for v in c.values().values())
        assert math.exp(logs) == pytest.approx(c.phi, rel=1e-12)
        contrib, ok = log_contributions(c)
        if ok:
            assert sum(contrib.values()) == pytest.approx(100.0, abs=1e-9)


class TestPercentiles:
    def test_max_is_100(self):
        p = percentile_ranks([3.0, 1.0, 2.0])
        assert p.max() == 100.0 and list(p) == pytest.approx([100, 100 / 3, 200 / 3])

    def test_ties(self):
        assert np.all(percentile_ranks([2.0] * 5) == 60.0)

    @given(st.lists(st.floats(1, 100), min_size=1, max_size=50))
    def test_monotone(self, xs):
        p = percentile_ranks(xs)
        order = np.argsort(xs)
        assert np.all(np.diff(p[order]) >= 0)

    def test_empty(self):
        with pytest.raises(ValueError):
            percentile_ranks([])


class TestTiers:
    @pytest.mark.parametrize("n,expected", [(119, (12, 24, 83)), (10, (1, 2, 7)), (1, (0, 0, 1)), (9, (0, 0, 9)), (25, (3, 5, 17))])
    def test_counts(self, n, expected):
        assert tier_counts(n) == expected

    @given(st.integers(10, 2000))
    def test_sum_and_high(self, n):
        h, m, low = tier_counts(n)
        assert h + m + low == n
        assert h == math.floor(n * 0.1 + 0.5)

    def test_assign(self):
        scores = [PhiScore(f"S-{i:02d}", PhiComponents(1, 1.0, 1.0 + i / 10, 1.0)) for i in range(20)]
        ranked = assign_tiers(scores)
        assert [s.tier for s in ranked].count("High") == 2
        assert [s.tier for s in ranked].count("Moderate") == 4
        assert ranked[0].supplier == "S-19" and ranked[0].percentile == 100.0

    def test_boundary_tie_is_deterministic(self):
        scores = [PhiScore(f"S-{c}", PhiComponents(1, 1.0, 2.0, 1.0)) for c in "dcba"]
        scores += [PhiScore(f"S-x{i}", PhiComponents(1, 1.0, 1.5, 1.0)) for i in range(8)]
        ranked = assign_tiers(scores)
        assert [s.supplier for s in ranked if s.tier == "High"] == ["S-a"]

    def test_small_cohort_all_low(self, caplog):
        scores = [PhiScore(f"S-{i}", PhiComponents(1, 1.0, 1.0 + i, 1.0)) for i in range(5)]
        assert {s.tier for s in assign_tiers(scores)} == {"Low"}
        assert "too small" in caplog.text
