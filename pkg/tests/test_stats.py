"""
統計処理のテスト
"""

import numpy as np
import pytest

from app.analytics.stats import ecdf, ecdf_at, kolmogorov_sf, ks_two_sample
from app.errors import EmptyInput


def _brute_force_d(a, b):
    points = sorted(set(a) | set(b))
    best = 0.0
    for x in points:
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


class TestKS:
    def test_identical_samples(self):
        result = ks_two_sample([1, 2, 3, 4], [1, 2, 3, 4])
        assert result.statistic == 0.0
        assert result.p_value == 1.0

    def test_disjoint_supports(self):
        result = ks_two_sample([0, 0, 0, 0], [1, 1, 1, 1])
        assert result.statistic == 1.0
        assert result.p_value < 0.05

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        a = rng.integers(0, 10, size=100).tolist()
        b = rng.integers(5, 15, size=100).tolist()
        result = ks_two_sample(a, b)
        assert result.statistic == pytest.approx(_brute_force_d(a, b), abs=1e-12)
        assert (result.n_a, result.n_b) == (100, 100)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a = rng.poisson(3, size=60).tolist()
        b = rng.poisson(5, size=40).tolist()
        ab = ks_two_sample(a, b)
        ba = ks_two_sample(b, a)
        assert ab.statistic == pytest.approx(ba.statistic)
        assert ab.p_value == pytest.approx(ba.p_value)
        assert 0.0 <= ab.statistic <= 1.0

    @pytest.mark.parametrize("a, b", [([], [1]), ([1], [])])
    def test_empty_sample(self, a, b):
        with pytest.raises(EmptyInput):
            ks_two_sample(a, b)


class TestKolmogorovSf:
    def test_known_values(self):
        # P(K > 1.36) ≈ 0.05
        assert kolmogorov_sf(1.36) == pytest.approx(0.049, abs=0.002)
        assert kolmogorov_sf(0.0) == 1.0

    def test_branches_agree_near_switch(self):
        assert kolmogorov_sf(1.1799) == pytest.approx(kolmogorov_sf(1.1801), abs=1e-3)

    def test_monotone(self):
        values = [kolmogorov_sf(x / 10) for x in range(1, 30)]
        assert all(b <= a for a, b in zip(values, values[1:]))


class TestEcdf:
    def test_steps(self):
        points = ecdf([3, 1, 1, 2])
        assert points == [(1.0, 0.5), (2.0, 0.75), (3.0, 1.0)]
        assert ecdf_at(points, 0) == 0.0
        assert ecdf_at(points, 2.5) == 0.75

    def test_uniform_median(self):
        points = ecdf(range(1, 101))
        assert ecdf_at(points, 50) == pytest.approx(0.5)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            ecdf([])
