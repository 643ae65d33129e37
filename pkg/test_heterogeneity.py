"""
Tests for the non-IID severity measures.
"""

import math
from unittest.mock import patch

import numpy as np
import pytest

from errors import DimensionMismatchError, InvalidDistributionError
from heterogeneity import (
    gaussian_mmd,
    gini_coefficient,
    heterogeneity_report,
    jensen_shannon,
    label_distribution,
    median_bandwidth,
)


def _kl_bits(p, q):
    return sum(pi * math.log2(pi / qi) for pi, qi in zip(p, q) if pi > 0)


def _brute_mmd(x, y, gamma):
    def k(a, b):
        return math.exp(-sum((ai - bi) ** 2 for ai, bi in zip(a, b)) / (2 * gamma ** 2))

    kxx = sum(k(a, b) for a in x for b in x) / len(x) ** 2
    kyy = sum(k(a, b) for a in y for b in y) / len(y) ** 2
    kxy = sum(k(a, b) for a in x for b in y) / (len(x) * len(y))
    return math.sqrt(max(kxx + kyy - 2 * kxy, 0.0))


class TestJensenShannon:
    """Test base-2 Jensen-Shannon divergence."""

    def test_identical(self):
        assert jensen_shannon([0.5, 0.5], [0.5, 0.5]) == 0.0

    def test_disjoint_is_one(self):
        assert jensen_shannon([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=1e-12)

    def test_direct_formula(self):
        """Test against 0.5 KL(p||m) + 0.5 KL(q||m) in bits."""
        p, q = [0.545, 0.455], [0.388, 0.612]
        m = [(a + b) / 2 for a, b in zip(p, q)]
        expected = 0.5 * _kl_bits(p, m) + 0.5 * _kl_bits(q, m)
        assert jensen_shannon(p, q) == pytest.approx(expected, abs=1e-12)

    def test_properties_on_random_pairs(self):
        """Test symmetry, bounds and zero iff equal on random binary distributions."""
        rng = np.random.default_rng(0)
        for _ in range(200):
            a, b = rng.random(2)
            p, q = [a, 1 - a], [b, 1 - b]
            value = jensen_shannon(p, q)
            assert value == pytest.approx(jensen_shannon(q, p), abs=1e-12)
            assert 0.0 <= value <= 1.0
            if abs(a - b) > 1e-3:
                assert value > 0.0
            assert jensen_shannon(p, p) == 0.0

    def test_invalid_distribution(self):
        with pytest.raises(InvalidDistributionError):
            jensen_shannon([0.7, 0.7], [0.5, 0.5])
        with pytest.raises(InvalidDistributionError):
            jensen_shannon([-0.5, 1.5], [0.5, 0.5])
        with pytest.raises(InvalidDistributionError):
            jensen_shannon([1.0], [0.5, 0.5])

    def test_label_distribution(self):
        assert label_distribution([0, 1, 1, 1]).tolist() == [0.25, 0.75]


class TestMMD:
    """Test the Gaussian-kernel MMD estimator."""

    def test_identical_samples(self):
        x = np.random.default_rng(1).normal(size=(15, 3))
        assert gaussian_mmd(x, x) == pytest.approx(0.0, abs=1e-9)

    def test_single_points_closed_form(self):
        """Test sqrt(2 - 2 exp(-t^2 / 2)) for single points with gamma 1."""
        for t in (0.0, 0.5, 1.0, 2.0, 3.0):
            expected = math.sqrt(2 - 2 * math.exp(-t * t / 2))
            assert gaussian_mmd([[0.0]], [[t]], bandwidth=1.0) == pytest.approx(expected, abs=1e-12)

    def test_brute_force_oracle(self):
        """Test two 20-point 2-D clouds against the double-loop kernel sum."""
        rng = np.random.default_rng(2)
        x = rng.normal(size=(20, 2))
        y = rng.normal(loc=0.7, size=(20, 2))
        gamma = median_bandwidth(x, y)
        expected = _brute_mmd(x.tolist(), y.tolist(), gamma)
        assert gaussian_mmd(x, y) == pytest.approx(expected, abs=1e-9)

    def test_symmetry_and_permutation(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(12, 4))
        y = rng.normal(scale=2.0, size=(9, 4))
        base = gaussian_mmd(x, y)
        assert gaussian_mmd(y, x) == pytest.approx(base, abs=1e-12)
        assert gaussian_mmd(x[rng.permutation(12)], y[rng.permutation(9)]) == pytest.approx(base, abs=1e-12)

    def test_zero_median_falls_back(self):
        x = np.zeros((3, 2))
        assert median_bandwidth(x, x) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            gaussian_mmd(np.zeros((3, 2)), np.zeros((3, 3)))


class TestGini:
    """Test the sample-size Gini coefficient."""

    def test_equal_sizes(self):
        assert gini_coefficient([10, 10, 10, 10]) == 0.0

    def test_pairwise_oracle(self):
        """Test (242, 205, 98, 160) against the pairwise-difference sum."""
        sizes = [242, 205, 98, 160]
        k = len(sizes)
        expected = sum(abs(a - b) for a in sizes for b in sizes) / (2 * k * k * (sum(sizes) / k))
        assert gini_coefficient(sizes) == pytest.approx(expected, abs=1e-12)
        assert gini_coefficient(sizes) == pytest.approx(954 / 5640, abs=1e-12)

    def test_scale_invariance(self):
        sizes = [95, 83, 44, 71]
        for c in (0.5, 3.0, 17.0):
            assert gini_coefficient([c * s for s in sizes]) == pytest.approx(gini_coefficient(sizes), abs=1e-12)

    def test_non_positive_rejected(self):
        with pytest.raises(InvalidDistributionError):
            gini_coefficient([1, 0])


class TestHeterogeneityReport:
    """Test the pairwise report over real client datasets."""

    def test_matrix_invariants(self, clients):
        report = heterogeneity_report(clients)
        jsd = np.array(report.jsd_matrix)
        mmd = np.array(report.mmd_matrix)
        assert report.client_ids == [1, 2, 3, 4]
        assert np.all(np.abs(np.diag(jsd)) <= 1e-12)
        assert np.all(np.abs(np.diag(mmd)) <= 1e-12)
        assert np.allclose(jsd, jsd.T, atol=1e-12)
        assert np.allclose(mmd, mmd.T, atol=1e-12)
        assert 0.0 <= report.gini < 1.0
        assert report.max_mmd >= report.avg_mmd >= 0.0
        assert report.gini == pytest.approx(gini_coefficient([95, 83, 44, 71]))

    def test_summary_logged_with_gini(self, clients):
        """Test the report logs its summary, Gini included, at INFO and raises no warning."""
        with patch("heterogeneity.logger") as mock_logger:
            report = heterogeneity_report(clients)
        message = mock_logger.info.call_args[0][0]
        assert f"Gini {report.gini:.4f}" in message
        mock_logger.warning.assert_not_called()
