import numpy as np
import pytest
from scipy import stats

from qsysid.errors import DegenerateIntervalError, DomainError
from qsysid.samplers import (Stream, make_rng, sample_gamma, sample_mvn, sample_truncated_normal,
                             sample_truncated_normal_array, standard_truncated_normal)

DRAWS = 200_000

## (mu, sigma2, lower, upper)
INTERVALS = [
    (0.0, 1.0, -np.inf, np.inf),
    (0.0, 1.0, -1.0, 1.0),
    (0.0, 1.0, -0.1, 0.1),
    (0.0, 1.0, 2.0, np.inf),
    (0.0, 1.0, 2.0, 2.2),
    (0.0, 1.0, 8.0, np.inf),
    (0.0, 1.0, -np.inf, -3.0),
    (1.5, 4.0, 2.0, 3.0),
    (-2.0, 0.25, 0.5, np.inf),
    (0.3, 0.04, -np.inf, 0.0),
]


class TestMakeRng:

    def test_reproducible(self):
        a = make_rng(42, Stream.CHAIN).standard_normal(5)
        b = make_rng(42, Stream.CHAIN).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_substreams_differ(self):
        a = make_rng(42, Stream.INPUT).standard_normal(5)
        b = make_rng(42, Stream.NOISE).standard_normal(5)
        assert not np.array_equal(a, b)


class TestTruncatedNormal:

    @pytest.mark.parametrize("mu, sigma2, lower, upper", INTERVALS)
    def test_moments(self, mu, sigma2, lower, upper):
        rng = make_rng(5, Stream.CHAIN)
        x = sample_truncated_normal_array(np.full(DRAWS, mu), sigma2, lower, upper, rng)
        sigma = np.sqrt(sigma2)
        law = stats.truncnorm((lower - mu) / sigma, (upper - mu) / sigma, loc=mu, scale=sigma)

        assert np.all((x > lower) & (x < upper))
        assert abs(x.mean() - law.mean()) < 3.0 * np.sqrt(law.var() / DRAWS)
        assert x.var() == pytest.approx(law.var(), rel=0.04)

    def test_mixed_intervals_in_one_call(self):
        rng = make_rng(9, Stream.CHAIN)
        lower = np.array([-np.inf, 1.0, -0.5, 3.0])
        upper = np.array([0.0, np.inf, 0.5, 3.01])
        x = sample_truncated_normal_array(np.zeros((5000, 4)), 1.0, lower, upper, rng)
        assert x.shape == (5000, 4)
        assert np.all((x > lower) & (x < upper))

    def test_reproducible(self):
        args = (np.zeros(100), 1.0, 1.0, np.inf)
        a = sample_truncated_normal_array(*args, make_rng(1, Stream.CHAIN))
        b = sample_truncated_normal_array(*args, make_rng(1, Stream.CHAIN))
        np.testing.assert_array_equal(a, b)

    def test_scalar(self):
        x = sample_truncated_normal(0.0, 1.0, 0.0, 1.0, make_rng(0))
        assert isinstance(x, float)
        assert 0.0 < x < 1.0

    @pytest.mark.parametrize("lower, upper", [(1e5, 2e5), (1e5, np.inf), (-np.inf, -1e5)])
    def test_far_tail_with_tiny_variance(self, lower, upper):
        x = sample_truncated_normal_array(np.zeros(50), 1e-300, lower, upper, make_rng(6))
        assert np.all(np.isfinite(x))
        assert np.all((x > lower) & (x < upper))

    def test_huge_standardized_bound(self):
        x = standard_truncated_normal(np.full(10, 1e200), np.inf, make_rng(6))
        assert np.all(x >= 1e200)

    def test_overflowing_bounds_rejected(self):
        with pytest.raises(DomainError):
            sample_truncated_normal(0.0, 1e-320, 1e200, np.inf, make_rng(0))

    @pytest.mark.parametrize("lower, upper", [(1.0, 1.0), (2.0, 1.0), (np.nan, 1.0)])
    def test_degenerate_interval(self, lower, upper):
        with pytest.raises(DegenerateIntervalError):
            sample_truncated_normal(0.0, 1.0, lower, upper, make_rng(0))

    @pytest.mark.parametrize("mu, sigma2", [(0.0, 0.0), (0.0, -1.0), (np.inf, 1.0)])
    def test_bad_parameters(self, mu, sigma2):
        with pytest.raises(DomainError):
            sample_truncated_normal(mu, sigma2, -1.0, 1.0, make_rng(0))


class TestGamma:

    @pytest.mark.parametrize("shape, rate", [(25.0, 4.0), (0.5, 0.1), (100.0, 250.0)])
    def test_moments(self, shape, rate):
        rng = make_rng(3)
        x = np.array([sample_gamma(shape, rate, rng) for _ in range(DRAWS)])
        mean, var = shape / rate, shape / rate ** 2
        assert abs(x.mean() - mean) < 3.0 * np.sqrt(var / x.size)
        assert x.var() == pytest.approx(var, rel=0.08)

    @pytest.mark.parametrize("shape, rate", [(0.0, 1.0), (1.0, 0.0), (1.0, -2.0), (np.nan, 1.0)])
    def test_rejects(self, shape, rate):
        with pytest.raises(DomainError):
            sample_gamma(shape, rate, make_rng(0))


class TestMultivariateNormal:

    def test_covariance(self):
        rng = make_rng(4)
        cov = np.array([[2.0, 0.6], [0.6, 1.0]])
        factor = np.linalg.cholesky(cov)
        mean = np.array([1.0, -1.0])
        x = np.array([sample_mvn(mean, factor, rng) for _ in range(40_000)])
        np.testing.assert_allclose(x.mean(axis=0), mean, atol=0.04)
        np.testing.assert_allclose(np.cov(x.T), cov, atol=0.06)

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            sample_mvn(np.zeros(3), np.eye(2), make_rng(0))

    def test_whitened_draws_are_standard_normal(self):
        rng = make_rng(11)
        cov = np.array([[1.0, 0.9, 0.5], [0.9, 1.0, 0.7], [0.5, 0.7, 1.0]])
        factor = np.linalg.cholesky(cov)
        mean = np.array([0.5, 0.0, -2.0])
        x = np.array([sample_mvn(mean, factor, rng) for _ in range(5000)])
        w = np.linalg.solve(factor, (x - mean).T).T
        for column in w.T:
            assert stats.kstest(column, "norm").pvalue > 1e-3
