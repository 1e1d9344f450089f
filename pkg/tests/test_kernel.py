import logging

import numpy as np
import pytest

from qsysid.errors import DomainError, FactorizationError
from qsysid.kernel import (JITTER_SCALE, build_kernel, cholesky_with_jitter, kernel_factor,
                           kernel_quadratic_form, quadratic_form_from_factor)


class TestBuildKernel:

    def test_small_entries(self):
        K = build_kernel(0.5, 3)
        expected = np.array([[0.5, 0.25, 0.125],
                             [0.25, 0.25, 0.125],
                             [0.125, 0.125, 0.125]])
        np.testing.assert_allclose(K.entries, expected, rtol=0, atol=0)

    @pytest.mark.parametrize("beta", [0.1, 0.5, 0.9, 0.99])
    def test_structure(self, beta):
        K = build_kernel(beta, 30)
        np.testing.assert_array_equal(K.entries, K.entries.T)
        assert np.all(np.diff(np.diag(K.entries)) < 0)
        np.testing.assert_allclose(np.diag(K.entries), beta ** np.arange(1, 31))
        L = kernel_factor(K)
        np.testing.assert_allclose(L @ L.T, K.entries, rtol=1e-10, atol=1e-12)

    def test_near_unit_beta_factors(self):
        K = build_kernel(0.999, 50)
        L = kernel_factor(K)
        residual = np.linalg.norm(L @ L.T - K.entries) / np.linalg.norm(K.entries)
        assert residual < 1e-10

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.2, 1.5, np.nan])
    def test_rejects_beta(self, beta):
        with pytest.raises(DomainError):
            build_kernel(beta, 5)

    @pytest.mark.parametrize("n", [0, -3, 2.5])
    def test_rejects_size(self, n):
        with pytest.raises(DomainError):
            build_kernel(0.5, n)


class TestQuadraticForm:

    def test_scalar_case(self):
        assert kernel_quadratic_form(np.array([1.0]), 0.5) == pytest.approx(2.0)

    def test_zero_vector(self):
        assert kernel_quadratic_form(np.zeros(6), 0.8) == 0.0

    @pytest.mark.parametrize("beta", [0.5, 0.9, 0.99])
    def test_matches_dense_inverse(self, beta):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 21))
            g = rng.standard_normal(n)
            K = build_kernel(beta, n).entries
            brute = float(g @ np.linalg.solve(K, g))
            assert kernel_quadratic_form(g, beta) == pytest.approx(brute, rel=1e-8)

    @pytest.mark.parametrize("beta", [0.5, 0.9])
    def test_same_with_jittered_factor(self, beta):
        g = np.random.default_rng(13).standard_normal(20)
        K = build_kernel(beta, 20).entries
        jittered = np.linalg.cholesky(K + JITTER_SCALE * np.trace(K) / 20 * np.eye(20))
        assert quadratic_form_from_factor(g, jittered) == pytest.approx(kernel_quadratic_form(g, beta),
                                                                        rel=1e-6)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            kernel_quadratic_form(np.array([1.0, np.inf]), 0.5)


class TestCholeskyWithJitter:

    def test_singular_matrix_gets_jitter(self, caplog):
        with caplog.at_level(logging.WARNING, logger="qsysid.kernel"):
            L = cholesky_with_jitter(np.ones((2, 2)))
        assert "jitter" in caplog.text
        np.testing.assert_allclose(L @ L.T, np.ones((2, 2)), atol=1e-10)

    def test_indefinite_matrix_raises(self):
        with pytest.raises(FactorizationError) as info:
            cholesky_with_jitter(np.array([[1.0, 2.0], [2.0, 1.0]]), beta=0.5)
        assert info.value.params == {"beta": 0.5}
        assert "beta=0.5" in str(info.value)
