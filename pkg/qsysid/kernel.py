'''
First-order stable spline (TC) kernel.

The kernel is the prior covariance of the impulse response,

    K[i, j] = beta ** max(i, j),    i, j = 1, ..., n,

with 1-based indices. Arrays here are 0-based, so the stored entry is

    K[i, j] = beta ** (max(i, j) + 1),    i, j = 0, ..., n - 1.

This is the only place that conversion happens.
'''
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from qsysid.errors import DomainError, FactorizationError

LOGGER = logging.getLogger(__name__)

JITTER_SCALE = 1e-12


@dataclass(frozen=True)
class KernelMatrix:
    n: int
    beta: float
    entries: np.ndarray


def _check_beta(beta):
    if not np.isfinite(beta) or not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta!r}")


def build_kernel(beta, n):
    '''
    Build the TC kernel matrix.

    Parameters
    ----------
    beta : float
        decay rate, 0 < beta < 1
    n : int
        impulse-response length

    Returns
    -------
    KernelMatrix

    '''
    _check_beta(beta)
    if int(n) != n or n < 1:
        raise DomainError(f"kernel size must be a positive integer, got {n!r}")

    n = int(n)
    idx = np.arange(n)
    exponent = np.maximum.outer(idx, idx) + 1
    return KernelMatrix(n=n, beta=float(beta), entries=np.power(float(beta), exponent))


def cholesky_with_jitter(matrix, **context):
    '''
    Lower Cholesky factor of a symmetric positive definite matrix.

    If the plain factorization fails, a single retry is made with
    ``JITTER_SCALE * trace / n`` added to the diagonal. A second failure
    raises `FactorizationError` carrying ``context``.

    '''
    matrix = np.asarray(matrix, dtype=float)
    try:
        return linalg.cholesky(matrix, lower=True, check_finite=False)
    except linalg.LinAlgError:
        pass

    size = matrix.shape[0]
    jitter = JITTER_SCALE * np.trace(matrix) / size
    LOGGER.warning("Cholesky failed, retrying with diagonal jitter %.3e", jitter)
    try:
        return linalg.cholesky(matrix + jitter * np.eye(size), lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise FactorizationError("matrix is not numerically positive definite", **context) from exc


def kernel_factor(K):
    '''Lower-triangular L with L @ L.T == K.entries.'''
    return cholesky_with_jitter(K.entries, beta=K.beta, n=K.n)


def quadratic_form_from_factor(g, factor):
    '''g.T @ inv(L @ L.T) @ g using one triangular solve.'''
    w = linalg.solve_triangular(factor, g, lower=True, check_finite=False)
    return float(w @ w)


def kernel_quadratic_form(g, beta):
    '''
    Evaluate g.T @ inv(K_beta) @ g without forming the inverse.

    Parameters
    ----------
    g : (n,) array
    beta : float

    Returns
    -------
    float
        nonnegative, zero only for g = 0

    '''
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or not np.all(np.isfinite(g)):
        raise DomainError("g must be a finite 1-d vector")

    K = build_kernel(beta, g.shape[0])
    return quadratic_form_from_factor(g, kernel_factor(K))
