'''
Full conditionals of p(z, lambda, sigma2, g | y).

- z_t  | g, sigma2, y_t : N(U_t g, sigma2) truncated to the level interval of y_t
- 1/lambda | g          : Gamma(n / 2, rate = g' K^-1 g / 2)
- 1/sigma2 | z, g       : Gamma(N / 2, rate = v' v / 2), v = z - U g
- g | z, lambda, sigma2 : N(C z, P)

with P = (U'U / sigma2 + (lambda K)^-1)^-1 and C = P U' / sigma2.
'''
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from qsysid.errors import (DegeneratePriorError, DegenerateResidualError, DomainError,
                           FactorizationError)
from qsysid.kernel import (build_kernel, cholesky_with_jitter, kernel_factor,
                           quadratic_form_from_factor)
from qsysid.samplers import sample_gamma, sample_mvn, sample_truncated_normal_array

LOGGER = logging.getLogger(__name__)

RATE_FLOOR = 1e-300


@dataclass(frozen=True)
class PosteriorGains:
    P: np.ndarray
    C: np.ndarray
    P_factor: np.ndarray

    def mean(self, z):
        return self.C @ z


@dataclass
class GibbsState:
    z: np.ndarray
    lam: Optional[float]
    sigma2: float
    g: np.ndarray


def sample_z_conditional(g, sigma2, y, U, quantizer, rng, bounds=None):
    '''
    Latent outputs given g, sigma2 and the quantized data.

    ``bounds`` may carry precomputed ``quantizer.level_bounds(y)``. The
    pass-through quantizer returns y unchanged without touching ``rng``.
    '''
    if quantizer.kind == "identity":
        return np.array(y, dtype=float)

    lower, upper = quantizer.level_bounds(y) if bounds is None else bounds
    return sample_truncated_normal_array(U @ g, sigma2, lower, upper, rng)


def sample_lambda_conditional(g, beta, rng, factor=None):
    '''
    Draw lambda through 1/lambda ~ Gamma(n / 2, g' K^-1 g / 2).

    ``factor`` is an optional cached Cholesky factor of K_beta.
    '''
    g = np.asarray(g, dtype=float)
    if factor is None:
        factor = kernel_factor(build_kernel(beta, g.size))
    quad = quadratic_form_from_factor(g, factor)
    if quad < RATE_FLOOR:
        raise DegeneratePriorError("g is numerically zero, the lambda conditional is improper")
    return 1.0 / sample_gamma(g.size / 2.0, quad / 2.0, rng)


def sample_sigma2_conditional(z, g, U, rng):
    '''Draw sigma2 through 1/sigma2 ~ Gamma(N / 2, v'v / 2), v = z - U g.'''
    v = np.asarray(z, dtype=float) - U @ g
    rss = float(v @ v)
    if rss < RATE_FLOOR:
        raise DegenerateResidualError("residual is numerically zero, the sigma2 conditional is improper")
    return 1.0 / sample_gamma(v.size / 2.0, rss / 2.0, rng)


def compute_posterior_gains(U, lam, beta, sigma2, gram=None, kernel_chol=None):
    '''
    Posterior covariance P and gain C of g given z.

    Parameters
    ----------
    U : (N, n) array
    lam, beta, sigma2 : float
    gram : (n, n) array, optional
        cached U' U
    kernel_chol : (n, n) array, optional
        cached lower Cholesky factor of K_beta

    Returns
    -------
    PosteriorGains

    Notes
    -----
    With N >= n the n x n precision U'U / sigma2 + (lambda K)^-1 is
    factorized. With N < n the equivalent form
    lambda K - lambda K U' (lambda U K U' + sigma2 I)^-1 U lambda K is
    used, which never inverts K.

    '''
    if not (lam > 0 and sigma2 > 0):
        raise DomainError(f"lambda and sigma2 must be > 0, got ({lam!r}, {sigma2!r})")

    samples, n = U.shape
    context = dict(lam=lam, beta=beta, sigma2=sigma2)
    if kernel_chol is None:
        kernel_chol = kernel_factor(build_kernel(beta, n))

    if samples >= n:
        if gram is None:
            gram = U.T @ U
        kernel_inv = linalg.cho_solve((kernel_chol, True), np.eye(n), check_finite=False)
        precision = gram / sigma2 + kernel_inv / lam
        precision_chol = cholesky_with_jitter(precision, **context)
        P = linalg.cho_solve((precision_chol, True), np.eye(n), check_finite=False)
    else:
        prior = lam * (kernel_chol @ kernel_chol.T)
        cross = U @ prior
        output_cov = cross @ U.T + sigma2 * np.eye(samples)
        output_chol = cholesky_with_jitter(output_cov, **context)
        P = prior - cross.T @ linalg.cho_solve((output_chol, True), cross, check_finite=False)

    P = (P + P.T) / 2.0
    if not np.all(np.isfinite(P)):
        raise FactorizationError("posterior covariance is not finite", **context)
    return PosteriorGains(P=P, C=P @ U.T / sigma2, P_factor=cholesky_with_jitter(P, **context))


def sample_g_conditional(z, gains, rng):
    return sample_mvn(gains.mean(z), gains.P_factor, rng)
