'''
Non-sampling estimators: least squares and the empirical-Bayes kernel
estimator (SS-ML). Both accept either the quantized output y or, for
oracle runs, the latent output z.
'''
import logging
from typing import NamedTuple

import numpy as np
import statsmodels.api as sm
from scipy import linalg

from qsysid.conditionals import compute_posterior_gains
from qsysid.errors import (DegenerateResidualError, DomainError, EstimationFailure,
                           FactorizationError, InsufficientDataError)
from qsysid.kernel import build_kernel, cholesky_with_jitter, kernel_factor

LOGGER = logging.getLogger(__name__)

DEFAULT_BETA_GRID = tuple(round(0.30 + 0.02 * k, 2) for k in range(30)) + (0.90, 0.92, 0.95, 0.98)
LAMBDA_GRID_POINTS = 25
LAMBDA_GRID_SPAN = (1e-4, 1e4)
FULL_FORM_MAX_SAMPLES = 1000


class LeastSquaresEstimate(NamedTuple):
    g: np.ndarray
    rank: int
    rank_deficient: bool
    rss: float


class HyperparameterFit(NamedTuple):
    lam: float
    beta: float
    objective: float


class SSMLEstimate(NamedTuple):
    g: np.ndarray
    lam: float
    beta: float
    sigma2: float


def default_lambda_grid(w, points=LAMBDA_GRID_POINTS):
    '''Log-spaced lambda grid scaled by the mean square of ``w``.'''
    w = np.asarray(w, dtype=float)
    scale = float(w @ w) / w.size
    if scale == 0.0:
        scale = 1.0
    return tuple(np.logspace(np.log10(LAMBDA_GRID_SPAN[0]), np.log10(LAMBDA_GRID_SPAN[1]),
                             points) * scale)


def _check_regression(w, U):
    w = np.asarray(w, dtype=float)
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or w.shape != (U.shape[0],):
        raise DomainError(f"data of length {w.shape} does not match regressor {U.shape}")
    return w, U


def ls_estimate(w, U):
    '''
    Minimum-norm least squares solution of U g = w.

    Rank deficiency of U is reported through ``rank_deficient`` rather
    than raised.
    '''
    w, U = _check_regression(w, U)
    samples, n = U.shape
    if samples < n:
        raise InsufficientDataError(samples, n, "least squares needs N >= n")

    ## pinv goes through the SVD and returns the minimum-norm solution
    fit = sm.OLS(w, U).fit(method="pinv")
    rank = int(fit.model.rank)
    if rank < n:
        LOGGER.warning("regressor is rank deficient (rank %d < n = %d)", rank, n)
    return LeastSquaresEstimate(g=np.asarray(fit.params, dtype=float), rank=rank,
                                rank_deficient=rank < n, rss=float(fit.ssr))


def empirical_noise_variance(w, U):
    '''Residual sum of squares of the LS fit over N - n.'''
    w, U = _check_regression(w, U)
    samples, n = U.shape
    if samples <= n:
        raise InsufficientDataError(samples, n)
    return ls_estimate(w, U).rss / (samples - n)


class MarginalLikelihoodObjective:
    '''
    log det S + w' S^-1 w  with  S = lam U K_beta U' + sigma2 I.

    Two algebraically equal evaluations are available:

    ``full``
        Cholesky of the N x N matrix S.
    ``reduced``
        with B = U L (L L' = K_beta) and M = (sigma2 / lam) I + B'B,
        log det S = N log sigma2 + n log(lam / sigma2) + log det M and
        w' S^-1 w = (w'w - c' M^-1 c) / sigma2, c = B'w.

    ``auto`` picks ``full`` up to FULL_FORM_MAX_SAMPLES samples.
    Evaluations are cached per (lam, beta, method).
    '''

    def __init__(self, w, U, sigma2):
        self.w, self.U = _check_regression(w, U)
        if not sigma2 > 0:
            raise DomainError(f"sigma2 must be > 0, got {sigma2!r}")
        self.sigma2 = float(sigma2)
        self.values = {}
        self._kernel_terms = {}
        self._output_grams = {}

    def _terms(self, beta):
        if beta not in self._kernel_terms:
            chol = kernel_factor(build_kernel(beta, self.U.shape[1]))
            B = self.U @ chol
            self._kernel_terms[beta] = (B, B.T @ B, B.T @ self.w)
        return self._kernel_terms[beta]

    def _full(self, lam, beta):
        if beta not in self._output_grams:
            B, _, _ = self._terms(beta)
            self._output_grams[beta] = B @ B.T
        UKU = self._output_grams[beta]
        samples = self.w.size
        S = lam * UKU + self.sigma2 * np.eye(samples)
        chol = cholesky_with_jitter(S, lam=lam, beta=beta, sigma2=self.sigma2)
        alpha = linalg.solve_triangular(chol, self.w, lower=True, check_finite=False)
        return 2.0 * np.sum(np.log(np.diag(chol))) + float(alpha @ alpha)

    def _reduced(self, lam, beta):
        _, BtB, c = self._terms(beta)
        samples, n = self.U.shape
        M = (self.sigma2 / lam) * np.eye(n) + BtB
        chol = cholesky_with_jitter(M, lam=lam, beta=beta, sigma2=self.sigma2)
        alpha = linalg.solve_triangular(chol, c, lower=True, check_finite=False)
        logdet = (samples * np.log(self.sigma2) + n * np.log(lam / self.sigma2)
                  + 2.0 * np.sum(np.log(np.diag(chol))))
        return logdet + (float(self.w @ self.w) - float(alpha @ alpha)) / self.sigma2

    def evaluate(self, lam, beta, method="auto"):
        if not lam > 0:
            raise DomainError(f"lambda must be > 0, got {lam!r}")
        if method == "auto":
            method = "full" if self.w.size <= FULL_FORM_MAX_SAMPLES else "reduced"
        if method not in ("full", "reduced"):
            raise DomainError(f"unknown evaluation method {method!r}")

        key = (float(lam), float(beta), method)
        if key not in self.values:
            evaluate = self._full if method == "full" else self._reduced
            self.values[key] = float(evaluate(float(lam), float(beta)))
        return self.values[key]

    __call__ = evaluate


def marginal_likelihood_objective(w, U, lam, beta, sigma2, method="auto"):
    return MarginalLikelihoodObjective(w, U, sigma2).evaluate(lam, beta, method=method)


def search_hyperparameters(objective, beta_grid, lambda_grid):
    '''
    Grid argmin of ``objective(lam, beta)``.

    Ties go to the smaller beta, then the smaller lambda. Grid points
    whose factorization fails are skipped.
    '''
    best = None
    for beta in sorted(beta_grid):
        for lam in sorted(lambda_grid):
            try:
                value = objective(lam, beta)
            except FactorizationError as exc:
                LOGGER.debug("skipping grid point lam=%.3g beta=%.3g: %s", lam, beta, exc)
                continue
            if np.isfinite(value) and (best is None or value < best.objective):
                best = HyperparameterFit(lam=float(lam), beta=float(beta), objective=value)

    if best is None:
        raise EstimationFailure("marginal likelihood failed at every grid point")
    LOGGER.debug("grid optimum lam=%.4g beta=%.3f objective=%.6g", *best)
    return best


def ssml_estimate(w, U, beta_grid=DEFAULT_BETA_GRID, lambda_grid=None, sigma2=None):
    '''
    Empirical-Bayes kernel estimate.

    sigma2 defaults to `empirical_noise_variance`; (lambda, beta)
    minimize the marginal-likelihood objective on the grids; the
    estimate is the posterior mean C w.

    Returns
    -------
    SSMLEstimate

    '''
    w, U = _check_regression(w, U)
    if sigma2 is None:
        sigma2 = empirical_noise_variance(w, U)
    if not sigma2 > 0:
        raise DegenerateResidualError("noise variance estimate is zero, data are interpolated exactly")
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(w)

    fit = search_hyperparameters(MarginalLikelihoodObjective(w, U, sigma2), beta_grid, lambda_grid)
    gains = compute_posterior_gains(U, fit.lam, fit.beta, sigma2)
    return SSMLEstimate(g=gains.mean(w), lam=fit.lam, beta=fit.beta, sigma2=float(sigma2))
