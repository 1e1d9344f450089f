'''
Gibbs sampler for impulse-response identification from quantized outputs.

One chain:

1. choose beta (fixed, or grid maximization of the marginal likelihood
   with y standing in for z), start from the SS-ML estimate on y and the
   LS residual variance on y;
2. for i = 1..M draw, in this order,
   z^i      | g^{i-1}, sigma2^{i-1}, y
   lambda^i | g^{i-1}
   sigma2^i | z^i, g^{i-1}
   g^i      | z^i, lambda^i, sigma2^i
3. average g^i over i = M0+1..M.

Example
-------
>>> from qsysid.gibbs import ChainConfig, run_chain
>>> result = run_chain(dataset, config=ChainConfig(seed=1))   # doctest: +SKIP
>>> result.g_hat.shape                                        # doctest: +SKIP
(50,)

'''
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from statsmodels.tsa.stattools import acf

from qsysid.baselines import (DEFAULT_BETA_GRID, MarginalLikelihoodObjective, default_lambda_grid,
                              empirical_noise_variance, search_hyperparameters, ssml_estimate)
from qsysid.conditionals import (GibbsState, compute_posterior_gains, sample_g_conditional,
                                 sample_lambda_conditional, sample_sigma2_conditional,
                                 sample_z_conditional)
from qsysid.errors import (BudgetExceededError, ChainError, ConfigError, DegenerateResidualError,
                           InsufficientDataError, InsufficientDrawsError, QsysidError)
from qsysid.kernel import build_kernel, kernel_factor
from qsysid.samplers import Stream, make_rng
from qsysid.simulate import toeplitz_regressor

LOGGER = logging.getLogger(__name__)

QUANTILES = (0.25, 0.5, 0.75)
GAP_THRESHOLD = 0.3
MIN_DRAWS = 100
PROGRESS_EVERY = 500
MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 3000
    burn_in: int = 1000
    beta: Optional[float] = None
    beta_grid: tuple = DEFAULT_BETA_GRID
    seed: int = 0
    store_traces: bool = False
    order: int = 50
    update_lambda: bool = True
    update_sigma2: bool = True
    lam: Optional[float] = None
    sigma2: Optional[float] = None
    iteration_time_cap: Optional[float] = None
    credible_mass: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "beta_grid", tuple(float(b) for b in self.beta_grid))
        if self.iterations < 1:
            raise ConfigError("iters", "must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigError("burnin", "must satisfy 0 <= burnin < iters")
        if self.beta is not None and not 0.0 < self.beta < 1.0:
            raise ConfigError("beta", "must lie in (0, 1)")
        if self.beta is None:
            if not self.beta_grid:
                raise ConfigError("beta_grid", "must be nonempty when beta is not fixed")
            if any(not 0.0 < b < 1.0 for b in self.beta_grid):
                raise ConfigError("beta_grid", "values must lie in (0, 1)")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if self.order < 1:
            raise ConfigError("order", "must be >= 1")
        if not self.update_lambda and self.lam is None:
            raise ConfigError("lam", "a fixed lambda is required when lambda updates are off")
        if self.lam is not None and not self.lam > 0:
            raise ConfigError("lam", "must be > 0")
        if self.sigma2 is not None and not self.sigma2 > 0:
            raise ConfigError("sigma2", "must be > 0")
        if self.iteration_time_cap is not None and not self.iteration_time_cap > 0:
            raise ConfigError("iteration_time_cap", "must be > 0")
        if not 0.0 < self.credible_mass < 1.0:
            raise ConfigError("credible_mass", "must lie in (0, 1)")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class QuantileReport:
    '''
    Half-versus-half comparison of the 0.25 / 0.5 / 0.75 quantiles of
    the retained draws, per impulse-response coordinate.

    Gaps are absolute quantile differences divided by the posterior
    standard deviation of the coordinate.
    '''

    first_half: np.ndarray
    second_half: np.ndarray
    normalized_gaps: np.ndarray
    max_gap: float
    threshold: float = GAP_THRESHOLD

    @property
    def flagged(self):
        return self.max_gap > self.threshold

    def to_dict(self):
        return {
            "quantiles": list(QUANTILES),
            "first_half": self.first_half.tolist(),
            "second_half": self.second_half.tolist(),
            "max_normalized_gap": self.max_gap,
            "threshold": self.threshold,
            "flagged": self.flagged,
        }


@dataclass
class ChainResult:
    g_hat: np.ndarray
    beta_used: float
    diagnostics: Optional[QuantileReport]
    credible_band: np.ndarray
    lambda_mean: float
    sigma2_mean: float
    g_init: np.ndarray
    sigma2_init: float
    iterations: int
    burn_in: int
    elapsed_s: float
    g_draws: Optional[np.ndarray] = None
    lambda_trace: Optional[np.ndarray] = None
    sigma2_trace: Optional[np.ndarray] = None
    trace_summary: dict = field(default_factory=dict)
    final_state: Optional[GibbsState] = None


def estimate_beta(y, U, beta_grid=DEFAULT_BETA_GRID, lambda_grid=None):
    '''
    beta minimizing the marginal-likelihood objective with y in place of
    z; sigma2 is held at the LS residual variance of y and lambda is
    profiled on its grid.
    '''
    sigma2 = empirical_noise_variance(y, U)
    if not sigma2 > 0:
        raise DegenerateResidualError("LS residual variance of y is zero")
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(y)

    fit = search_hyperparameters(MarginalLikelihoodObjective(y, U, sigma2), beta_grid, lambda_grid)
    LOGGER.info("estimated beta = %.3f (lambda = %.4g)", fit.beta, fit.lam)
    return fit.beta


def initialize(y, U, beta):
    '''Starting point (g0, sigma2_0): SS-ML on y at this beta, LS residual variance of y.'''
    samples, n = U.shape
    if samples <= n:
        raise InsufficientDataError(samples, n)

    sigma2_0 = empirical_noise_variance(y, U)
    if not sigma2_0 > 0:
        raise DegenerateResidualError("LS residual variance of y is zero")
    g0 = ssml_estimate(y, U, beta_grid=(beta,), sigma2=sigma2_0).g
    LOGGER.info("initial sigma2 = %.4g, |g0| = %.4g", sigma2_0, np.linalg.norm(g0))
    return g0, sigma2_0


def diagnostics(g_draws, threshold=GAP_THRESHOLD):
    '''
    QuantileReport for an (m, n) array of retained draws.

    Raises
    ------
    InsufficientDrawsError
        when fewer than MIN_DRAWS draws are given

    '''
    draws = np.asarray(g_draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    if draws.shape[0] < MIN_DRAWS:
        raise InsufficientDrawsError(f"need at least {MIN_DRAWS} draws, got {draws.shape[0]}")

    half = draws.shape[0] // 2
    first = np.quantile(draws[:half], QUANTILES, axis=0)
    second = np.quantile(draws[half:], QUANTILES, axis=0)
    spread = draws.std(axis=0)
    gap = np.abs(first - second)
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = np.where(spread > 0, gap / spread, np.where(gap > 0, np.inf, 0.0))

    report = QuantileReport(first_half=first, second_half=second, normalized_gaps=normalized,
                            max_gap=float(np.max(normalized)), threshold=threshold)
    if report.flagged:
        LOGGER.warning("quantiles differ between chain halves (max normalized gap %.3f > %.2f)",
                       report.max_gap, threshold)
    return report


def effective_sample_size(trace):
    '''
    Effective sample size of a scalar trace.

    The autocorrelation sum is truncated at the first nonpositive pair
    of consecutive lags.
    '''
    trace = np.asarray(trace, dtype=float)
    m = trace.size
    if m < 4 or np.var(trace) == 0.0:
        return float(m)

    rho = acf(trace, nlags=m - 1, fft=True)
    tau = -1.0
    for k in range(0, m - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(m / max(tau, 1.0 / m))


def _trace_summary(values):
    return {
        "mean": float(np.mean(values)),
        "q25": float(np.quantile(values, 0.25)),
        "median": float(np.median(values)),
        "q75": float(np.quantile(values, 0.75)),
        "ess": effective_sample_size(values),
    }


def run_chain(dataset, quantizer=None, config=ChainConfig()):
    '''
    Run one chain on ``dataset`` and return the posterior-mean estimate.

    Parameters
    ----------
    dataset : qsysid.simulate.Dataset
    quantizer : QuantizerSpec, optional
        defaults to ``dataset.quantizer``
    config : ChainConfig

    Returns
    -------
    ChainResult

    '''
    quantizer = quantizer or dataset.quantizer
    y = dataset.y
    U = toeplitz_regressor(dataset.u, config.order)
    samples, n = U.shape
    if samples <= n:
        raise InsufficientDataError(samples, n)

    bounds = None if quantizer.kind == "identity" else quantizer.level_bounds(y)
    beta = config.beta if config.beta is not None else estimate_beta(y, U, config.beta_grid)
    g, sigma2 = initialize(y, U, beta)
    g_init, sigma2_init = g.copy(), sigma2
    if config.sigma2 is not None:
        sigma2 = config.sigma2
    state = GibbsState(z=np.array(y, dtype=float), lam=config.lam, sigma2=sigma2, g=g)

    kernel_chol = kernel_factor(build_kernel(beta, n))
    gram = U.T @ U
    rng = make_rng(config.seed, Stream.CHAIN)

    total, burn_in = config.iterations, config.burn_in
    draws = np.empty((total - burn_in, n))
    lambda_trace = np.empty(total)
    sigma2_trace = np.empty(total)

    LOGGER.info("running chain: M=%d M0=%d beta=%.3f seed=%d", total, burn_in, beta, config.seed)
    started = time.perf_counter()
    for i in range(1, total + 1):
        tick = time.perf_counter()
        try:
            state.z = sample_z_conditional(state.g, state.sigma2, y, U, quantizer, rng,
                                           bounds=bounds)
            if config.update_lambda:
                state.lam = sample_lambda_conditional(state.g, beta, rng, factor=kernel_chol)
            if config.update_sigma2:
                state.sigma2 = sample_sigma2_conditional(state.z, state.g, U, rng)
            gains = compute_posterior_gains(U, state.lam, beta, state.sigma2, gram=gram,
                                            kernel_chol=kernel_chol)
            state.g = sample_g_conditional(state.z, gains, rng)
        except QsysidError as exc:
            raise ChainError(str(exc), iteration=i) from exc

        spent = time.perf_counter() - tick
        if config.iteration_time_cap is not None and spent > config.iteration_time_cap:
            raise BudgetExceededError(i, spent, config.iteration_time_cap)

        lambda_trace[i - 1] = state.lam
        sigma2_trace[i - 1] = state.sigma2
        if i > burn_in:
            draws[i - burn_in - 1] = state.g
        if i % PROGRESS_EVERY == 0:
            LOGGER.debug("iteration %d: lambda=%.4g sigma2=%.4g", i, state.lam, state.sigma2)

    elapsed = time.perf_counter() - started
    LOGGER.info("chain finished in %.2f s", elapsed)

    report = None
    if draws.shape[0] >= MIN_DRAWS:
        report = diagnostics(draws)
    else:
        LOGGER.info("only %d retained draws, skipping quantile diagnostics", draws.shape[0])

    mass = config.credible_mass
    band = np.quantile(draws, [(1.0 - mass) / 2.0, (1.0 + mass) / 2.0], axis=0)
    kept_lambda, kept_sigma2 = lambda_trace[burn_in:], sigma2_trace[burn_in:]

    return ChainResult(
        g_hat=draws.mean(axis=0),
        beta_used=float(beta),
        diagnostics=report,
        credible_band=band,
        lambda_mean=float(np.mean(kept_lambda)),
        sigma2_mean=float(np.mean(kept_sigma2)),
        g_init=g_init,
        sigma2_init=float(sigma2_init),
        iterations=total,
        burn_in=burn_in,
        elapsed_s=elapsed,
        g_draws=draws if config.store_traces else None,
        lambda_trace=lambda_trace if config.store_traces else None,
        sigma2_trace=sigma2_trace if config.store_traces else None,
        trace_summary={"lambda": _trace_summary(kept_lambda),
                       "sigma2": _trace_summary(kept_sigma2)},
        final_state=state,
    )
