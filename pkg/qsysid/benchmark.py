'''
Monte Carlo comparison of the Gibbs estimator against LS and SS-ML,
on quantized data and, as oracles, on the latent output.
'''
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from functools import partial
from typing import Optional

import numpy as np
import pandas as pd

from qsysid.baselines import ls_estimate, ssml_estimate
from qsysid.errors import (ConfigError, DomainError, EmptySummaryError, QsysidError,
                           UndefinedScoreError)
from qsysid.gibbs import ChainConfig, run_chain
from qsysid.quantizer import QuantizerSpec, parse_quantizer
from qsysid.simulate import CSV_FLOAT_FORMAT, SimulationConfig, synthesize, toeplitz_regressor

LOGGER = logging.getLogger(__name__)

MASK64 = 2 ** 64 - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
RESULT_COLUMNS = ["run", "seed", "estimator", "fit", "wall_time_s", "beta_used"]


class EstimatorId(str, Enum):
    BQGS = "BQGS"
    SSML = "SSML"
    LS = "LS"
    SSML_NQ = "SSML_NQ"
    LS_NQ = "LS_NQ"


ALL_ESTIMATORS = tuple(EstimatorId)


def parse_estimators(text):
    names = [s.strip().upper() for s in text.split(",") if s.strip()] if isinstance(text, str) else text
    try:
        return tuple(EstimatorId(name) for name in names)
    except ValueError as exc:
        raise ConfigError("estimators", str(exc)) from exc


@dataclass(frozen=True)
class Protocol:
    runs: int
    samples: int
    quantizer: QuantizerSpec
    order: int = 50
    snr: float = 10.0
    chain_config: ChainConfig = field(default_factory=ChainConfig)
    estimators: tuple = ALL_ESTIMATORS
    normalize: bool = True

    def __post_init__(self):
        if isinstance(self.quantizer, str):
            object.__setattr__(self, "quantizer", parse_quantizer(self.quantizer))
        object.__setattr__(self, "estimators", parse_estimators(self.estimators))
        if self.runs < 1:
            raise ConfigError("runs", "must be >= 1")
        if not self.estimators:
            raise ConfigError("estimators", "must name at least one estimator")
        if self.samples <= self.order:
            raise ConfigError("samples", f"must exceed order ({self.order})")
        self.simulation_config()

    def simulation_config(self):
        return SimulationConfig(samples=self.samples, quantizer=self.quantizer, order=self.order,
                                snr=self.snr, normalize=self.normalize)


@dataclass
class RunRecord:
    run_index: int
    seed: int
    fit: dict = field(default_factory=dict)
    beta_used: Optional[float] = None
    wall_times: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FitSummary:
    q25: float
    median: float
    q75: float
    iqr: float
    mean: float
    count: int
    failures: int


def splitmix64(state):
    '''One splitmix64 output for a 64-bit state.'''
    z = (state + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def run_seed(base_seed, run_index):
    return splitmix64((int(base_seed) + int(run_index) * GOLDEN_GAMMA) & MASK64)


def fit_score(g_true, g_est):
    '''1 - |g - g_est| / |g - mean(g)|; 1 is perfect, 0 matches the constant mean.'''
    g_true = np.asarray(g_true, dtype=float)
    g_est = np.asarray(g_est, dtype=float)
    if g_true.shape != g_est.shape:
        raise DomainError(f"length mismatch: {g_true.shape} vs {g_est.shape}")

    spread = np.linalg.norm(g_true - np.full(g_true.shape, g_true.mean()))
    if spread == 0.0:
        raise UndefinedScoreError("FIT is undefined for a constant impulse response")
    return float(1.0 - np.linalg.norm(g_true - g_est) / spread)


## estimator table: (dataset, U, protocol, seed) -> (g_hat, beta or None)

def _latent(dataset):
    if dataset.z_true is None:
        raise DomainError("oracle estimators need the latent output z")
    return dataset.z_true


def _bqgs(dataset, U, protocol, seed):
    config = replace(protocol.chain_config, order=protocol.order, seed=seed)
    result = run_chain(dataset, config=config)
    return result.g_hat, result.beta_used


def _ssml(w, U, beta_grid):
    estimate = ssml_estimate(w, U, beta_grid=beta_grid)
    return estimate.g, estimate.beta


ESTIMATORS = {
    EstimatorId.BQGS: _bqgs,
    EstimatorId.SSML: lambda d, U, p, s: _ssml(d.y, U, p.chain_config.beta_grid),
    EstimatorId.LS: lambda d, U, p, s: (ls_estimate(d.y, U).g, None),
    EstimatorId.SSML_NQ: lambda d, U, p, s: _ssml(_latent(d), U, p.chain_config.beta_grid),
    EstimatorId.LS_NQ: lambda d, U, p, s: (ls_estimate(_latent(d), U).g, None),
}


RECORDED_FAILURES = (QsysidError, ArithmeticError, np.linalg.LinAlgError)


def run_single(protocol, base_seed, run_index):
    '''One Monte Carlo run; data and estimator failures are recorded, not raised.'''
    seed = run_seed(base_seed, run_index)
    record = RunRecord(run_index=run_index, seed=seed)
    try:
        dataset = synthesize(protocol.simulation_config(), seed)
        U = toeplitz_regressor(dataset.u, protocol.order)
    except RECORDED_FAILURES as exc:
        LOGGER.warning("run %d: data generation failed: %s", run_index, exc)
        record.errors = {estimator: f"data generation failed: {exc}" for estimator in protocol.estimators}
        return record

    betas = {}
    for estimator in protocol.estimators:
        tick = time.perf_counter()
        try:
            g_hat, beta = ESTIMATORS[estimator](dataset, U, protocol, seed)
            record.fit[estimator] = fit_score(dataset.g_true, g_hat)
            if beta is not None:
                betas[estimator] = beta
        except RECORDED_FAILURES as exc:
            LOGGER.warning("run %d: %s failed: %s", run_index, estimator.value, exc)
            record.errors[estimator] = str(exc)
        record.wall_times[estimator] = time.perf_counter() - tick

    record.beta_used = betas.get(EstimatorId.BQGS, betas.get(EstimatorId.SSML))
    LOGGER.info("run %d done: %s", run_index,
                ", ".join(f"{k.value}={v:.3f}" for k, v in record.fit.items()))
    return record


def run_monte_carlo(protocol, base_seed, threads=1):
    '''
    All runs of ``protocol``, sorted by run index.

    Per-run seeds depend only on (base_seed, run_index), so the output
    does not depend on ``threads``.
    '''
    job = partial(run_single, protocol, base_seed)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(job, range(protocol.runs)))
    else:
        records = [job(k) for k in range(protocol.runs)]
    return sorted(records, key=lambda r: r.run_index)


def summarize(records, estimator):
    '''Type-7 quantiles of the FIT scores of ``estimator`` over successful runs.'''
    estimator = EstimatorId(estimator)
    fits = pd.Series([r.fit[estimator] for r in records if estimator in r.fit], dtype=float)
    failures = sum(1 for r in records if estimator in r.errors)
    if fits.empty:
        raise EmptySummaryError(f"no successful runs for {estimator.value}")

    q25, median, q75 = fits.quantile([0.25, 0.5, 0.75], interpolation="linear")
    return FitSummary(q25=float(q25), median=float(median), q75=float(q75), iqr=float(q75 - q25),
                      mean=float(fits.mean()), count=int(fits.size), failures=failures)


def summary_table(records, estimators=ALL_ESTIMATORS):
    table = {}
    for estimator in estimators:
        try:
            table[estimator.value] = asdict(summarize(records, estimator))
        except EmptySummaryError as exc:
            table[estimator.value] = {"error": str(exc)}
    return table


def records_to_frame(records, estimators=ALL_ESTIMATORS, include_wall_times=True):
    '''Long table, one row per run and estimator; failed fits are NaN.'''
    rows = []
    for record in sorted(records, key=lambda r: r.run_index):
        for estimator in estimators:
            rows.append({
                "run": record.run_index,
                "seed": str(record.seed),
                "estimator": estimator.value,
                "fit": record.fit.get(estimator, np.nan),
                "wall_time_s": record.wall_times.get(estimator, np.nan) if include_wall_times else np.nan,
                "beta_used": np.nan if record.beta_used is None else record.beta_used,
            })
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def write_results_csv(path, frame):
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep="", lineterminator="\n")
