'''
Random stable systems, Toeplitz regressors and quantized datasets.
'''
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.linalg import toeplitz
from scipy.signal import lfilter

from qsysid.errors import ConfigError, DegenerateSignalError, DomainError
from qsysid.quantizer import QuantizerSpec, parse_quantizer
from qsysid.samplers import Stream, make_rng

LOGGER = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class TransferFunction:
    '''Discrete-time B(q^-1) / A(q^-1), with A[0] == 1.'''

    numerator: np.ndarray
    denominator: np.ndarray

    @property
    def poles(self):
        return np.roots(self.denominator)

    @property
    def zeros(self):
        return np.roots(np.trim_zeros(self.numerator, "f"))

    def is_stable(self):
        poles = self.poles
        return poles.size == 0 or bool(np.max(np.abs(poles)) < 1.0)


@dataclass
class Dataset:
    u: np.ndarray
    y: np.ndarray
    quantizer: QuantizerSpec
    z_true: Optional[np.ndarray] = None
    g_true: Optional[np.ndarray] = None
    sigma2_true: Optional[float] = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.u.ndim != 1 or self.u.shape != self.y.shape or self.u.size < 1:
            raise DomainError("u and y must be nonempty vectors of equal length")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.y))):
            raise DomainError("dataset entries must be finite")
        if self.z_true is not None:
            self.z_true = np.asarray(self.z_true, dtype=float)
            if self.z_true.shape != self.y.shape:
                raise DomainError("z_true must match y in length")

    @property
    def samples(self):
        return self.y.size


@dataclass(frozen=True)
class SimulationConfig:
    samples: int
    quantizer: QuantizerSpec
    order: int = 50
    snr: float = 10.0
    normalize: bool = True
    zero_pairs: int = 10
    pole_pairs: int = 10
    zero_mag_max: float = 0.95
    pole_mag_max: float = 0.93
    include_latent: bool = True

    def __post_init__(self):
        if isinstance(self.quantizer, str):
            object.__setattr__(self, "quantizer", parse_quantizer(self.quantizer))
        if self.order < 1:
            raise ConfigError("order", "must be >= 1")
        if self.samples < self.order:
            raise ConfigError("samples", f"must be >= order ({self.order})")
        if not self.snr > 0:
            raise ConfigError("snr", "must be > 0")
        if not 0.0 <= self.pole_mag_max < 1.0:
            raise ConfigError("pole_mag_max", "must lie in [0, 1)")
        if self.zero_pairs < 0 or self.pole_pairs < 0:
            raise ConfigError("pole_pairs", "pair counts must be >= 0")


def _conjugate_pair_poly(rng, pairs, mag_max):
    magnitude = rng.uniform(0.0, mag_max, size=pairs)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=pairs)
    roots = magnitude * np.exp(1j * phase)
    return np.atleast_1d(np.real(np.poly(np.concatenate([roots, roots.conj()]))))


def random_system(rng, zero_pairs=10, pole_pairs=10, zero_mag_max=0.95, pole_mag_max=0.93):
    '''
    Random stable system with conjugate-pair zeros and poles.

    Magnitudes are uniform on [0, *_mag_max], phases uniform on [0, 2 pi).
    The numerator is multiplied by one delay so the impulse response
    starts at g_1 (g_0 = 0).
    '''
    if not pole_mag_max < 1.0:
        raise DomainError("pole magnitudes must stay below 1")

    numerator = _conjugate_pair_poly(rng, zero_pairs, zero_mag_max)
    denominator = _conjugate_pair_poly(rng, pole_pairs, pole_mag_max)
    return TransferFunction(numerator=np.concatenate([[0.0], numerator]),
                            denominator=denominator)


def impulse_response(tf, n):
    '''
    Samples g_1..g_n of the impulse response.

    A numerator with a leading zero is already strictly causal and h_0 is
    dropped. Otherwise one delay is imposed, i.e. g_k = h_{k-1}.
    '''
    if int(n) != n or n < 1:
        raise DomainError("impulse-response length must be a positive integer")

    num = np.asarray(tf.numerator, dtype=float)
    den = np.asarray(tf.denominator, dtype=float)
    pulse = np.zeros(int(n) + 1)
    pulse[0] = 1.0
    h = lfilter(num, den, pulse)
    if num[0] == 0.0:
        return h[1:]
    return h[:-1]


def toeplitz_regressor(u, n):
    '''
    N x n matrix with entry (t, k) = u_{t-k}, t = 1..N, k = 1..n.

    Row 1 is (u_0, 0, ..., 0); inputs before time 0 are zero.
    '''
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 1 or int(n) != n or n < 1:
        raise DomainError("toeplitz_regressor needs a nonempty input and n >= 1")

    first_row = np.zeros(int(n))
    first_row[0] = u[0]
    return toeplitz(u, first_row)


def white_noise_input(rng, samples):
    return rng.standard_normal(samples)


def generate_dataset(g, u, snr, quantizer, rng):
    '''
    Noisy quantized outputs of the FIR system g driven by u.

    The noise variance is var(U g) / snr, with the 1/N variance convention.
    '''
    g = np.asarray(g, dtype=float)
    u = np.asarray(u, dtype=float)
    if not snr > 0:
        raise DomainError("snr must be > 0")
    if u.size < g.size:
        raise DomainError(f"need at least n={g.size} input samples, got {u.size}")

    clean = toeplitz_regressor(u, g.size) @ g
    signal_var = float(np.var(clean))
    if signal_var == 0.0:
        raise DegenerateSignalError("noiseless output has zero variance")

    sigma2 = signal_var / snr
    z = clean + np.sqrt(sigma2) * rng.standard_normal(u.size)
    y = quantizer.quantize_array(z)
    return Dataset(u=u, y=y, quantizer=quantizer, z_true=z, g_true=g, sigma2_true=sigma2)


def synthesize(config, seed):
    '''
    One benchmark dataset: random system, unit-norm impulse response,
    white-noise input, noise at the configured SNR.

    The system, input and noise each come from their own substream of
    ``seed``.
    '''
    tf = random_system(make_rng(seed, Stream.SYSTEM),
                       zero_pairs=config.zero_pairs, pole_pairs=config.pole_pairs,
                       zero_mag_max=config.zero_mag_max, pole_mag_max=config.pole_mag_max)
    g = impulse_response(tf, config.order)
    if config.normalize:
        norm = np.linalg.norm(g)
        if norm == 0.0:
            raise DegenerateSignalError("random system has a zero impulse response")
        g = g / norm

    u = white_noise_input(make_rng(seed, Stream.INPUT), config.samples)
    dataset = generate_dataset(g, u, config.snr, config.quantizer, make_rng(seed, Stream.NOISE))
    LOGGER.debug("synthesized dataset seed=%d N=%d sigma2=%.4g", seed, config.samples,
                 dataset.sigma2_true)
    return dataset


## CSV layout: t,u,y[,z]

def dataset_to_frame(dataset, include_latent=True):
    frame = pd.DataFrame({"t": np.arange(1, dataset.samples + 1), "u": dataset.u, "y": dataset.y})
    if include_latent and dataset.z_true is not None:
        frame["z"] = dataset.z_true
    return frame


def write_dataset_csv(path, dataset, include_latent=True):
    dataset_to_frame(dataset, include_latent).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT,
                                                     lineterminator="\n")


def read_dataset_csv(path, quantizer):
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in ("t", "u", "y") if c not in frame.columns]
    if missing:
        raise DomainError(f"dataset file {path} lacks column(s): {', '.join(missing)}")

    frame = frame.sort_values("t")
    z = frame["z"].to_numpy(dtype=float) if "z" in frame.columns else None
    return Dataset(u=frame["u"].to_numpy(dtype=float), y=frame["y"].to_numpy(dtype=float),
                   quantizer=quantizer, z_true=z)
