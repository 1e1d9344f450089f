'''
Seeded random draws: truncated univariate normal, Gamma, multivariate
normal.

Every function takes an explicit `numpy.random.Generator`. Use
`make_rng` to build one from a 64-bit seed and a substream key, so that
(seed, key, call sequence) fixes every draw.

Gamma is parameterized by (shape, RATE) everywhere in this package: the
density is proportional to x**(shape - 1) * exp(-rate * x) and the mean
is shape / rate. NumPy's `Generator.gamma` takes a SCALE, so the
conversion happens only in `sample_gamma`.
'''
from enum import IntEnum

import numpy as np
from scipy.special import ndtr

from qsysid.errors import DegenerateIntervalError, DomainError

## tuning constants for the truncated normal region split
NAIVE_MASS = 0.25


class Stream(IntEnum):
    SYSTEM = 0
    INPUT = 1
    NOISE = 2
    CHAIN = 3


def make_rng(seed, *keys):
    '''
    Generator for substream ``keys`` of ``seed``.

    >>> make_rng(7, Stream.NOISE).standard_normal() == make_rng(7, 2).standard_normal()
    True

    '''
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(sequence))


def _robert_alpha(lo):
    # (lo + sqrt(lo**2 + 4)) / 2 without overflow for huge lo
    return lo / 2.0 + np.hypot(lo, 2.0) / 2.0


def _exponential_width(lo):
    # interval width above which the exponential proposal beats the uniform one
    root = np.hypot(lo, 2.0)
    return 2.0 / (lo + root) * np.exp(0.5 - lo / (lo + root))


def _fill_by_rejection(out, idx, propose):
    pending = idx
    while pending.size:
        z, accepted = propose(pending)
        out[pending[accepted]] = z[accepted]
        pending = pending[~accepted]


def standard_truncated_normal(a, b, rng):
    '''
    Draw x ~ N(0, 1) restricted to (a, b), elementwise.

    Intervals lying on the negative side are mirrored so that tails are
    always handled on the positive side. Region per element:

    - probability mass >= NAIVE_MASS: plain normal rejection
    - contains 0: uniform proposal, ratio exp(-z**2 / 2)
    - positive tail, wide: translated exponential proposal
    - positive tail, narrow: uniform proposal, ratio exp((a**2 - z**2) / 2)

    Pending elements of each region consume the stream in ascending index
    order, region by region.

    '''
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    flip = b <= 0.0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)

    mass = np.where(lo >= 0.0, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
    naive = mass >= NAIVE_MASS
    central = ~naive & (lo < 0.0)
    tail = ~naive & ~central
    with np.errstate(over="ignore", invalid="ignore"):
        wide = hi > lo + _exponential_width(np.where(tail, lo, 0.0))
    exponential = tail & wide
    uniform = (central | tail) & ~exponential

    x = np.empty(lo.shape)
    flat_x = x.reshape(-1)
    lo_f, hi_f = lo.reshape(-1), hi.reshape(-1)

    def propose_naive(k):
        z = rng.standard_normal(k.size)
        return z, (z > lo_f[k]) & (z < hi_f[k])

    def propose_uniform(k):
        l, h = lo_f[k], hi_f[k]
        z = rng.uniform(l, h)
        log_ratio = np.where(l > 0.0, (l - z) * (l + z) / 2.0, -z ** 2 / 2.0)
        u = rng.uniform(size=k.size)
        return z, (np.log(u) <= log_ratio) & (z > l) & (z < h)

    def propose_exponential(k):
        l, h = lo_f[k], hi_f[k]
        alpha = _robert_alpha(l)
        z = l + rng.exponential(1.0 / alpha)
        u = rng.uniform(size=k.size)
        return z, (np.log(u) <= -((z - alpha) ** 2) / 2.0) & (z < h)

    _fill_by_rejection(flat_x, np.flatnonzero(naive.reshape(-1)), propose_naive)
    _fill_by_rejection(flat_x, np.flatnonzero(uniform.reshape(-1)), propose_uniform)
    _fill_by_rejection(flat_x, np.flatnonzero(exponential.reshape(-1)), propose_exponential)

    return np.where(flip, -x, x)


def sample_truncated_normal_array(mu, sigma2, lower, upper, rng):
    '''Vectorized `sample_truncated_normal`; arguments broadcast together.'''
    mu, sigma2, lower, upper = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (mu, sigma2, lower, upper)))
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma2))) or np.any(sigma2 <= 0):
        raise DomainError("truncated normal needs finite mu and finite positive sigma2")
    if np.any(np.isnan(lower)) or np.any(np.isnan(upper)) or np.any(lower >= upper):
        raise DegenerateIntervalError("truncation interval must satisfy lower < upper")

    sigma = np.sqrt(sigma2)
    with np.errstate(over="ignore", invalid="ignore"):
        a = (lower - mu) / sigma
        b = (upper - mu) / sigma
    if np.any(np.isfinite(lower) & ~np.isfinite(a)) or np.any(np.isfinite(upper) & ~np.isfinite(b)):
        raise DomainError("standardized truncation bounds overflow; sigma2 is too small")
    z = mu + sigma * standard_truncated_normal(a, b, rng)
    # rounding in the affine map must not land on an endpoint
    return np.clip(z, np.nextafter(lower, np.inf), np.nextafter(upper, -np.inf))


def sample_truncated_normal(mu, sigma2, lower, upper, rng):
    '''
    Draw from N(mu, sigma2) restricted to the open interval (lower, upper).

    Parameters
    ----------
    mu : float
    sigma2 : float
        variance, > 0
    lower, upper : float
        endpoints, may be -inf / +inf
    rng : numpy.random.Generator

    Returns
    -------
    float

    '''
    return float(sample_truncated_normal_array(mu, sigma2, lower, upper, rng).reshape(-1)[0])


def sample_gamma(shape, rate, rng):
    '''Gamma draw with mean shape / rate and variance shape / rate**2.'''
    if not (np.isfinite(shape) and np.isfinite(rate)) or shape <= 0 or rate <= 0:
        raise DomainError(f"Gamma needs shape > 0 and rate > 0, got ({shape!r}, {rate!r})")
    return float(rng.gamma(shape, 1.0 / rate))


def sample_mvn(mean, cov_factor, rng):
    '''mean + cov_factor @ w with w standard normal.'''
    mean = np.asarray(mean, dtype=float)
    cov_factor = np.asarray(cov_factor, dtype=float)
    if mean.ndim != 1 or cov_factor.shape != (mean.size, mean.size):
        raise DomainError(
            f"covariance factor {cov_factor.shape} does not match mean of length {mean.size}")
    return mean + cov_factor @ rng.standard_normal(mean.size)
