'''
Known output quantizers.

A quantizer maps a latent value x to a level p_k when x lies in the
level's interval. Four kinds are supported:

- ``binary:<C>``: x >= C -> 1, x < C -> -1, intervals (-inf, C) and [C, inf)
- ``ceil``: smallest integer >= x, interval (p - 1, p]
- ``custom:<q1,...,q_{Q-1}>:<p1,...,pQ>``: intervals (q_{k-1}, q_k] with
  q_0 = -inf and q_Q = +inf
- ``identity``: pass-through, interval (p, p)

Every kind except binary is closed on the right.
'''
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from qsysid.errors import (DomainError, IdentifiabilityWarning, InvalidLevelError,
                           OutOfRangeError)

KINDS = ("binary", "ceil", "custom", "identity")


@dataclass(frozen=True)
class QuantizerSpec:
    kind: str
    threshold: float = 0.0
    thresholds: tuple = field(default=())
    levels: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown quantizer kind {self.kind!r}")

        if self.kind == "binary":
            if not math.isfinite(self.threshold):
                raise DomainError("binary threshold must be finite")
            if self.threshold == 0.0:
                warnings.warn(
                    "binary quantizer with threshold 0 determines the system only up to a "
                    "scaling factor; use a nonzero threshold for identifiability",
                    IdentifiabilityWarning,
                    stacklevel=3,
                )

        if self.kind == "custom":
            q = np.asarray(self.thresholds, dtype=float)
            p = np.asarray(self.levels, dtype=float)
            if q.ndim != 1 or q.size < 2:
                raise DomainError("custom quantizer needs at least two thresholds")
            if np.any(np.isnan(q)) or np.any(np.diff(q) <= 0):
                raise DomainError("custom thresholds must be strictly increasing")
            if p.size != q.size - 1:
                raise DomainError("custom quantizer needs one level per interval")
            if not np.all(np.isfinite(p)) or np.unique(p).size != p.size:
                raise DomainError("custom levels must be finite and pairwise distinct")

    @classmethod
    def binary(cls, threshold=1.0):
        return cls(kind="binary", threshold=float(threshold))

    @classmethod
    def ceil(cls):
        return cls(kind="ceil")

    @classmethod
    def identity(cls):
        return cls(kind="identity")

    @classmethod
    def custom(cls, thresholds, levels):
        return cls(kind="custom",
                   thresholds=tuple(float(q) for q in thresholds),
                   levels=tuple(float(p) for p in levels))

    @property
    def closed_side(self):
        return "left" if self.kind == "binary" else "right"

    def __str__(self):
        if self.kind == "binary":
            return f"binary:{self.threshold!r}"
        if self.kind == "custom":
            inner = ",".join(repr(q) for q in self.thresholds[1:-1])
            return f"custom:{inner}:{','.join(repr(p) for p in self.levels)}"
        return self.kind

    def quantize_array(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError("quantizer input must be finite")

        if self.kind == "binary":
            return np.where(x >= self.threshold, 1.0, -1.0)
        if self.kind == "ceil":
            return np.ceil(x)
        if self.kind == "identity":
            return x.copy()

        q = np.asarray(self.thresholds)
        idx = np.searchsorted(q, x, side="left")
        outside = (idx == 0) | (idx == q.size)
        if np.any(outside):
            raise OutOfRangeError(x[outside].ravel()[0].item())
        return np.asarray(self.levels)[idx - 1]

    def level_bounds(self, levels):
        '''
        Interval endpoints for an array of levels.

        Returns
        -------
        (lower, upper) : arrays shaped like ``levels``

        Raises
        ------
        InvalidLevelError
            listing every index whose value is not a level of this quantizer

        '''
        y = np.asarray(levels, dtype=float)
        finite = np.isfinite(y)

        if self.kind == "binary":
            valid = (y == 1.0) | (y == -1.0)
            lower = np.where(y == 1.0, self.threshold, -np.inf)
            upper = np.where(y == 1.0, np.inf, self.threshold)
        elif self.kind == "ceil":
            valid = finite & (y == np.floor(np.where(finite, y, 0.0)))
            lower, upper = y - 1.0, y.copy()
        elif self.kind == "identity":
            valid = finite
            lower, upper = y.copy(), y.copy()
        else:
            p = np.asarray(self.levels)
            q = np.asarray(self.thresholds)
            order = np.argsort(p)
            pos = np.clip(np.searchsorted(p[order], y), 0, p.size - 1)
            valid = p[order][pos] == y
            k = order[pos]
            lower, upper = q[k], q[k + 1]

        if not np.all(valid):
            rows = np.flatnonzero(~np.asarray(valid).ravel())
            raise InvalidLevelError(rows, levels=y.ravel()[rows].tolist())
        return np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)


def quantize(spec, x):
    '''Level of the interval containing ``x``.'''
    return float(spec.quantize_array(float(x)))


def level_interval(spec, level):
    '''(lower, upper) such that quantize(spec, x) == level iff x is inside.'''
    lower, upper = spec.level_bounds(np.array([level], dtype=float))
    return float(lower[0]), float(upper[0])


def roundtrip_check(spec, x):
    lower, upper = level_interval(spec, quantize(spec, x))
    if spec.kind == "identity":
        return lower == x
    if spec.closed_side == "left":
        return lower <= x < upper
    return lower < x <= upper


def parse_quantizer(text):
    '''
    Parse the textual grammar used by the CLI and config files.

    >>> str(parse_quantizer("binary:1.0"))
    'binary:1.0'

    '''
    if not isinstance(text, str):
        raise DomainError(f"quantizer must be a string, got {type(text).__name__}")

    parts = text.strip().split(":")
    kind = parts[0].lower()
    try:
        if kind == "binary" and len(parts) == 2:
            return QuantizerSpec.binary(float(parts[1]))
        if kind in ("ceil", "identity") and len(parts) == 1:
            return QuantizerSpec(kind=kind)
        if kind == "custom" and len(parts) == 3:
            inner = [float(v) for v in parts[1].split(",") if v.strip()]
            levels = [float(v) for v in parts[2].split(",") if v.strip()]
            return QuantizerSpec.custom([-np.inf, *inner, np.inf], levels)
    except ValueError as exc:
        raise DomainError(f"cannot parse quantizer {text!r}: {exc}") from exc
    raise DomainError(f"cannot parse quantizer {text!r}")
