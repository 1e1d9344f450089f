"""Bayesian identification of impulse responses from quantized output data."""

__version__ = "0.1.0"
