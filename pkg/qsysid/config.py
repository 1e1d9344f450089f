'''
JSON configuration files for the command-line tools.

A file holds one top-level object whose keys are the flag names of a
command with ``-`` replaced by ``_``. Command-line flags override file
values, and file values override the defaults below.
'''
import json
import logging
import os

from qsysid.baselines import DEFAULT_BETA_GRID
from qsysid.errors import ConfigError

LOGGER = logging.getLogger(__name__)

SHARED_DEFAULTS = {"seed": 0, "threads": None, "out": None}

CHAIN_DEFAULTS = {
    "iters": 3000,
    "burnin": 1000,
    "beta": None,
    "beta_grid": DEFAULT_BETA_GRID,
    "order": 50,
}

COMMAND_DEFAULTS = {
    "simulate": {
        **SHARED_DEFAULTS,
        "samples": None,
        "quantizer": None,
        "snr": 10.0,
        "order": 50,
        "normalize": True,
        "include_latent": True,
    },
    "identify": {
        **SHARED_DEFAULTS,
        **CHAIN_DEFAULTS,
        "data": None,
        "quantizer": None,
        "fixed_sigma2": False,
        "credible_mass": 0.95,
        "store_draws": False,
    },
    "benchmark": {
        **SHARED_DEFAULTS,
        **CHAIN_DEFAULTS,
        "runs": 100,
        "samples": None,
        "quantizer": None,
        "snr": 10.0,
        "estimators": "BQGS,SSML,LS,SSML_NQ,LS_NQ",
        "no_wall_times": False,
    },
}

OPTION_TYPES = {
    **dict.fromkeys(("seed", "threads", "iters", "burnin", "order", "samples", "runs"), int),
    **dict.fromkeys(("beta", "snr", "credible_mass"), float),
    **dict.fromkeys(("normalize", "include_latent", "fixed_sigma2", "store_draws", "no_wall_times"), bool),
}

REQUIRED = {
    "simulate": ("samples", "quantizer", "out"),
    "identify": ("data", "quantizer", "out"),
    "benchmark": ("samples", "quantizer", "out"),
}


def load_json_config(path):
    '''Read one JSON object from ``path``; OSError propagates unchanged.'''
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    try:
        values = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError("config", f"{path} must hold a single JSON object")
    return values


def parse_float_list(field, value):
    '''Comma-separated string or list of numbers -> tuple of floats.'''
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, f"expected a list of numbers, got {value!r}") from exc


def coerce_option(key, value):
    '''Convert ``value`` to the type of option ``key``; None passes through.'''
    kind = OPTION_TYPES.get(key)
    if kind is None or value is None:
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true or false, got {value!r}")
        return value
    if isinstance(value, bool) or (kind is int and isinstance(value, float) and not value.is_integer()):
        raise ConfigError(key, f"expected {kind.__name__}, got {value!r}")
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"expected {kind.__name__}, got {value!r}") from exc


def resolve_options(command, file_values=None, flag_values=None):
    '''
    Merge defaults, config-file values and flags for ``command``.

    Flags whose value is None were not given and do not override.
    Unknown file keys and missing required options raise ConfigError.
    '''
    defaults = COMMAND_DEFAULTS[command]
    options = dict(defaults)

    for key, value in (file_values or {}).items():
        key = key.replace("-", "_")
        if key not in defaults:
            raise ConfigError(key, f"unknown configuration key for {command}")
        options[key] = value

    for key, value in (flag_values or {}).items():
        if key in defaults and value is not None:
            options[key] = value

    for key in options:
        options[key] = coerce_option(key, options[key])
    for key in REQUIRED[command]:
        if options[key] is None:
            raise ConfigError(key, "is required")
    if "beta_grid" in options:
        options["beta_grid"] = parse_float_list("beta_grid", options["beta_grid"])
    if options["threads"] is None:
        options["threads"] = os.cpu_count() or 1
    if options["threads"] < 1:
        raise ConfigError("threads", "must be >= 1")
    if not 0 <= options["seed"] <= 2 ** 64 - 1:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")

    LOGGER.debug("resolved %s options: %s", command, options)
    return options
