'''
Command-line front end.

    python -m qsysid simulate  --samples 500 --quantizer binary:1.0 --out data.csv
    python -m qsysid identify  --data data.csv --quantizer binary:1.0 --out g_hat.csv
    python -m qsysid benchmark --runs 100 --samples 500 --quantizer binary:1.0 --out results/

Every command writes a manifest JSON next to its outputs that records the
resolved configuration and seeds.
'''
import argparse
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from qsysid import __version__
from qsysid.benchmark import (Protocol, parse_estimators, records_to_frame, run_monte_carlo,
                              summary_table, write_results_csv)
from qsysid.config import load_json_config, resolve_options
from qsysid.errors import (ConfigError, DomainError, InsufficientDataError, InvalidLevelError,
                           QsysidError)
from qsysid.gibbs import ChainConfig, run_chain
from qsysid.quantizer import parse_quantizer
from qsysid.simulate import (CSV_FLOAT_FORMAT, SimulationConfig, read_dataset_csv, synthesize,
                             write_dataset_csv)

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_LEVEL = 4
EXIT_DIMENSION = 5


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _atomic_write(path, write):
    '''Call ``write(handle)`` on a temporary file, then move it onto ``path``.'''
    path = Path(path)
    handle = tempfile.NamedTemporaryFile("w", dir=path.parent or ".", prefix=f".{path.name}.",
                                         suffix=".tmp", delete=False, encoding="utf-8", newline="")
    try:
        with handle:
            write(handle)
        os.replace(handle.name, path)
    except BaseException:
        if os.path.exists(handle.name):
            os.unlink(handle.name)
        raise


def write_csv(path, frame):
    _atomic_write(path, lambda h: frame.to_csv(h, index=False, float_format=CSV_FLOAT_FORMAT,
                                               na_rep="", lineterminator="\n"))


def write_json(path, payload):
    _atomic_write(path, lambda h: h.write(json.dumps(payload, indent=2) + "\n"))


def _json_ready(options):
    return {k: list(v) if isinstance(v, tuple) else v for k, v in options.items()}


def manifest_path(out):
    return Path(out).with_suffix(".manifest.json")


def _quantizer(options):
    try:
        return parse_quantizer(options["quantizer"])
    except DomainError as exc:
        raise ConfigError("quantizer", str(exc)) from exc


def _chain_config(options, seed):
    return ChainConfig(iterations=int(options["iters"]), burn_in=int(options["burnin"]),
                       beta=None if options["beta"] is None else float(options["beta"]),
                       beta_grid=options["beta_grid"], seed=int(seed), order=int(options["order"]),
                       update_sigma2=not options.get("fixed_sigma2", False),
                       credible_mass=float(options.get("credible_mass", 0.95)),
                       store_traces=bool(options.get("store_draws", False)))


## commands

def cmd_simulate(options):
    started = _now()
    config = SimulationConfig(samples=int(options["samples"]), quantizer=_quantizer(options),
                              order=int(options["order"]), snr=float(options["snr"]),
                              normalize=bool(options["normalize"]),
                              include_latent=bool(options["include_latent"]))
    seed = int(options["seed"])
    dataset = synthesize(config, seed)

    out = Path(options["out"])
    _atomic_write(out, lambda h: write_dataset_csv(h, dataset, include_latent=config.include_latent))
    write_json(manifest_path(out), {
        "command": "simulate",
        "version": __version__,
        "config": _json_ready(options),
        "seeds": {"seed": seed},
        "artifacts": {"dataset": str(out)},
        "g_true": dataset.g_true.tolist(),
        "sigma2_true": dataset.sigma2_true,
        "started": started,
        "finished": _now(),
    })
    LOGGER.info("wrote %d samples to %s", dataset.samples, out)
    return EXIT_OK


def cmd_identify(options):
    started = _now()
    quantizer = _quantizer(options)
    config = _chain_config(options, options["seed"])
    dataset = read_dataset_csv(options["data"], quantizer)
    result = run_chain(dataset, config=config)

    out = Path(options["out"])
    artifacts = {"estimate": str(out)}
    write_csv(out, pd.DataFrame({"k": np.arange(1, result.g_hat.size + 1), "g_hat": result.g_hat}))
    if result.g_draws is not None:
        draws_path = out.with_suffix(".draws.csv")
        columns = [f"g{k}" for k in range(1, result.g_hat.size + 1)]
        draws = pd.DataFrame(result.g_draws, columns=columns)
        draws.insert(0, "iteration", np.arange(result.burn_in + 1, result.iterations + 1))
        draws["lambda"] = result.lambda_trace[result.burn_in:]
        draws["sigma2"] = result.sigma2_trace[result.burn_in:]
        write_csv(draws_path, draws)
        artifacts["draws"] = str(draws_path)

    write_json(manifest_path(out), {
        "command": "identify",
        "version": __version__,
        "config": _json_ready(options),
        "seeds": {"chain": config.seed},
        "artifacts": artifacts,
        "diagnostics": {
            "beta_used": result.beta_used,
            "quantile_report": None if result.diagnostics is None else result.diagnostics.to_dict(),
            "traces": result.trace_summary,
            "lambda_mean": result.lambda_mean,
            "sigma2_mean": result.sigma2_mean,
            "credible_mass": config.credible_mass,
            "credible_band": result.credible_band.tolist(),
        },
        "started": started,
        "finished": _now(),
    })
    if result.diagnostics is not None and result.diagnostics.flagged:
        print(f"warning: chain halves disagree (max normalized gap {result.diagnostics.max_gap:.3f})",
              file=sys.stderr)
    return EXIT_OK


def cmd_benchmark(options):
    started = _now()
    seed = int(options["seed"])
    protocol = Protocol(runs=int(options["runs"]), samples=int(options["samples"]),
                        quantizer=_quantizer(options), order=int(options["order"]),
                        snr=float(options["snr"]), chain_config=_chain_config(options, seed),
                        estimators=parse_estimators(options["estimators"]))
    records = run_monte_carlo(protocol, seed, threads=int(options["threads"]))

    out_dir = Path(options["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    results, summary = out_dir / "results.csv", out_dir / "summary.json"
    frame = records_to_frame(records, protocol.estimators,
                             include_wall_times=not options["no_wall_times"])
    _atomic_write(results, lambda h: write_results_csv(h, frame))
    write_json(summary, summary_table(records, protocol.estimators))

    write_json(out_dir / "manifest.json", {
        "command": "benchmark",
        "version": __version__,
        "config": _json_ready(options),
        "seeds": {"base_seed": seed, "runs": [str(r.seed) for r in records]},
        "artifacts": {"results": str(results), "summary": str(summary)},
        "started": started,
        "finished": _now(),
    })
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "identify": cmd_identify, "benchmark": cmd_benchmark}


## argument parsing

def _bool_flag(parser, name, dest, help):
    parser.add_argument(name, dest=dest, action="store_const", const=True, default=None, help=help)


def build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON file of option values; flags take precedence")
    shared.add_argument("--seed", type=int, help="64-bit seed (default 0)")
    shared.add_argument("--threads", type=int, help="worker processes (default: CPU count)")
    shared.add_argument("--out", help="output file (simulate, identify) or directory (benchmark)")
    shared.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for debug output")

    parser = argparse.ArgumentParser(prog="qsysid",
                                     description="Impulse-response identification from quantized data")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[shared], help="generate a random dataset")
    simulate.add_argument("--samples", type=int)
    simulate.add_argument("--quantizer", help="binary:<C> | ceil | identity | custom:<q>:<p>")
    simulate.add_argument("--snr", type=float)
    simulate.add_argument("--order", type=int)
    simulate.add_argument("--no-latent", dest="include_latent", action="store_const", const=False,
                          default=None, help="omit the z column")
    simulate.add_argument("--no-normalize", dest="normalize", action="store_const", const=False,
                          default=None, help="keep the raw impulse-response scale")

    chain = argparse.ArgumentParser(add_help=False)
    chain.add_argument("--iters", type=int)
    chain.add_argument("--burnin", type=int)
    chain.add_argument("--beta", type=float, help="fix beta instead of estimating it")
    chain.add_argument("--beta-grid", help="comma-separated beta candidates")
    chain.add_argument("--order", type=int, help="impulse-response length n")

    identify = sub.add_parser("identify", parents=[shared, chain], help="run the Gibbs sampler")
    identify.add_argument("--data", help="CSV with columns t,u,y")
    identify.add_argument("--quantizer")
    identify.add_argument("--credible-mass", type=float)
    _bool_flag(identify, "--fixed-sigma2", "fixed_sigma2",
               "hold sigma2 at the least-squares residual variance")
    _bool_flag(identify, "--store-draws", "store_draws", "also write retained draws")

    benchmark = sub.add_parser("benchmark", parents=[shared, chain], help="Monte Carlo comparison")
    benchmark.add_argument("--runs", type=int)
    benchmark.add_argument("--samples", type=int)
    benchmark.add_argument("--quantizer")
    benchmark.add_argument("--snr", type=float)
    benchmark.add_argument("--estimators", help="comma-separated subset of BQGS,SSML,LS,SSML_NQ,LS_NQ")
    _bool_flag(benchmark, "--no-wall-times", "no_wall_times", "leave the wall_time_s column blank")
    return parser


def _configure_logging(verbosity):
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv=None):
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)

    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        file_values = load_json_config(args.config) if args.config else {}
        options = resolve_options(args.command, file_values, flags)
        return COMMANDS[args.command](options)
    except InvalidLevelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LEVEL
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QsysidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
