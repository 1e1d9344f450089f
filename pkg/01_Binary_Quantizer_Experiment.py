## load packages
import pandas as pd
import numpy as np
import os
from qsysid.benchmark import Protocol, run_monte_carlo, records_to_frame
from qsysid.gibbs import ChainConfig

## protocol: binary quantizer with threshold 1, 500 samples, 50 taps, SNR 10
## use runs = 100 for the full sweep; 20 runs take a few minutes
runs = 20
protocol = Protocol(
    runs=runs,
    samples=500,
    quantizer="binary:1.0",
    snr=10.0,
    order=50,
    chain_config=ChainConfig(iterations=3000, burn_in=1000),
)

## run the sweep, or load the cached copy
binary_file = f"./data/mc_binary_{runs}.csv"
if os.path.isfile(binary_file):
    fits_py = pd.read_csv(binary_file)
else:
    records = run_monte_carlo(protocol, base_seed=2024)
    fits_py = records_to_frame(records)
    fits_py.to_csv(binary_file, index=False, float_format="%.17g")

## box-plot numbers for each estimator
fit_summary_py = fits_py.groupby("estimator").agg(
    {"fit": ["count", "mean", "median"], "wall_time_s": ["mean"]}
)
fit_summary_py.columns = list(map("_".join, fit_summary_py.columns))
fit_summary_py.reset_index(inplace=True)

quartiles_py = (
    fits_py.groupby("estimator")["fit"].quantile([0.25, 0.75]).unstack().reset_index()
)
quartiles_py.columns = ["estimator", "fit_q25", "fit_q75"]
fit_summary_py = fit_summary_py.merge(quartiles_py, on="estimator")
fit_summary_py["fit_iqr"] = fit_summary_py["fit_q75"] - fit_summary_py["fit_q25"]
print(fit_summary_py.sort_values("fit_median", ascending=False))

## how often does the sampler beat the kernel baseline on the same run?
wide_py = fits_py.pivot(index="run", columns="estimator", values="fit")
print(
    "BQGS > SSML in",
    int(np.sum(wide_py["BQGS"] > wide_py["SSML"])),
    "of",
    len(wide_py),
    "runs",
)
print(
    "BQGS > LS in",
    int(np.sum(wide_py["BQGS"] > wide_py["LS"])),
    "of",
    len(wide_py),
    "runs",
)

## beta chosen for each run
print(fits_py.query('estimator == "BQGS"')["beta_used"].describe())
