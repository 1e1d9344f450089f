## load packages
import pandas as pd
import os
from qsysid.benchmark import Protocol, run_monte_carlo, records_to_frame

## ceil quantizer, 200 samples; use runs = 100 for the full sweep
runs = 20
ceil_file = f"./data/mc_ceil_{runs}.csv"
if os.path.isfile(ceil_file):
    ceil_py = pd.read_csv(ceil_file)
else:
    protocol = Protocol(runs=runs, samples=200, quantizer="ceil", snr=10.0, order=50)
    ceil_py = records_to_frame(run_monte_carlo(protocol, base_seed=2025))
    ceil_py.to_csv(ceil_file, index=False, float_format="%.17g")

ceil_summary_py = ceil_py.groupby("estimator").agg({"fit": ["count", "mean", "median"]})
ceil_summary_py.columns = list(map("_".join, ceil_summary_py.columns))
ceil_summary_py.reset_index(inplace=True)
print(ceil_summary_py.sort_values("fit_median", ascending=False))

## same systems and noise, binary quantizer, kernel estimator only
binary_file = f"./data/mc_binary_n200_{runs}.csv"
if os.path.isfile(binary_file):
    binary_py = pd.read_csv(binary_file)
else:
    protocol = Protocol(
        runs=runs,
        samples=200,
        quantizer="binary:1.0",
        snr=10.0,
        order=50,
        estimators="SSML,SSML_NQ",
    )
    binary_py = records_to_frame(
        run_monte_carlo(protocol, base_seed=2025), protocol.estimators
    )
    binary_py.to_csv(binary_file, index=False, float_format="%.17g")

## quantization loss: oracle fit minus fit on quantized data, per run
ceil_py["quantizer"] = "ceil"
binary_py["quantizer"] = "binary"
both_py = pd.concat([ceil_py, binary_py]).query('estimator in ["SSML", "SSML_NQ"]')
loss_py = both_py.pivot_table(
    index=["quantizer", "run"], columns="estimator", values="fit"
).reset_index()
loss_py["loss"] = loss_py["SSML_NQ"] - loss_py["SSML"]

loss_summary_py = loss_py.groupby("quantizer").agg({"loss": ["mean", "median", "max"]})
loss_summary_py.columns = list(map("_".join, loss_summary_py.columns))
print(loss_summary_py)
