"""Full workflow on building heat-load data: LS fit, offline tuning, RLS, evaluation.

Pass the exported data CSV (columns t, heatload, Ta.k1..Ta.k36, ...) with
--data; without it a synthetic stand-in is generated.

    python scripts/building_workflow.py --data Dbuilding.csv --out runs/building
"""

import argparse
import warnings
from pathlib import Path

import numpy as np

from onlinefc.data import load_dataset
from onlinefc.evaluate import acf, emit_plot_data, score_table
from onlinefc.model import ModelSpec, ParameterBounds, ScorePeriod, save_model
from onlinefc.regression import ls_fit, rls_fit
from onlinefc.synthetic import building_like
from onlinefc.tuning import optimize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data")
    ap.add_argument("--out", default="runs/building")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.data:
        data = load_dataset(args.data)
        tod = None
    else:
        data = building_like(1824, tuple(range(1, 37)), seed=0)
        tod = "fs(tod, nharmonics=3)"
    print(f"{data.n} rows; series: {sorted(data.observations)} + {sorted(data.forecasts)}")

    model = ModelSpec(
        "heatload",
        {"mu": "one()", "Ta": "lp(Ta, a1=0.9)"},
        kseq=tuple(range(1, 7)),
        bounds={"Ta__a1": ParameterBounds("Ta__a1", 0.8, 0.9, 0.9999)},
    )
    print("LS summed RMSE, Ta__a1=0.8, k=1..6:", round(ls_fit({"Ta__a1": 0.8}, model, data, return_analysis=False), 6))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = optimize(model, data, kseq=[3, 18] if 18 in data["Ta"].horizons else [3, 6], fit_scheme="ls")
    print("LS optimum Ta__a1:", round(res.params["Ta__a1"], 6))

    burnin = 5 * 24
    rls_model = model.replace(
        inputs={**model.inputs, **({"I": tod} if tod else {})},
        regprm={"lambda": 0.9},
        bounds={**model.bounds, "lambda": ParameterBounds("lambda", 0.9, 0.99, 0.9999)},
        scoreperiod=ScorePeriod(burnin),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = optimize(rls_model, data, kseq=[3, 6], fit_scheme="rls")
    print("RLS optimum:", {k: round(v, 6) for k, v in res.params.items()})
    rls_model = res.model.with_kseq(range(1, 25) if 24 in data["Ta"].horizons else range(1, 7))
    save_model(rls_model, out / "rls_model.yaml", "tuned on " + (args.data or "synthetic data"))

    fits = {"rls": rls_fit(None, rls_model, data), "ls": ls_fit(res.params, rls_model, data)}
    table = score_table(fits, np.arange(data.n) >= burnin)
    table.to_csv(out / "score_table.csv")
    for k, row in zip(table.horizons, table.values):
        print(f"k{k:<3d} rls {row[0]:.4f}  ls {row[1]:.4f}")
    cg = acf(fits["rls"].residuals.column(1), 96)
    print(f"h1 residual ACF: {cg.outside_band().sum()} of 96 lags outside the band")
    for kind in ("forecasts", "acf", "coef_trace"):
        emit_plot_data(kind, fits["rls"], out / f"plot_{kind}", horizons=[1, 6])
    emit_plot_data("score", table, out / "plot_score")
    print("outputs in", out)


if __name__ == "__main__":
    main()
