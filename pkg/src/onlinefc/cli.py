"""Command-line front end: fit, optimize, select, predict, update, eval.

Exit codes: 0 ok, 2 configuration/usage error, 3 data error, 4 numerical
failure, 5 unsupported state schema version.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .data import DataSet, ForecastMatrix, ResidualMatrix, load_dataset, residuals, save_dataset
from .errors import ConfigError, ForecastError
from .evaluate import PLOT_KINDS, acf, ccf, emit_plot_data, score_table, write_plot_csv
from .model import ModelSpec, ScorePeriod, dump_model, load_model, parse_kseq, save_model
from .regression import FitResult, load_state, ls_fit, rls_advance, rls_fit, rls_predict, save_state
from .scoring import score
from .selection import DIRECTIONS, step_selection
from .tuning import optimize

FIXED_CLOCK = "1970-01-01T00:00:00Z"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(ConfigError.exit_code)


def _now(args) -> str:
    if getattr(args, "fixed_clock", False):
        return FIXED_CLOCK
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("ONLINEFC_OUT")
    if not out:
        raise ConfigError("no output location: pass --out or set ONLINEFC_OUT")
    return Path(out)


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    try:
        return int(os.environ.get("ONLINEFC_THREADS", "1"))
    except ValueError:
        raise ConfigError("ONLINEFC_THREADS must be an integer") from None


def _model(args, path=None) -> ModelSpec:
    model = load_model(path or args.config)
    if getattr(args, "kseq", None):
        model = model.with_kseq(parse_kseq(args.kseq))
    if getattr(args, "burnin", None) is not None:
        sp = model.scoreperiod
        model = model.replace(scoreperiod=ScorePeriod(args.burnin, sp.start, sp.end))
    return model


def _emit_warnings(caught) -> None:
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, allow_nan=False) + "\n", encoding="utf-8")


def _finite_or_none(v):
    return None if v is None or not np.isfinite(v) else float(v)


def write_fit(fit: FitResult, model: ModelSpec, out: Path, clock: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    mask = np.zeros(len(fit.y))
    mask[fit.report.mask] = 1.0
    save_dataset(
        DataSet(fit.t, {model.output: fit.y, "scoreperiod": mask}, {"Yhat": fit.yhat}),
        out / "forecasts.csv",
    )
    save_dataset(
        DataSet(fit.t, {f"h{k}": fit.residuals.column(k) for k in fit.horizons}),
        out / "residuals.csv",
    )
    coefs = {
        name: ForecastMatrix(fit.horizons, fit.coefficients[:, :, j])
        for j, name in enumerate(fit.names)
    }
    save_dataset(DataSet(fit.t, {}, coefs), out / "coefficients.csv")
    with open(out / "scores.csv", "w", encoding="utf-8") as fh:
        fh.write("k,rmse,sigma2,n\n")
        for k, v in zip(fit.report.horizons, fit.report.values):
            fh.write(f"{k},{v!r},{fit.sigma2[k]!r},{fit.report.n_rows}\n")
    save_model(model.replace(prm=fit.params), out / "model.yaml", header=f"fitted model ({fit.scheme}), {clock}")
    _write_json(
        out / "fit.json",
        {
            "scheme": fit.scheme,
            "output": model.output,
            "kseq": list(fit.horizons),
            "coef_names": fit.names,
            "params": {k: float(v) for k, v in fit.params.items()},
            "score": _finite_or_none(fit.score),
            "scores": {f"k{k}": _finite_or_none(v) for k, v in fit.report.as_dict().items()},
            "n_scored": fit.report.n_rows,
            "created": clock,
        },
    )
    if fit.state is not None:
        save_state(fit.state, out / "state.json")


def load_fit(fit_dir: Path) -> FitResult:
    """Rebuild a FitResult from a directory written by ``fit``."""
    meta = json.loads((fit_dir / "fit.json").read_text(encoding="utf-8"))
    fc = load_dataset(fit_dir / "forecasts.csv")
    coefs = load_dataset(fit_dir / "coefficients.csv")
    yhat = fc.forecasts["Yhat"]
    y = fc.observations[meta["output"]]
    resid = residuals(yhat, y)
    mask = fc.observations["scoreperiod"] > 0
    report = score(resid, mask, yhat.horizons)
    names = meta["coef_names"]
    trace = np.stack([coefs.forecasts[nm].values for nm in names], axis=-1)
    return FitResult(
        meta["scheme"], yhat.horizons, names, fc.t, y, yhat, resid, trace, trace[-1],
        report, {}, meta["params"], {},
    )


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args) -> int:
    model = _model(args)
    data = load_dataset(args.data)
    fitfun = {"ls": ls_fit, "rls": rls_fit}[args.scheme]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = fitfun(None, model, data)
    _emit_warnings(caught)
    out = _out_dir(args)
    write_fit(fit, model, out, _now(args))
    print(f"{args.scheme} fit: summed RMSE over k={list(fit.horizons)}: {fit.score:.6g}")
    return 0


def cmd_optimize(args) -> int:
    model = _model(args)
    data = load_dataset(args.data)
    kseq = parse_kseq(args.kseq) if args.kseq else model.kseq
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = optimize(model, data, kseq, args.scheme)
    _emit_warnings(caught)
    out = Path(args.out or os.environ.get("ONLINEFC_OUT") or "")
    if not str(out):
        raise ConfigError("no output location: pass --out")
    if out.suffix not in (".yaml", ".yml"):
        out.mkdir(parents=True, exist_ok=True)
        out = out / "optimized.yaml"
    best = res.model
    best = best.replace(inputs=best.bound_sources())
    values = ", ".join(f"{k}={v:.8g}" for k, v in res.params.items())
    header = (
        f"optimized by onlinefc {__version__} at {_now(args)}\n"
        f"source config: {Path(args.config).name}, data: {Path(args.data).name}\n"
        f"scheme: {args.scheme}, kseq: {list(kseq)}, evaluations: {res.nfev}\n"
        f"score {res.init_score:.8g} -> {res.score:.8g}; {values}"
    )
    save_model(best, out, header)
    print(f"{values} (score {res.score:.6g}); written to {out}")
    return 0


def cmd_select(args) -> int:
    start = _model(args)
    full = _model(args, args.full) if args.full else start
    data = load_dataset(args.data)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = step_selection(
            start, full, data, args.direction, kseq=start.kseq, fit_scheme=args.scheme,
            threads=_threads(args),
        )
    _emit_warnings(caught)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "selection.log").write_text(
        "step\tcandidate\tinputs\tscore\tdecision\n" + "\n".join(res.log) + "\n", encoding="utf-8"
    )
    header = f"selected by onlinefc {__version__} at {_now(args)} ({args.direction}); path: {' '.join(res.path)}"
    save_model(res.model, out / "selected.yaml", header)
    print(f"selected inputs {list(res.model.inputs)} with score {res.score:.6g}")
    return 0


def _write_forecasts(t, yhat: ForecastMatrix, path: Path) -> None:
    save_dataset(DataSet(t, {}, {"Yhat": yhat}), path)


def cmd_predict(args) -> int:
    state = load_state(args.state)
    newdata = load_dataset(args.newdata)
    yhat = rls_predict(state, newdata)
    _write_forecasts(newdata.t, yhat, Path(args.out))
    return 0


def cmd_update(args) -> int:
    state = load_state(args.state)
    newdata = load_dataset(args.newdata)
    new_state, yhat, _ = rls_advance(state, newdata)
    save_state(new_state, args.out_state)
    if args.out:
        _write_forecasts(newdata.t, yhat, Path(args.out))
    print(f"consumed {newdata.n} rows; state step {new_state.step}")
    return 0


def cmd_eval(args) -> int:
    fits = {Path(d).name or str(d): load_fit(Path(d)) for d in args.fit}
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    kinds = [k.strip() for k in args.plots.split(",") if k.strip()] if args.plots else []
    bad = [k for k in kinds if k not in PLOT_KINDS]
    if bad:
        raise ConfigError(f"unknown plot kind(s) {bad}; choose from {PLOT_KINDS}")
    horizons = parse_kseq(args.kseq) if args.kseq else None
    first_name, first = next(iter(fits.items()))
    table = score_table(fits, first.report.mask, horizons)
    table.to_csv(out / "score_table.csv")

    cg = acf(first.residuals.column(first.horizons[0]), args.lag_max)
    write_plot_csv(
        [(str(int(l)), f"acf.h{first.horizons[0]}", repr(float(v))) for l, v in zip(cg.lags, cg.values)]
        + [(str(int(l)), "band", repr(float(cg.band))) for l in cg.lags],
        out / "acf.csv",
    )
    if args.data and args.ccf_inputs:
        data = load_dataset(args.data)
        if data.n != len(first.y):
            raise ConfigError("--data must cover the fitted period")
        for name in args.ccf_inputs.split(","):
            series = data[name]
            if isinstance(series, ForecastMatrix):
                series = series.column(series.horizons[0])
            c = ccf(first.residuals.column(first.horizons[0]), series, args.lag_max)
            write_plot_csv(
                [(str(int(l)), f"ccf.{name}", repr(float(v))) for l, v in zip(c.lags, c.values)],
                out / f"ccf_{name}.csv",
            )
    for kind in kinds:
        src = table if kind == "score" else first
        emit_plot_data(kind, src, out / f"plot_{kind}", horizons, args.lag_max, svg=not args.no_svg)
    print(f"evaluated {list(fits)}; outputs in {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="onlinefc", description="Online multi-horizon forecasting with LS/RLS.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, data=True):
        sp.add_argument("--config", required=True, help="model config (YAML)")
        if data:
            sp.add_argument("--data", required=True, help="data CSV")
        sp.add_argument("--kseq", help="horizons, e.g. '1:24' or '3,18'")
        sp.add_argument("--burnin", type=int, help="exclude the first N rows from scoring")
        sp.add_argument("--fixed-clock", action="store_true", help="fixed timestamps in outputs")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed", type=int, default=0, help="accepted for reproducibility; no randomness is used")

    sp = sub.add_parser("fit", help="fit a model and write forecasts, scores and state")
    common(sp)
    sp.add_argument("--scheme", choices=("ls", "rls"), default="rls")
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("optimize", help="tune bounded offline parameters")
    common(sp)
    sp.add_argument("--scheme", choices=("ls", "rls"), default="rls")
    sp.add_argument("--out", help="output config file (.yaml) or directory")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("select", help="stepwise model selection")
    common(sp)
    sp.add_argument("--full", help="full model config (default: --config)")
    sp.add_argument("--direction", choices=DIRECTIONS, default="both")
    sp.add_argument("--scheme", choices=("ls", "rls"), default="rls")
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("predict", help="forecast new rows from a saved state (read-only)")
    sp.add_argument("--state", required=True)
    sp.add_argument("--newdata", required=True)
    sp.add_argument("--out", required=True, help="forecast CSV")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("update", help="consume new rows and write the advanced state")
    sp.add_argument("--state", required=True)
    sp.add_argument("--newdata", required=True)
    sp.add_argument("--out-state", required=True)
    sp.add_argument("--out", help="forecast CSV for the new rows")
    sp.set_defaults(func=cmd_update)

    sp = sub.add_parser("eval", help="score tables, correlation functions and plot data")
    sp.add_argument("--fit", required=True, action="append", help="fit directory (repeatable)")
    sp.add_argument("--plots", default="", help=f"comma list of {', '.join(PLOT_KINDS)}")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--kseq")
    sp.add_argument("--lag-max", type=int, default=96)
    sp.add_argument("--data", help="data CSV for cross-correlations")
    sp.add_argument("--ccf-inputs", help="comma list of series for cross-correlations")
    sp.add_argument("--no-svg", action="store_true")
    sp.add_argument("--fixed-clock", action="store_true")
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ForecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
