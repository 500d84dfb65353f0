"""Forecast validation: correlation functions, score tables and plot data."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import ResidualMatrix, complete_cases
from .errors import DataError
from .regression import FitResult
from .scoring import rmse


@dataclass(frozen=True)
class Correlogram:
    lags: np.ndarray
    values: np.ndarray
    band: float  # 1.96 / sqrt(m)
    m: int

    def outside_band(self, exclude_zero: bool = True) -> np.ndarray:
        keep = self.lags != 0 if exclude_zero else np.ones(len(self.lags), dtype=bool)
        return (np.abs(self.values) > self.band) & keep


def _centered(x: np.ndarray, name: str) -> tuple[np.ndarray, float, int]:
    x = np.asarray(x, dtype=float)
    ok = np.isfinite(x)
    m = int(ok.sum())
    if m < 3:
        raise DataError(f"{name}: need at least 3 non-missing values, got {m}")
    c = x - x[ok].mean()
    ss = float(np.sum(c[ok] ** 2))
    if ss == 0.0:
        raise DataError(f"{name}: series has zero variance")
    return np.where(ok, c, 0.0), ss, m


def acf(x, lag_max: int) -> Correlogram:
    """Autocorrelation with pairwise-complete products and the mean of all non-missing values."""
    c, ss, m = _centered(x, "acf")
    n = len(c)
    lags = np.arange(0, lag_max + 1)
    vals = np.array([np.dot(c[: n - l], c[l:]) / ss if l < n else 0.0 for l in lags])
    return Correlogram(lags, vals, 1.96 / np.sqrt(m), m)


def ccf(x, y, lag_max: int) -> Correlogram:
    """Cross-correlation: value at lag l estimates corr(x_{t+l}, y_t)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DataError(f"ccf: series lengths differ ({x.size} vs {y.size})")
    cx, sx, _ = _centered(x, "ccf x")
    cy, sy, _ = _centered(y, "ccf y")
    n = len(cx)
    norm = np.sqrt(sx * sy)
    lags = np.arange(-lag_max, lag_max + 1)
    vals = []
    for l in lags:
        if abs(l) >= n:
            vals.append(0.0)
        elif l >= 0:
            vals.append(np.dot(cx[l:], cy[: n - l]) / norm)
        else:
            vals.append(np.dot(cx[: n + l], cy[-l:]) / norm)
    m = int(np.sum(np.isfinite(x) & np.isfinite(y)))
    return Correlogram(lags, np.array(vals), 1.96 / np.sqrt(max(m, 1)), m)


def cumulative_squared_error(resid: ResidualMatrix, k: int) -> np.ndarray:
    r = resid.column(k)
    return np.cumsum(np.where(np.isfinite(r), r * r, 0.0))


@dataclass(frozen=True)
class ScoreTable:
    horizons: tuple[int, ...]
    models: tuple[str, ...]
    values: np.ndarray  # (horizons, models)
    n_rows: int
    mask: np.ndarray

    def column(self, model: str) -> np.ndarray:
        return self.values[:, self.models.index(model)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", *self.models])
            for i, k in enumerate(self.horizons):
                w.writerow([k, *(repr(float(v)) for v in self.values[i])])


def score_table(
    fits: Mapping[str, FitResult] | Sequence[FitResult],
    scoreperiod: np.ndarray | None = None,
    horizons: Sequence[int] | None = None,
    scorefun=rmse,
) -> ScoreTable:
    """RMSE per horizon and model on one shared complete-case mask."""
    if not isinstance(fits, Mapping):
        fits = {f"model{i + 1}": f for i, f in enumerate(fits)}
    if not fits:
        raise DataError("score_table needs at least one fit")
    names = tuple(fits)
    first = fits[names[0]]
    if horizons is None:
        horizons = sorted(set.intersection(*(set(f.horizons) for f in fits.values())))
    horizons = tuple(horizons)
    if not horizons:
        raise DataError("no common horizons")
    n = first.residuals.n
    mask = np.ones(n, dtype=bool) if scoreperiod is None else np.asarray(scoreperiod, dtype=bool).copy()
    mask &= complete_cases([f.residuals for f in fits.values()], horizons)
    if not mask.any():
        raise DataError("no complete cases shared by all models")
    values = np.array(
        [[scorefun(fits[m].residuals.column(k)[mask]) for m in names] for k in horizons]
    )
    return ScoreTable(horizons, names, values, int(mask.sum()), mask)


# ---------------------------------------------------------------------------
# plot data

PLOT_KINDS = ("forecasts", "residuals", "acf", "score", "coef_trace")


def _time_labels(t: np.ndarray) -> list[str]:
    if np.issubdtype(t.dtype, np.datetime64):
        return [s + "Z" for s in np.datetime_as_string(t.astype("datetime64[s]"), unit="s")]
    return [repr(float(v)) for v in t]


def _num(v) -> str:
    return "" if not np.isfinite(v) else repr(float(v))


def plot_rows(kind: str, source, horizons: Sequence[int] | None = None, lag_max: int = 96) -> list[tuple[str, str, str]]:
    """Tidy ``(x, series, value)`` rows for one plot kind."""
    if kind not in PLOT_KINDS:
        raise DataError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    if kind == "score":
        table = source if isinstance(source, ScoreTable) else score_table(source, horizons=horizons)
        rows = [
            (str(k), m, _num(table.values[i, j]))
            for j, m in enumerate(table.models)
            for i, k in enumerate(table.horizons)
        ]
        if not rows:
            raise DataError("empty selection")
        return rows
    fit: FitResult = source
    ks = list(fit.horizons if horizons is None else horizons)
    ks = [k for k in ks if k in fit.horizons]
    if not ks:
        raise DataError("empty selection: none of the requested horizons are in the fit")
    rows = []
    if kind == "forecasts":
        x = _time_labels(fit.t)
        rows += [(x[s], "y", _num(fit.y[s])) for s in range(len(x))]
        for k in ks:
            col = fit.yhat.column(k)
            for s in range(len(x)):
                v = col[s - k] if s >= k else np.nan
                rows.append((x[s], f"yhat.k{k}", _num(v)))
    elif kind == "residuals":
        x = _time_labels(fit.t)
        for k in ks:
            col = fit.residuals.column(k)
            rows += [(x[s], f"h{k}", _num(col[s])) for s in range(len(x))]
    elif kind == "acf":
        for k in ks:
            cg = acf(fit.residuals.column(k), lag_max)
            rows += [(str(int(l)), f"acf.h{k}", _num(v)) for l, v in zip(cg.lags, cg.values)]
            rows += [(str(int(l)), "band", _num(cg.band)) for l in cg.lags]
    elif kind == "coef_trace":
        x = _time_labels(fit.t)
        for k in ks:
            h = fit.horizons.index(k)
            for j, name in enumerate(fit.names):
                rows += [(x[s], f"{name}.k{k}", _num(fit.coefficients[s, h, j])) for s in range(len(x))]
    return rows


def write_plot_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "series", "value"])
        w.writerows(rows)


def read_plot_csv(path) -> list[tuple[str, str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        next(r)
        return [tuple(row) for row in r]


def render_svg(rows, title: str = "", width: int = 800, height: int = 400) -> str:
    """Static SVG line chart; x is the row order within each series."""
    series: dict[str, list[float]] = {}
    for _, name, value in rows:
        series.setdefault(name, []).append(float(value) if value != "" else np.nan)
    allv = np.array([v for vs in series.values() for v in vs], dtype=float)
    finite = allv[np.isfinite(allv)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    ml, mr, mt, mb = 60, 150, 30, 30
    pw, ph = width - ml - mr, height - mt - mb
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
        f'<text x="{ml}" y="{mt - 10}" font-family="sans-serif" font-size="14">{_esc(title)}</text>',
        f'<text x="{ml - 5}" y="{mt + 5}" font-family="sans-serif" font-size="10" text-anchor="end">{hi:.4g}</text>',
        f'<text x="{ml - 5}" y="{mt + ph}" font-family="sans-serif" font-size="10" text-anchor="end">{lo:.4g}</text>',
    ]
    for i, (name, vals) in enumerate(series.items()):
        color = palette[i % len(palette)]
        nv = len(vals)
        seg: list[str] = []
        segments = []
        for j, v in enumerate(vals):
            if not np.isfinite(v):
                if seg:
                    segments.append(seg)
                seg = []
                continue
            px = ml + (pw * j / (nv - 1) if nv > 1 else pw / 2)
            py = mt + ph * (1 - (v - lo) / (hi - lo))
            seg.append(f"{px:.2f},{py:.2f}")
        if seg:
            segments.append(seg)
        for s in segments:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{" ".join(s)}"/>')
        ly = mt + 15 * (i + 1)
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly - 4}" x2="{ml + pw + 30}" y2="{ly - 4}" stroke="{color}"/>')
        out.append(
            f'<text x="{ml + pw + 35}" y="{ly}" font-family="sans-serif" font-size="11">{_esc(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_plot_data(
    kind: str,
    source,
    path: str | Path,
    horizons: Sequence[int] | None = None,
    lag_max: int = 96,
    svg: bool = True,
) -> list[Path]:
    """Write ``<path>.csv`` (and ``<path>.svg``); returns the files written."""
    rows = plot_rows(kind, source, horizons, lag_max)
    base = Path(path)
    base = base.with_suffix("") if base.suffix in (".csv", ".svg") else base
    written = [base.with_suffix(".csv")]
    write_plot_csv(rows, written[0])
    if svg:
        written.append(base.with_suffix(".svg"))
        written[1].write_text(render_svg(rows, title=kind), encoding="utf-8")
    return written
