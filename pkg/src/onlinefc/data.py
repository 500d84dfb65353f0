"""Forecast matrices, datasets and the CSV layout they are stored in.

A forecast matrix has one row per time step t and one column per horizon k;
row t, column k holds the newest value for time t+k known at time t.
Missing values are NaN throughout.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

MISSING_TOKENS = {"", "NA", "NaN", "nan"}
FORECAST_COLUMN = re.compile(r"^(?P<name>.+)\.k(?P<k>\d+)$")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ForecastMatrix:
    horizons: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        horizons = tuple(int(k) for k in self.horizons)
        values = np.array(self.values, dtype=float)
        if values.ndim == 1 and len(horizons) == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[1] != len(horizons):
            raise DataError(
                f"forecast matrix has shape {values.shape} but {len(horizons)} horizons"
            )
        if any(k < 0 for k in horizons) or any(a >= b for a, b in zip(horizons, horizons[1:])):
            raise DataError(f"horizons must be non-negative and strictly increasing: {horizons}")
        object.__setattr__(self, "horizons", horizons)
        object.__setattr__(self, "values", _readonly(values))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def columns(self) -> list[str]:
        return [f"k{k}" for k in self.horizons]

    def column(self, k: int) -> np.ndarray:
        try:
            return self.values[:, self.horizons.index(k)]
        except ValueError:
            raise DataError(f"horizon k{k} not in forecast matrix") from None

    def select(self, horizons: Iterable[int]) -> ForecastMatrix:
        horizons = [int(k) for k in horizons]
        idx = []
        for k in horizons:
            if k not in self.horizons:
                raise DataError(f"horizon k{k} not in forecast matrix")
            idx.append(self.horizons.index(k))
        return ForecastMatrix(tuple(horizons), self.values[:, idx])

    def rows(self, index) -> ForecastMatrix:
        return ForecastMatrix(self.horizons, self.values[index])

    def with_values(self, values: np.ndarray) -> ForecastMatrix:
        return ForecastMatrix(self.horizons, values)

    @classmethod
    def broadcast(cls, series: np.ndarray, horizons: Sequence[int]) -> ForecastMatrix:
        """Repeat a series known at the forecast origin across all horizons."""
        series = np.asarray(series, dtype=float)
        return cls(tuple(horizons), np.repeat(series[:, None], len(horizons), axis=1))


@dataclass(frozen=True)
class ResidualMatrix:
    """Errors aligned with the time they refer to.

    Column ``h<k>`` at row s holds y_s minus the k-step forecast issued at s-k.
    """

    horizons: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "horizons", tuple(int(k) for k in self.horizons))
        object.__setattr__(self, "values", _readonly(np.array(self.values, dtype=float)))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def columns(self) -> list[str]:
        return [f"h{k}" for k in self.horizons]

    def column(self, k: int) -> np.ndarray:
        try:
            return self.values[:, self.horizons.index(k)]
        except ValueError:
            raise DataError(f"horizon h{k} not in residual matrix") from None

    def select(self, horizons: Iterable[int]) -> ResidualMatrix:
        horizons = [int(k) for k in horizons]
        return ResidualMatrix(tuple(horizons), np.column_stack([self.column(k) for k in horizons]))


@dataclass(frozen=True)
class DataSet:
    t: np.ndarray
    observations: dict[str, np.ndarray] = field(default_factory=dict)
    forecasts: dict[str, ForecastMatrix] = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t)
        if t.ndim != 1:
            raise DataError("time vector must be one-dimensional")
        check_equidistant(t)
        n = len(t)
        obs = {}
        for name, v in self.observations.items():
            v = np.array(v, dtype=float)
            if v.shape != (n,):
                raise DataError(f"observation {name!r} has {v.size} values, expected {n}")
            obs[name] = _readonly(v)
        for name, fm in self.forecasts.items():
            if fm.n != n:
                raise DataError(f"forecast matrix {name!r} has {fm.n} rows, expected {n}")
        overlap = set(obs) & set(self.forecasts)
        if overlap:
            raise DataError(f"duplicate series name(s): {sorted(overlap)}")
        object.__setattr__(self, "t", _readonly(t.copy()))
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "forecasts", dict(self.forecasts))

    @property
    def n(self) -> int:
        return len(self.t)

    def __contains__(self, name: str) -> bool:
        return name in self.observations or name in self.forecasts

    def __getitem__(self, name: str):
        if name in self.observations:
            return self.observations[name]
        if name in self.forecasts:
            return self.forecasts[name]
        raise KeyError(name)

    def with_series(self, **series) -> DataSet:
        obs = dict(self.observations)
        fcs = dict(self.forecasts)
        for name, v in series.items():
            obs.pop(name, None)
            fcs.pop(name, None)
            if isinstance(v, ForecastMatrix):
                fcs[name] = v
            else:
                obs[name] = v
        return DataSet(self.t, obs, fcs)


def check_equidistant(t: np.ndarray) -> None:
    if len(t) < 2:
        return
    d = np.diff(t)
    step = d[0]
    bad = np.flatnonzero((d != step) | (d <= d[0] * 0))
    if bad.size:
        i = int(bad[0])
        raise DataError(
            f"time vector not equidistant: gap {d[i]} between rows {i + 1} and {i + 2} "
            f"(t={t[i]} -> t={t[i + 1]}), expected {step}"
        )


def _parse_time(cells: list[str]) -> np.ndarray:
    try:
        return np.array([float(c) for c in cells])
    except ValueError:
        pass
    out = []
    for i, c in enumerate(cells):
        s = c.strip()
        for suffix in ("Z", "+00:00", " UTC", " GMT"):
            if s.endswith(suffix):
                s = s[: -len(suffix)]
        try:
            out.append(np.datetime64(s.replace(" ", "T"), "s"))
        except ValueError:
            raise DataError(f"row {i + 2}, column 't': cannot parse timestamp {c!r}") from None
    return np.array(out, dtype="datetime64[s]")


def _format_time(t: np.ndarray) -> list[str]:
    if np.issubdtype(t.dtype, np.datetime64):
        return [s + "Z" for s in np.datetime_as_string(t.astype("datetime64[s]"), unit="s")]
    return [_format_number(v) for v in t]


def _format_number(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def load_dataset(path: str | Path) -> DataSet:
    """Read a CSV with a ``t`` column, observation columns and ``<name>.k<h>`` columns."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        rows = list(reader)
    seen = set()
    for col in header:
        if col in seen:
            raise DataError(f"{path}: duplicate column {col!r}")
        seen.add(col)
    if "t" not in header:
        raise DataError(f"{path}: column 't' missing")
    ncol = len(header)
    for i, row in enumerate(rows):
        if len(row) != ncol:
            raise DataError(f"{path}: row {i + 2} has {len(row)} fields, header has {ncol}")

    columns = list(zip(*rows)) if rows else [()] * ncol
    t = _parse_time(list(columns[header.index("t")]))

    def numeric(j: int) -> np.ndarray:
        out = np.empty(len(rows))
        for i, cell in enumerate(columns[j]):
            if cell.strip() in MISSING_TOKENS:
                out[i] = np.nan
                continue
            try:
                out[i] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {i + 2}, column {header[j]!r}: non-numeric value {cell!r}"
                ) from None
        return out

    observations: dict[str, np.ndarray] = {}
    grouped: dict[str, dict[int, np.ndarray]] = {}
    for j, col in enumerate(header):
        if col == "t":
            continue
        m = FORECAST_COLUMN.match(col)
        if m:
            grouped.setdefault(m["name"], {})[int(m["k"])] = numeric(j)
        else:
            observations[col] = numeric(j)
    forecasts = {}
    for name, cols in grouped.items():
        ks = sorted(cols)
        forecasts[name] = ForecastMatrix(
            tuple(ks), np.column_stack([cols[k] for k in ks]) if rows else np.empty((0, len(ks)))
        )
    return DataSet(t, observations, forecasts)


def save_dataset(data: DataSet, path: str | Path) -> None:
    header = ["t"] + list(data.observations)
    cols = [_format_time(data.t)]
    for v in data.observations.values():
        cols.append([_format_number(x) for x in v])
    for name, fm in data.forecasts.items():
        for j, k in enumerate(fm.horizons):
            header.append(f"{name}.k{k}")
            cols.append([_format_number(x) for x in fm.values[:, j]])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(zip(*cols))


def complete_cases(matrices, horizons: Iterable[int] | None = None) -> np.ndarray:
    """Rows where every matrix is non-missing for every requested horizon."""
    if isinstance(matrices, (ForecastMatrix, ResidualMatrix)):
        matrices = [matrices]
    matrices = list(matrices)
    if not matrices:
        raise DataError("complete_cases needs at least one matrix")
    n = matrices[0].n
    mask = np.ones(n, dtype=bool)
    for i, m in enumerate(matrices):
        if m.n != n:
            raise DataError(f"matrix {i} has {m.n} rows, expected {n}")
        ks = m.horizons if horizons is None else list(horizons)
        for k in ks:
            if k not in m.horizons:
                raise DataError(f"matrix {i} has no horizon {k}")
            mask &= np.isfinite(m.values[:, m.horizons.index(k)])
    return mask


def residuals(yhat: ForecastMatrix, y: np.ndarray) -> ResidualMatrix:
    y = np.asarray(y, dtype=float)
    if y.shape != (yhat.n,):
        raise DataError(f"observations have {y.size} values, forecasts have {yhat.n} rows")
    out = np.full(yhat.values.shape, np.nan)
    for j, k in enumerate(yhat.horizons):
        out[k:, j] = y[k:] - yhat.values[: yhat.n - k, j]
    return ResidualMatrix(yhat.horizons, out)


def in_range(start, end, t: np.ndarray) -> np.ndarray:
    """``start < t <= end``; either bound may be None."""
    t = np.asarray(t)
    mask = np.ones(len(t), dtype=bool)
    if start is not None:
        mask &= t > _coerce_time(start, t)
    if end is not None:
        mask &= t <= _coerce_time(end, t)
    if not mask.any():
        raise DataError(f"no time points in range ({start}, {end}]")
    return mask


def _coerce_time(v, t):
    if np.issubdtype(t.dtype, np.datetime64) and isinstance(v, str):
        return _parse_time([v])[0]
    return v


def subset(data: DataSet, mask: np.ndarray | None = None, horizons: Iterable[int] | None = None) -> DataSet:
    idx = slice(None)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (data.n,):
            raise DataError(f"mask has length {mask.size}, dataset has {data.n} rows")
        if not mask.any():
            raise DataError("empty selection")
        idx = np.flatnonzero(mask)
    if horizons is not None:
        horizons = list(horizons)
        if not horizons:
            raise DataError("empty horizon selection")
    obs = {k: v[idx] for k, v in data.observations.items()}
    fcs = {}
    for name, fm in data.forecasts.items():
        fm = fm.select(horizons) if horizons is not None else fm
        fcs[name] = fm.rows(idx)
    # row subsets may break equidistance; only contiguous selections are valid datasets
    return DataSet(data.t[idx], obs, fcs)
