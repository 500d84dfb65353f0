"""Transformation stage: kernels mapping forecast matrices to regressors.

Every kernel works column by column, i.e. independently per horizon. Kernels
that carry memory between calls (``lp``, ``AR``, ``bspline``) keep it in a
plain ``dict`` so a model can be evaluated in chunks with identical results.
"""

from __future__ import annotations

import copy
from typing import Sequence

import numpy as np

from . import expr as E
from .data import DataSet, ForecastMatrix
from .errors import ConfigError, DataError, ParameterDomainError

TransformState = dict  # input name -> call-site path -> kernel state


def one(n: int, horizons: Sequence[int]) -> ForecastMatrix:
    return ForecastMatrix(tuple(horizons), np.ones((n, len(horizons))))


def lp(u: ForecastMatrix, a1: float, state: dict | None = None) -> ForecastMatrix:
    """First-order low-pass filter with unity DC gain, applied per column.

    x_t = a1 * x_{t-1} + (1 - a1) * u_t. The memory of a column starts at its
    first non-missing value; missing input gives missing output and leaves the
    memory untouched. ``state["memory"]`` is updated in place.
    """
    a1 = float(a1)
    if not 0.0 <= a1 < 1.0:
        raise ParameterDomainError(f"lp: a1 must be in [0, 1), got {a1}")
    state = {} if state is None else state
    mem = np.array(state.get("memory", [np.nan] * len(u.horizons)), dtype=float)
    if mem.shape != (len(u.horizons),):
        raise DataError(f"lp: state holds {mem.size} columns, input has {len(u.horizons)}")
    uv = u.values
    out = np.full(uv.shape, np.nan)
    b = 1.0 - a1
    for t in range(uv.shape[0]):
        row = uv[t]
        ok = np.isfinite(row)
        fresh = ok & np.isnan(mem)
        mem = np.where(fresh, row, mem)
        upd = a1 * mem + b * row
        mem = np.where(ok & ~fresh, upd, mem)
        out[t] = np.where(ok, mem, np.nan)
    state["memory"] = mem.tolist()
    return u.with_values(out)


def bspline_basis(
    x: np.ndarray,
    knots: Sequence[float],
    boundary: tuple[float, float],
    degree: int = 3,
    intercept: bool = False,
) -> np.ndarray:
    """B-spline basis by the Cox-de Boor recursion.

    Returns an array of shape ``x.shape + (nbasis,)``. Values outside the
    boundary are clamped to it; NaN stays NaN. With ``intercept=False`` the
    first basis function is dropped.
    """
    x = np.asarray(x, dtype=float)
    lo, hi = float(boundary[0]), float(boundary[1])
    if not hi > lo:
        raise ParameterDomainError(f"bspline: degenerate boundary [{lo}, {hi}]")
    t = np.concatenate([[lo] * (degree + 1), np.asarray(knots, dtype=float), [hi] * (degree + 1)])
    flat = np.clip(x.ravel(), lo, hi)
    nan = np.isnan(flat)
    xv = np.where(nan, lo, flat)
    m = len(t) - 1
    # degree-0: half-open spans, except the last non-empty span also closes on the right
    B = np.zeros((xv.size, m))
    last = max(i for i in range(m) if t[i] < t[i + 1])
    for i in range(m):
        if t[i] < t[i + 1]:
            right = (xv <= t[i + 1]) if i == last else (xv < t[i + 1])
            B[:, i] = ((xv >= t[i]) & right).astype(float)
    for d in range(1, degree + 1):
        nxt = np.zeros((xv.size, m - d))
        for i in range(m - d):
            left_den = t[i + d] - t[i]
            right_den = t[i + d + 1] - t[i + 1]
            term = np.zeros(xv.size)
            if left_den > 0:
                term += (xv - t[i]) / left_den * B[:, i]
            if right_den > 0:
                term += (t[i + d + 1] - xv) / right_den * B[:, i + 1]
            nxt[:, i] = term
        B = nxt
    if not intercept:
        B = B[:, 1:]
    B[nan] = np.nan
    return B.reshape(x.shape + (B.shape[1],))


def bspline(
    u: ForecastMatrix,
    df: int,
    degree: int = 3,
    intercept: bool = False,
    state: dict | None = None,
) -> list[ForecastMatrix]:
    """Spline basis of ``u``; knots come from pooled values and are frozen in ``state``."""
    df, degree = int(df), int(degree)
    intercept = bool(intercept)
    n_interior = df - degree - (1 if intercept else 0)
    if degree < 0 or n_interior < 0:
        raise ParameterDomainError(
            f"bspline: df={df} too small for degree={degree}, intercept={intercept}"
        )
    state = {} if state is None else state
    if "knots" not in state:
        pooled = u.values[np.isfinite(u.values)]
        if pooled.size == 0:
            raise DataError("bspline: input has no finite values to place knots")
        lo, hi = float(pooled.min()), float(pooled.max())
        if not hi > lo:
            raise DataError(f"bspline: input is constant ({lo}); cannot place knots")
        probs = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
        state["knots"] = np.quantile(pooled, probs).tolist()
        state["boundary"] = [lo, hi]
    knots, boundary = state["knots"], tuple(state["boundary"])
    if len(knots) != n_interior:
        raise DataError(f"bspline: state holds {len(knots)} knots, df requires {n_interior}")
    B = bspline_basis(u.values, knots, boundary, degree, intercept)
    return [u.with_values(B[..., j]) for j in range(B.shape[-1])]


def fs(u: ForecastMatrix, nharmonics: int) -> list[ForecastMatrix]:
    """Fourier series sin(2 pi j u), cos(2 pi j u) for j = 1..nharmonics (period 1)."""
    if int(nharmonics) != nharmonics or nharmonics < 1:
        raise ParameterDomainError(f"fs: nharmonics must be a positive integer, got {nharmonics}")
    out = []
    for j in range(1, int(nharmonics) + 1):
        arg = 2.0 * np.pi * j * u.values
        out.append(u.with_values(np.sin(arg)))
        out.append(u.with_values(np.cos(arg)))
    return out


def ar(y: np.ndarray, lags: Sequence[int], horizons: Sequence[int], state: dict | None = None) -> list[ForecastMatrix]:
    """Lagged output y_{t-lag} at each forecast origin t, repeated for every horizon.

    ``state["history"]`` holds the most recent max(lags) observations seen by a
    previous call.
    """
    lags = [int(l) for l in lags]
    if any(l < 0 for l in lags):
        raise ParameterDomainError(f"AR: lags must be non-negative, got {lags}")
    if len(set(lags)) != len(lags):
        raise ParameterDomainError(f"AR: lags must be distinct, got {lags}")
    state = {} if state is None else state
    L = max(lags) if lags else 0
    hist = np.array(state.get("history", [np.nan] * L), dtype=float)
    if hist.shape != (L,):
        raise DataError(f"AR: state history has {hist.size} values, expected {L}")
    y = np.asarray(y, dtype=float)
    ext = np.concatenate([hist, y])
    out = []
    for lag in lags:
        series = ext[L - lag: L - lag + len(y)]
        out.append(ForecastMatrix.broadcast(series, horizons))
    state["history"] = ext[len(ext) - L:].tolist() if L else []
    return out


def multiply(a: list[ForecastMatrix], b: list[ForecastMatrix]) -> list[ForecastMatrix]:
    """Horizon-aligned product of every pair (a-major order)."""
    if not a or not b:
        raise ConfigError("%**%: operands must be non-empty lists of forecast matrices")
    for i, x in enumerate(a):
        for j, z in enumerate(b):
            if x.horizons != z.horizons or x.n != z.n:
                raise DataError(
                    f"%**%: left operand {i} (horizons {x.horizons}, {x.n} rows) does not match "
                    f"right operand {j} (horizons {z.horizons}, {z.n} rows)"
                )
    return [x.with_values(x.values * z.values) for x in a for z in b]


# ---------------------------------------------------------------------------
# expression evaluation

KERNEL_PARAMS = {
    "one": set(),
    "lp": {"a1"},
    "bspline": {"df", "degree", "intercept"},
    "fs": {"nharmonics"},
    "AR": {"lags"},
}
ALIASES = {"ar": "AR"}
_CONSTANTS = {"TRUE": 1, "FALSE": 0, "True": 1, "False": 0}

_ARITH = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.true_divide,
}


class _Evaluator:
    def __init__(self, data: DataSet, output: str | None, horizons: Sequence[int], state: dict):
        self.data = data
        self.output = output
        self.horizons = tuple(horizons)
        self.state = state

    def site(self, path: str) -> dict:
        return self.state.setdefault(path, {})

    def eval(self, node, path="0"):
        if isinstance(node, E.Num):
            return node.value
        if isinstance(node, E.CVec):
            return node.values
        if isinstance(node, E.Var):
            if node.name in _CONSTANTS and node.name not in self.data:
                return _CONSTANTS[node.name]
            return [self.variable(node.name)]
        if isinstance(node, E.BinOp):
            left = self.eval(node.left, path + ".0")
            right = self.eval(node.right, path + ".1")
            if node.op == "%**%":
                if not (isinstance(left, list) and isinstance(right, list)):
                    raise ConfigError("%**%: both operands must be forecast matrices")
                return multiply(left, right)
            return self.arith(node.op, left, right)
        if isinstance(node, E.Call):
            return self.call(node, path)
        raise TypeError(node)

    def variable(self, name: str) -> ForecastMatrix:
        if name in self.data.forecasts:
            fm = self.data.forecasts[name]
            missing = [k for k in self.horizons if k not in fm.horizons]
            if missing:
                raise DataError(f"forecast matrix {name!r} lacks horizon(s) {missing}")
            return fm.select(self.horizons)
        if name in self.data.observations:
            return ForecastMatrix.broadcast(self.data.observations[name], self.horizons)
        raise ConfigError(f"unknown variable {name!r}")

    def arith(self, op, left, right):
        lmat, rmat = isinstance(left, list), isinstance(right, list)
        if isinstance(left, tuple) or isinstance(right, tuple):
            raise ConfigError(f"operator {op!r} not defined for integer vectors")
        f = _ARITH[op]
        if lmat and rmat:
            raise ConfigError(
                f"operator {op!r} between two forecast matrices is not allowed; use %**%"
            )
        if lmat:
            return [m.with_values(f(m.values, right)) for m in left]
        if rmat:
            return [m.with_values(f(left, m.values)) for m in right]
        return f(left, right)

    def call(self, node: E.Call, path: str):
        func = ALIASES.get(node.func, node.func)
        if func not in KERNEL_PARAMS:
            raise ConfigError(f"unknown function {node.func!r}")
        allowed = KERNEL_PARAMS[func]
        kw = {}
        for i, (k, v) in enumerate(node.kwargs):
            if k not in allowed:
                raise ConfigError(f"{func}(): unknown argument {k!r}")
            kw[k] = self.eval(v, f"{path}.{len(node.args) + i}")
        args = [self.eval(a, f"{path}.{i}") for i, a in enumerate(node.args)]

        if func == "one":
            if args:
                raise ConfigError("one() takes no arguments")
            return [one(self.data.n, self.horizons)]
        if func == "AR":
            lags = args[0] if args else kw.get("lags")
            if len(args) > 1 or lags is None:
                raise ConfigError("AR() takes exactly one lag vector")
            if isinstance(lags, (int, float)):
                lags = (lags,)
            if not isinstance(lags, tuple) or any(int(l) != l for l in lags):
                raise ConfigError("AR(): lags must be integers")
            if self.output is None or self.output not in self.data.observations:
                raise ConfigError(f"AR(): model output {self.output!r} not in data")
            return ar(self.data.observations[self.output], lags, self.horizons, self.site(path))

        if len(args) != 1 or not isinstance(args[0], list):
            raise ConfigError(f"{func}() needs exactly one forecast-matrix argument")
        mats = args[0]
        for k, v in kw.items():
            if isinstance(v, (list, tuple)):
                raise ConfigError(f"{func}(): argument {k!r} must be a number")
        site = self.site(path)
        if func == "lp":
            if "a1" not in kw:
                raise ConfigError("lp(): argument 'a1' is required")
            subs = site.setdefault("columns", [{} for _ in mats])
            return [lp(m, kw["a1"], subs[i]) for i, m in enumerate(mats)]
        if func == "bspline":
            if "df" not in kw:
                raise ConfigError("bspline(): argument 'df' is required")
            subs = site.setdefault("columns", [{} for _ in mats])
            out = []
            for i, m in enumerate(mats):
                out += bspline(m, kw["df"], kw.get("degree", 3), kw.get("intercept", 0), subs[i])
            return out
        if func == "fs":
            if "nharmonics" not in kw:
                raise ConfigError("fs(): argument 'nharmonics' is required")
            out = []
            for m in mats:
                out += fs(m, kw["nharmonics"])
            return out
        raise AssertionError(func)


def evaluate_expr(
    node: E.Expr,
    data: DataSet,
    horizons: Sequence[int],
    output: str | None = None,
    state: dict | None = None,
) -> list[ForecastMatrix]:
    """Evaluate one input expression; ``state`` (per call site) is updated in place."""
    state = {} if state is None else state
    value = _Evaluator(data, output, horizons, state).eval(node)
    if not isinstance(value, list):
        raise ConfigError("expression must evaluate to forecast matrices, not a scalar")
    return value


def eval_transform(
    exprs: dict[str, E.Expr],
    data: DataSet,
    horizons: Sequence[int],
    output: str | None = None,
    state: TransformState | None = None,
) -> tuple[dict[str, list[ForecastMatrix]], TransformState]:
    """Evaluate all inputs of a model. The given state is not modified."""
    new_state = copy.deepcopy(state) if state else {}
    result = {}
    for name, node in exprs.items():
        result[name] = evaluate_expr(node, data, horizons, output, new_state.setdefault(name, {}))
    return result, new_state


def regressor_names(transformed: dict[str, list[ForecastMatrix]]) -> list[str]:
    names = []
    for name, mats in transformed.items():
        if len(mats) == 1:
            names.append(name)
        else:
            names += [f"{name}.{i + 1}" for i in range(len(mats))]
    return names
