"""Regression stage: per-horizon least squares and recursive least squares.

For horizon k the regressor row issued at origin t, x_{t+k|t}, is paired
with the observation y_{t+k}. LS uses all complete pairs at once (in-sample
predictions). RLS walks through time: at step t the pair (x_{t|t-k}, y_t)
updates the coefficients, which then give the forecast y_{t+k|t}
(out-of-sample predictions).
"""

from __future__ import annotations

import copy
import json
import os
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import DataSet, ForecastMatrix, ResidualMatrix, residuals
from .errors import ConfigError, DataError, NumericError, ParameterDomainError, StateVersionError
from .model import ModelSpec
from .scoring import EmptyScoreWarning, ScoreFun, ScoreReport, rmse, score
from .transform import eval_transform, regressor_names

SCHEMA_VERSION = 1
P0_SCALE = 10000.0


class RankDeficientWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DesignSet:
    """Regressors stacked as ``X[t, h, j]``: regressor j for horizon ``horizons[h]`` issued at t."""

    horizons: tuple[int, ...]
    names: list[str]
    X: np.ndarray
    y: np.ndarray

    def pairs(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Design matrix X_k and output y_k: row t of X_k pairs with y_{t+k}."""
        h = self.horizons.index(k)
        n = len(self.y)
        return self.X[: n - k, h, :], self.y[k:]


def stack_regressors(transformed: dict[str, list[ForecastMatrix]], horizons: Sequence[int]) -> tuple[list[str], np.ndarray]:
    mats = [m for ms in transformed.values() for m in ms]
    if not mats:
        raise ConfigError("model has no regressors")
    horizons = tuple(horizons)
    for m in mats:
        if m.horizons != horizons:
            raise DataError(f"regressor horizons {m.horizons} differ from model horizons {horizons}")
    X = np.stack([m.values for m in mats], axis=-1)
    return regressor_names(transformed), X


def build_design(transformed: dict[str, list[ForecastMatrix]], y, horizons: Sequence[int]) -> DesignSet:
    names, X = stack_regressors(transformed, horizons)
    y = np.asarray(y, dtype=float)
    if len(y) != X.shape[0]:
        raise DataError(f"output has {len(y)} values, regressors have {X.shape[0]} rows")
    return DesignSet(tuple(horizons), names, X, y)


@dataclass
class FitResult:
    scheme: str
    horizons: tuple[int, ...]
    names: list[str]
    t: np.ndarray
    y: np.ndarray
    yhat: ForecastMatrix
    residuals: ResidualMatrix
    coefficients: np.ndarray  # (n, H, p) trace; constant for LS
    beta: np.ndarray  # (H, p) final coefficients
    report: ScoreReport
    sigma2: dict[int, float]
    params: dict[str, float]
    transform_state: dict
    state: RlsState | None = None

    @property
    def score(self) -> float:
        return self.report.total


def _output(model: ModelSpec, data: DataSet) -> np.ndarray:
    if model.output not in data.observations:
        raise DataError(f"model output {model.output!r} not found among observations")
    return data.observations[model.output]


def _finish(scheme, model, data, params, design, yhat_values, trace, beta, tstate, scorefun, scoreperiod, state=None):
    yhat = ForecastMatrix(design.horizons, yhat_values)
    resid = residuals(yhat, design.y)
    if scoreperiod is None:
        scoreperiod = model.scoreperiod.mask(data)
    try:
        report = score(resid, scoreperiod, design.horizons, scorefun)
    except DataError:
        # too few rows (e.g. a short chunk fitted for online use): keep the fit, leave scores undefined
        warnings.warn("no complete cases in the score period; scores are NaN", EmptyScoreWarning, stacklevel=3)
        nan = tuple(float("nan") for _ in design.horizons)
        report = ScoreReport(design.horizons, nan, 0, np.zeros(len(design.y), dtype=bool))
    sigma2 = {}
    for k in design.horizons:
        r = resid.column(k)[report.mask]
        sigma2[k] = float(np.var(r, ddof=1)) if r.size > 1 else float("nan")
    return FitResult(
        scheme, design.horizons, design.names, data.t, design.y, yhat, resid,
        trace, beta, report, sigma2, dict(params), tstate, state,
    )


def _prepare(params, model: ModelSpec, data: DataSet, state=None):
    exprs, regprm = model.bind(params)
    y = _output(model, data)
    transformed, tstate = eval_transform(exprs, data, model.kseq, model.output, state)
    return build_design(transformed, y, model.kseq), regprm, tstate


# ---------------------------------------------------------------------------
# least squares


def ls_solve(X: np.ndarray, y: np.ndarray, horizon: int | None = None) -> np.ndarray:
    """Least squares via SVD; minimum-norm solution with a warning when rank deficient."""
    p = X.shape[1]
    if X.shape[0] == 0:
        raise DataError(f"horizon k{horizon}: no complete rows to fit")
    beta, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < p:
        cond = sv[0] / sv[-1] if sv[-1] > 0 else float("inf")
        warnings.warn(
            f"horizon k{horizon}: design matrix has rank {rank} < {p} columns "
            f"(condition estimate {cond:.3g}); using minimum-norm solution",
            RankDeficientWarning,
            stacklevel=3,
        )
    return beta


def ls_fit(
    params: dict | None,
    model: ModelSpec,
    data: DataSet,
    scorefun: ScoreFun = rmse,
    return_analysis: bool = True,
    scoreperiod: np.ndarray | None = None,
):
    """Fit LS per horizon; returns a FitResult, or the summed score when ``return_analysis`` is false."""
    design, _, tstate = _prepare(params, model, data)
    n, H, p = design.X.shape
    beta = np.zeros((H, p))
    for h, k in enumerate(design.horizons):
        Xk, yk = design.pairs(k)
        ok = np.isfinite(Xk).all(axis=1) & np.isfinite(yk)
        beta[h] = ls_solve(Xk[ok], yk[ok], k)
    yhat = np.einsum("thj,hj->th", design.X, beta)
    trace = np.broadcast_to(beta, (n, H, p))
    fit = _finish("ls", model, data, model.params(params), design, yhat, trace, beta, tstate, scorefun, scoreperiod)
    return fit if return_analysis else fit.score


def ls_predict(beta: np.ndarray, X: np.ndarray, horizons: Sequence[int]) -> ForecastMatrix:
    """Forecasts x_{t+k|t}' beta_k from stacked regressors ``X[t, h, j]``."""
    return ForecastMatrix(tuple(horizons), np.einsum("thj,hj->th", X, np.asarray(beta, dtype=float)))


def predict(fit: FitResult, model: ModelSpec, newdata: DataSet) -> ForecastMatrix:
    """Out-of-sample forecasts on data following the fit period, with fixed coefficients."""
    design, _, _ = _prepare(fit.params, model, newdata, fit.transform_state)
    return ls_predict(fit.beta, design.X, design.horizons)


# ---------------------------------------------------------------------------
# recursive least squares


@dataclass
class RlsHorizon:
    P: np.ndarray
    beta: np.ndarray
    lam: float
    step: int = 0

    @classmethod
    def initial(cls, p: int, lam: float) -> RlsHorizon:
        return cls(P0_SCALE * np.eye(p), np.zeros(p), lam)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 < lam <= 1.0:
        raise ParameterDomainError(f"forgetting factor lambda must be in (0, 1], got {lam}")
    return lam


def rls_update(state: RlsHorizon, x, y: float, horizon: int | None = None) -> RlsHorizon:
    """One Kalman-gain RLS step; returns the state unchanged when x or y is missing."""
    x = np.asarray(x, dtype=float)
    lam = _check_lambda(state.lam)
    if not (np.isfinite(y) and np.isfinite(x).all()):
        return state
    with np.errstate(all="ignore"):
        P = state.P
        Px = P @ x
        K = Px / (lam + x @ Px)
        beta = state.beta + K * (y - x @ state.beta)
        P = (P - np.outer(K, x @ P)) / lam
        P = 0.5 * (P + P.T)
    if not (np.isfinite(beta).all() and np.isfinite(P).all()):
        raise NumericError("non-finite RLS update", horizon, state.step)
    return RlsHorizon(P, beta, lam, state.step + 1)


@dataclass
class RlsState:
    """Everything needed to continue an RLS fit on new rows."""

    model: ModelSpec
    params: dict
    horizons: tuple[int, ...]
    names: list[str]
    lam: float
    P: np.ndarray  # (H, p, p)
    beta: np.ndarray  # (H, p)
    updates: np.ndarray  # (H,) number of updates applied per horizon
    pending: np.ndarray  # (max k, H, p) regressor rows of the latest origins
    transform_state: dict = field(default_factory=dict)
    step: int = 0
    last_t: object = None
    dt: float | None = None
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def initial(cls, model, params, names, lam, transform_state=None) -> RlsState:
        H, p = len(model.kseq), len(names)
        K = max(model.kseq)
        return cls(
            model, dict(params), tuple(model.kseq), list(names), _check_lambda(lam),
            np.repeat(P0_SCALE * np.eye(p)[None], H, axis=0), np.zeros((H, p)),
            np.zeros(H, dtype=int), np.full((K, H, p), np.nan), transform_state or {},
        )

    def horizon(self, k: int) -> RlsHorizon:
        h = self.horizons.index(k)
        return RlsHorizon(self.P[h].copy(), self.beta[h].copy(), self.lam, int(self.updates[h]))

    def copy(self) -> RlsState:
        return copy.deepcopy(self)


def _rls_step(P, beta, x, y, lam, valid, step, horizons):
    """Batched Kalman-gain update over horizons; invalid horizons keep their state."""
    xs = np.where(valid[:, None], x, 0.0)
    with np.errstate(all="ignore"):
        Px = np.matmul(P, xs[:, :, None])[:, :, 0]
        K = Px / (lam + np.sum(xs * Px, axis=1))[:, None]
        err = np.where(valid, y, 0.0) - np.sum(xs * beta, axis=1)
        beta_new = beta + K * err[:, None]
        P_new = (P - K[:, :, None] * Px[:, None, :]) / lam
        P_new = 0.5 * (P_new + np.swapaxes(P_new, 1, 2))
    bad = valid & ~(np.isfinite(beta_new).all(axis=1) & np.isfinite(P_new).all(axis=(1, 2)))
    if bad.any():
        raise NumericError("non-finite RLS update", horizons[int(np.argmax(bad))], step)
    return (
        np.where(valid[:, None, None], P_new, P),
        np.where(valid[:, None], beta_new, beta),
    )


def _rls_run(state: RlsState, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Advance ``state`` in place over new rows; returns forecasts (m, H) and coefficient trace."""
    m = len(y)
    H, p = state.beta.shape
    ks = np.asarray(state.horizons)
    K = state.pending.shape[0]
    Xe = np.concatenate([state.pending, X]) if m else state.pending
    hidx = np.arange(H)
    yhat = np.empty((m, H))
    trace = np.empty((m, H, p))
    P, beta, updates = state.P, state.beta, state.updates.copy()
    for t in range(m):
        xp = Xe[K + t - ks, hidx]
        valid = np.isfinite(xp).all(axis=1) & bool(np.isfinite(y[t]))
        if valid.any():
            P, beta = _rls_step(P, beta, xp, y[t], state.lam, valid, state.step + t, state.horizons)
            updates += valid
        yhat[t] = np.sum(Xe[K + t] * beta, axis=1)
        trace[t] = beta
    state.P, state.beta, state.updates = P, beta, updates
    state.pending = Xe[len(Xe) - K:].copy() if K else np.empty((0, H, p))
    state.step += m
    return yhat, trace


def _time_step(t: np.ndarray):
    if len(t) < 2:
        return None
    d = t[1] - t[0]
    return float(d / np.timedelta64(1, "s")) if np.issubdtype(t.dtype, np.datetime64) else float(d)


def _set_clock(state: RlsState, t: np.ndarray) -> None:
    if len(t) == 0:
        return
    if state.last_t is not None and state.dt is not None:
        prev = _restore_time(state.last_t, t.dtype)
        gap = _time_step(np.array([prev, t[0]]))
        if gap != state.dt:
            raise DataError(
                f"new data starts at {t[0]}, expected one step ({state.dt}) after {state.last_t}"
            )
    state.dt = state.dt if state.dt is not None else _time_step(t)
    last = t[-1]
    state.last_t = (
        str(np.datetime_as_string(last.astype("datetime64[s]"), unit="s")) + "Z"
        if np.issubdtype(t.dtype, np.datetime64)
        else float(last)
    )


def _restore_time(v, dtype):
    if np.issubdtype(dtype, np.datetime64):
        return np.datetime64(str(v).rstrip("Z"), "s")
    return float(v)


def _lambda(regprm: dict) -> float:
    if "lambda" not in regprm:
        raise ConfigError("RLS needs the regression parameter 'lambda'")
    return _check_lambda(regprm["lambda"])


def rls_fit(
    params: dict | None,
    model: ModelSpec,
    data: DataSet,
    scorefun: ScoreFun = rmse,
    return_analysis: bool = True,
    scoreperiod: np.ndarray | None = None,
):
    """Fit RLS per horizon from P0 = 10000 I, beta0 = 0; predictions are out-of-sample."""
    design, regprm, tstate = _prepare(params, model, data)
    state = RlsState.initial(model, model.params(params), design.names, _lambda(regprm), tstate)
    yhat, trace = _rls_run(state, design.X, design.y)
    _set_clock(state, data.t)
    fit = _finish(
        "rls", model, data, state.params, design, yhat, trace, state.beta.copy(),
        tstate, scorefun, scoreperiod, state,
    )
    return fit if return_analysis else fit.score


def rls_predict(state: RlsState, newdata: DataSet) -> ForecastMatrix:
    """Forecasts for new rows from the current coefficients; ``state`` is not modified."""
    design, _, _ = _prepare(state.params, state.model, newdata, state.transform_state)
    return ls_predict(state.beta, design.X, design.horizons)


def rls_advance(state: RlsState, newdata: DataSet) -> tuple[RlsState, ForecastMatrix, np.ndarray]:
    """Consume new rows: advance transformations, update coefficients, forecast.

    Returns the new state, forecasts for the new rows and the coefficient trace.
    """
    new = state.copy()
    design, _, tstate = _prepare(new.params, new.model, newdata, new.transform_state)
    if design.names != new.names:
        raise DataError(f"regressors {design.names} differ from state regressors {new.names}")
    _set_clock(new, newdata.t)
    yhat, trace = _rls_run(new, design.X, design.y)
    new.transform_state = tstate
    return new, ForecastMatrix(design.horizons, yhat), trace


# ---------------------------------------------------------------------------
# state files


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if np.isnan(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def state_to_dict(state: RlsState) -> dict:
    return {
        "schema_version": state.schema_version,
        "model": state.model.to_config(),
        "params": _jsonable(state.params),
        "coef_names": list(state.names),
        "lambda": state.lam,
        "step": state.step,
        "last_t": state.last_t,
        "dt": state.dt,
        "horizons": [
            {
                "k": k,
                "P": _jsonable(state.P[h].ravel()),
                "beta": _jsonable(state.beta[h]),
                "lambda": state.lam,
                "step": int(state.updates[h]),
            }
            for h, k in enumerate(state.horizons)
        ],
        "pending": _jsonable(state.pending),
        "transform_state": _jsonable(state.transform_state),
    }


def state_from_dict(d: dict) -> RlsState:
    version = d.get("schema_version") if isinstance(d, dict) else None
    if version != SCHEMA_VERSION:
        raise StateVersionError(
            f"state schema version {version!r} is not supported (expected {SCHEMA_VERSION}); "
            "refit the model to migrate"
        )
    try:
        model = ModelSpec.from_config(d["model"])
        names = list(d["coef_names"])
        p = len(names)
        hs = d["horizons"]
        horizons = tuple(int(h["k"]) for h in hs)
        if horizons != model.kseq:
            raise DataError(f"state horizons {horizons} differ from model kseq {model.kseq}")
        P = np.array([np.array(h["P"], dtype=float).reshape(p, p) for h in hs])
        beta = np.array([np.array(h["beta"], dtype=float) for h in hs]).reshape(len(hs), p)
        pending = np.array(d["pending"], dtype=float).reshape(max(horizons), len(hs), p)
        return RlsState(
            model=model,
            params=dict(d["params"]),
            horizons=horizons,
            names=names,
            lam=_check_lambda(d["lambda"]),
            P=P,
            beta=beta,
            updates=np.array([int(h["step"]) for h in hs]),
            pending=pending,
            transform_state=d["transform_state"],
            step=int(d["step"]),
            last_t=d["last_t"],
            dt=d["dt"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"corrupt state: {exc!r}") from None


def dumps_state(state: RlsState) -> str:
    return json.dumps(state_to_dict(state), indent=1, allow_nan=False) + "\n"


def save_state(state: RlsState, path: str | Path) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    text = dumps_state(state)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_state(path: str | Path) -> RlsState:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read state file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt state file {path}: {exc}") from None
    return state_from_dict(d)
