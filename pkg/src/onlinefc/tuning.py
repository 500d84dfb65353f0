"""Offline parameter tuning: bounded Nelder-Mead on the summed per-horizon score.

Each bounded parameter is optimized on the real line through a scaled logit,
so every evaluation stays strictly inside (min, max).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .data import DataSet
from .errors import ConfigError, NumericError, ParameterDomainError
from .model import ModelSpec, ParameterBounds, parse_kseq
from .regression import ls_fit, rls_fit
from .scoring import ScoreFun, ScoreReport, rmse, score  # noqa: F401  (re-exported)

# returned by the objective for parameter vectors outside the declared bounds
PENALTY = 1e10

SCHEMES: dict[str, Callable] = {"ls": ls_fit, "rls": rls_fit}


class BoundaryWarning(UserWarning):
    pass


def to_unbounded(x, lo, hi):
    return logit((np.asarray(x, dtype=float) - lo) / (hi - lo))


def to_bounded(z, lo, hi):
    return lo + (hi - lo) * expit(np.asarray(z, dtype=float))


def _scheme(fit_scheme) -> Callable:
    if callable(fit_scheme):
        return fit_scheme
    try:
        return SCHEMES[fit_scheme]
    except KeyError:
        raise ConfigError(f"unknown fit scheme {fit_scheme!r}; use 'ls' or 'rls'") from None


def objective(
    theta: dict[str, float],
    model: ModelSpec,
    data: DataSet,
    fit_scheme="rls",
    kseq: Sequence[int] | None = None,
    scorefun: ScoreFun = rmse,
    scoreperiod: np.ndarray | None = None,
) -> float:
    """Summed score over ``kseq`` for the offline parameters ``theta``.

    Values outside declared bounds give ``PENALTY``; numerical failures give inf.
    """
    if kseq is not None:
        kseq = list(kseq)
        if not kseq:
            raise ConfigError("kseq is empty")
        model = model.with_kseq(kseq)
    for name, value in theta.items():
        b = model.bounds.get(name)
        if b is not None and not (b.min <= value <= b.max):
            return PENALTY
    try:
        val = float(_scheme(fit_scheme)(theta, model, data, scorefun, False, scoreperiod))
    except (NumericError, ParameterDomainError, FloatingPointError):
        return float("inf")
    return val if np.isfinite(val) else float("inf")


@dataclass
class OptimSettings:
    fatol: float = 1e-4
    maxiter: int = 200
    initial_step: float = 1.0  # simplex edge in logit units
    boundary_tol: float = 1e-3  # fraction of the range counted as "at the bound"


@dataclass
class OptimResult:
    params: dict[str, float]
    score: float
    init_score: float
    model: ModelSpec
    trace: list[tuple[dict[str, float], float]] = field(default_factory=list)
    at_bound: list[str] = field(default_factory=list)

    @property
    def nfev(self) -> int:
        return len(self.trace)


def optimize(
    model: ModelSpec,
    data: DataSet,
    kseq: Sequence[int] | str | None = None,
    fit_scheme="rls",
    settings: OptimSettings | None = None,
    start: dict[str, float] | None = None,
    scorefun: ScoreFun = rmse,
    scoreperiod: np.ndarray | None = None,
) -> OptimResult:
    """Minimize the objective over the model's continuous bounded parameters.

    Integer-flagged parameters are held at their current value. The returned
    model carries the optimum in ``prm``.
    """
    settings = settings or OptimSettings()
    kseq = model.kseq if kseq is None else parse_kseq(kseq)
    bounds = model.active_bounds()
    if not bounds:
        raise ConfigError("no parameter bounds to optimize")
    start = {**model.prm, **(start or {})}
    free: list[ParameterBounds] = [b for b in bounds.values() if not b.integer]
    fixed = {b.name: int(round(start.get(b.name, b.init))) for b in bounds.values() if b.integer}

    lo = np.array([b.min for b in free])
    hi = np.array([b.max for b in free])
    x0 = []
    for b in free:
        v = float(start.get(b.name, b.init))
        if not b.min < v < b.max:
            v = b.init
        x0.append(v)
    trace: list[tuple[dict[str, float], float]] = []

    def evaluate(x) -> float:
        assert np.all((lo <= x) & (x <= hi)), f"evaluation outside bounds: {x}"
        theta = {**fixed, **{b.name: float(v) for b, v in zip(free, x)}}
        val = objective(theta, model, data, fit_scheme, kseq, scorefun, scoreperiod)
        trace.append((theta, val))
        return val

    init_score = evaluate(np.array(x0))
    if free:
        z0 = to_unbounded(x0, lo, hi)
        simplex = np.vstack([z0] + [z0 + settings.initial_step * e for e in np.eye(len(free))])
        # the simplex needs finite values; failures rank behind out-of-bound penalties
        minimize(
            lambda z: min(evaluate(to_bounded(z, lo, hi)), 10 * PENALTY),
            z0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "fatol": settings.fatol,
                "xatol": np.inf,
                "maxiter": settings.maxiter,
            },
        )
    finite = [(th, v) for th, v in trace if np.isfinite(v) and v < PENALTY]
    if not finite:
        lines = "\n".join(f"  {th} -> {v}" for th, v in trace[:20])
        raise NumericError(f"all {len(trace)} objective evaluations failed:\n{lines}")
    best_theta, best = min(finite, key=lambda tv: tv[1])

    at_bound = []
    for b in free:
        v = best_theta[b.name]
        tol = settings.boundary_tol * (b.max - b.min)
        if v - b.min < tol or b.max - v < tol:
            at_bound.append(b.name)
            warnings.warn(
                f"optimum of {b.name!r} = {v:.6g} is at its bound [{b.min}, {b.max}]"
                + ("; forgetting factor near 1 may over-fit" if b.param == "lambda" and b.max - v < tol else ""),
                BoundaryWarning,
                stacklevel=2,
            )
    new_model = model.replace(prm={**model.prm, **best_theta})
    return OptimResult(dict(best_theta), best, init_score, new_model, trace, at_bound)
