"""Per-horizon forecast scores on a score-period mask."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import ResidualMatrix, complete_cases
from .errors import DataError

ScoreFun = Callable[[np.ndarray], float]


class EmptyScoreWarning(UserWarning):
    """A fit produced no complete cases inside its score period."""


def rmse(r) -> float:
    """Root mean square of the non-missing entries."""
    r = np.asarray(r, dtype=float)
    r = r[np.isfinite(r)]
    if r.size == 0:
        return float("nan")
    return float(np.sqrt(np.mean(r * r)))


@dataclass(frozen=True)
class ScoreReport:
    horizons: tuple[int, ...]
    values: tuple[float, ...]
    n_rows: int
    mask: np.ndarray
    evaluations: int = 1

    @property
    def total(self) -> float:
        return float(sum(self.values))

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.horizons, self.values))


def score(
    resid: ResidualMatrix,
    scoreperiod: np.ndarray | None = None,
    horizons=None,
    scorefun: ScoreFun = rmse,
) -> ScoreReport:
    """Score each horizon on the same rows: score period AND complete cases."""
    horizons = tuple(resid.horizons if horizons is None else horizons)
    if scoreperiod is None:
        scoreperiod = np.ones(resid.n, dtype=bool)
    scoreperiod = np.asarray(scoreperiod, dtype=bool)
    if scoreperiod.shape != (resid.n,):
        raise DataError(f"score period has length {scoreperiod.size}, residuals have {resid.n} rows")
    mask = scoreperiod & complete_cases(resid, horizons)
    if not mask.any():
        raise DataError("no complete cases in the score period")
    values = tuple(float(scorefun(resid.column(k)[mask])) for k in horizons)
    return ScoreReport(horizons, values, int(mask.sum()), mask)
