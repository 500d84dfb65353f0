"""Stepwise model selection over inputs and integer offline parameters.

Meant for the RLS scheme, whose out-of-sample predictions make the score an
honest criterion; LS scores are in-sample and would always favour larger models.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import DataSet, complete_cases
from .errors import ConfigError
from .model import ModelSpec, parse_kseq
from .scoring import ScoreFun, rmse, score
from .tuning import OptimSettings, _scheme, optimize

log = logging.getLogger(__name__)

# relative improvement needed to accept a candidate
MIN_IMPROVEMENT = 1e-6
DIRECTIONS = ("backward", "forward", "both")


@dataclass
class Candidate:
    description: str
    model: ModelSpec
    ncols: int = 0
    resid: object = None
    score: float = float("inf")


@dataclass
class SelectionResult:
    model: ModelSpec
    score: float
    log: list[str] = field(default_factory=list)
    path: list[str] = field(default_factory=list)


def _subset_inputs(full: ModelSpec, names: set[str], base: ModelSpec) -> dict[str, str]:
    inputs = {n: full.inputs[n] for n in full.inputs if n in names}
    for n in base.inputs:
        if n in names and n not in inputs:
            inputs[n] = base.inputs[n]
    return inputs


def candidates(incumbent: ModelSpec, full: ModelSpec, direction: str) -> list[Candidate]:
    out = []
    present = set(incumbent.inputs)
    bounds = incumbent.active_bounds()
    if direction in ("backward", "both"):
        for name in incumbent.inputs:
            if len(present) > 1:
                inputs = _subset_inputs(full, present - {name}, incumbent)
                out.append(Candidate(f"-{name}", incumbent.replace(inputs=inputs)))
        for b in bounds.values():
            v = int(round(incumbent.prm.get(b.name, b.init)))
            if b.integer and v - 1 >= b.min:
                out.append(Candidate(f"{b.name}={v - 1}", incumbent.replace(prm={**incumbent.prm, b.name: v - 1})))
    if direction in ("forward", "both"):
        for name in full.inputs:
            if name not in present:
                inputs = _subset_inputs(full, present | {name}, incumbent)
                out.append(Candidate(f"+{name}", incumbent.replace(inputs=inputs)))
        for b in bounds.values():
            v = int(round(incumbent.prm.get(b.name, b.init)))
            if b.integer and v + 1 <= b.max:
                out.append(Candidate(f"{b.name}={v + 1}", incumbent.replace(prm={**incumbent.prm, b.name: v + 1})))
    return out


def step_selection(
    start: ModelSpec,
    full: ModelSpec,
    data: DataSet,
    direction: str = "both",
    kseq: Sequence[int] | str | None = None,
    fit_scheme="rls",
    settings: OptimSettings | None = None,
    scorefun: ScoreFun = rmse,
    scoreperiod: np.ndarray | None = None,
    threads: int = 1,
    max_steps: int = 100,
) -> SelectionResult:
    """Greedy stepwise search; stops when no candidate improves the score."""
    if direction not in DIRECTIONS:
        raise ConfigError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if direction == "backward" and not start.inputs:
        raise ConfigError("backward selection needs a non-empty start model")
    if direction != "backward":
        extra = set(start.inputs) - set(full.inputs)
        if extra:
            raise ConfigError(f"start model inputs {sorted(extra)} are not in the full model")
    kseq = start.kseq if kseq is None else parse_kseq(kseq)
    fit = _scheme(fit_scheme)
    if scoreperiod is None:
        scoreperiod = start.scoreperiod.mask(data)
    # integer parameters start at their current value; bounds come from both models
    bounds = {**full.bounds, **start.bounds}
    prm = {**{n: b.init for n, b in bounds.items() if b.integer}, **full.prm, **start.prm}
    incumbent = start.replace(bounds=bounds, prm=prm, kseq=tuple(kseq))

    def tune(model: ModelSpec, warm: dict) -> ModelSpec:
        if not any(not b.integer for b in model.active_bounds().values()):
            return model
        res = optimize(model, data, kseq, fit_scheme, settings, warm, scorefun, scoreperiod)
        return res.model

    def evaluate(c: Candidate) -> Candidate:
        c.model = tune(c.model, incumbent.prm)
        r = fit(None, c.model, data, scorefun, True, scoreperiod)
        c.resid = r.residuals
        c.ncols = len(r.names)
        return c

    lines: list[str] = []
    path: list[str] = ["start"]
    current = evaluate(Candidate("start", incumbent))
    incumbent = current.model
    for step in range(1, max_steps + 1):
        cands = candidates(incumbent, full.replace(bounds=bounds), direction)
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                cands = list(pool.map(evaluate, cands))
        else:
            cands = [evaluate(c) for c in cands]
        everyone = [current] + cands
        mask = scoreperiod & complete_cases([c.resid for c in everyone], kseq)
        for c in everyone:
            c.score = score(c.resid, mask, kseq, scorefun).total
        lines.append(_line(step, current, "incumbent"))
        if not cands:
            break
        best = min(cands, key=lambda c: (c.score, c.ncols, c.description))
        improved = best.score < current.score - MIN_IMPROVEMENT * abs(current.score)
        for c in cands:
            lines.append(_line(step, c, "accepted" if (c is best and improved) else "rejected"))
        log.info("step %d: best %s %.6g vs %.6g", step, best.description, best.score, current.score)
        if not improved:
            break
        current, incumbent = best, best.model
        path.append(best.description)
    return SelectionResult(incumbent, current.score, lines, path)


def _line(step: int, c: Candidate, decision: str) -> str:
    inputs = ",".join(c.model.inputs)
    return f"{step}\t{c.description}\t[{inputs}]\t{c.score:.10g}\t{decision}"
