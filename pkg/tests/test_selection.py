import itertools

import numpy as np
import pytest

from onlinefc.data import DataSet, ForecastMatrix, complete_cases
from onlinefc.errors import ConfigError
from onlinefc.model import ModelSpec, ParameterBounds, ScorePeriod
from onlinefc.regression import rls_fit
from onlinefc.scoring import score
from onlinefc.selection import candidates, step_selection
from onlinefc.synthetic import harmonic_case, selection_case

FULL = ModelSpec(
    "y", {"mu": "one()", "u1": "u1", "u2": "u2"}, kseq=(1, 2), regprm={"lambda": 0.999}, scoreperiod=ScorePeriod(50)
)


def exhaustive_best(full, data):
    """Score every non-empty subset of inputs on one shared complete-case mask."""
    names = list(full.inputs)
    fits = {}
    for r in range(1, len(names) + 1):
        for sub in itertools.combinations(names, r):
            fits[sub] = rls_fit(None, full.replace(inputs={n: full.inputs[n] for n in sub}), data)
    mask = full.scoreperiod.mask(data) & complete_cases([f.residuals for f in fits.values()], full.kseq)
    scores = {sub: score(f.residuals, mask, full.kseq).total for sub, f in fits.items()}
    return min(scores, key=scores.get), scores


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_forward_selection_finds_true_inputs(seed):
    data = selection_case(seed=seed)
    res = step_selection(FULL.replace(inputs={"mu": "one()"}), FULL, data, "forward")
    assert set(res.model.inputs) == {"mu", "u1"}
    best, _ = exhaustive_best(FULL, data)
    assert set(best) == {"mu", "u1"}


def test_optimal_start_returns_after_one_sweep():
    data = selection_case(seed=4)
    start = FULL.replace(inputs={"mu": "one()", "u1": "u1"})
    res = step_selection(start, FULL, data, "both")
    assert res.path == ["start"]
    assert {line.split("\t")[0] for line in res.log} == {"1"}
    assert res.model.inputs == start.inputs


def test_selection_never_worsens_and_replays():
    data = selection_case(seed=6)
    start = FULL.replace(inputs={"mu": "one()", "u2": "u2"})
    start_score = rls_fit(None, start, data).score
    a = step_selection(start, FULL, data, "both")
    b = step_selection(start, FULL, data, "both", threads=3)
    assert a.score <= start_score
    assert a.log == b.log and a.path == b.path


def test_candidates_share_one_mask():
    data = selection_case(seed=7)
    u2 = data["u2"].values.copy()
    u2[:150] = np.nan
    data = data.with_series(u2=ForecastMatrix(data["u2"].horizons, u2))
    res = step_selection(FULL.replace(inputs={"mu": "one()"}), FULL, data, "forward")
    line = next(l for l in res.log if l.startswith("1\t+u1\t"))
    fit = rls_fit(None, FULL.replace(inputs={"mu": "one()", "u1": "u1"}), data)
    fit_u2 = rls_fit(None, FULL.replace(inputs={"mu": "one()", "u2": "u2"}), data)
    mask = FULL.scoreperiod.mask(data) & complete_cases([fit.residuals, fit_u2.residuals], (1, 2))
    assert float(line.split("\t")[3]) == pytest.approx(score(fit.residuals, mask, (1, 2)).total, rel=1e-9)


def test_integer_parameter_selection_matches_grid():
    data = harmonic_case(seed=3)
    b = ParameterBounds("I__nharmonics", 1, 1, 6, integer=True)
    model = ModelSpec("y", {"mu": "one()", "I": "fs(tod, nharmonics=1)"}, regprm={"lambda": 0.999},
                      bounds={"I__nharmonics": b}, scoreperiod=ScorePeriod(100))
    res = step_selection(model, model, data, "forward")
    chosen = res.model.prm["I__nharmonics"]
    grid = {h: rls_fit({"I__nharmonics": h}, model, data).score for h in range(1, 7)}
    assert chosen in (2, 3, 4)
    assert min(grid, key=grid.get) in (2, 3, 4)
    # the greedy walk stops at a local optimum of the grid
    assert all(grid[chosen] <= grid[h] for h in (chosen - 1, chosen + 1) if h in grid)


def test_integer_edge_yields_no_candidate():
    b = ParameterBounds("I__nharmonics", 1, 1, 6, integer=True)
    m = ModelSpec("y", {"I": "fs(tod)"}, bounds={"I__nharmonics": b}, prm={"I__nharmonics": 1})
    assert [c.description for c in candidates(m, m, "backward")] == []
    assert [c.description for c in candidates(m, m, "forward")] == ["I__nharmonics=2"]


def test_selection_errors():
    data = selection_case(seed=0)
    with pytest.raises(ConfigError):
        step_selection(FULL, FULL, data, "sideways")
    with pytest.raises(ConfigError, match="non-empty"):
        step_selection(FULL.replace(inputs={}), FULL, data, "backward")
    with pytest.raises(ConfigError):
        step_selection(FULL.replace(inputs={"mu": "one()", "u9": "u1"}), FULL, data, "forward")
