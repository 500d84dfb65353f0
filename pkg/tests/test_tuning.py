import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from onlinefc.data import ResidualMatrix
from onlinefc.errors import ConfigError, DataError, NumericError
from onlinefc.model import ModelSpec, ParameterBounds, ScorePeriod
from onlinefc.regression import ls_fit
from onlinefc.synthetic import lp_recovery
from onlinefc.tuning import (
    PENALTY,
    BoundaryWarning,
    OptimSettings,
    objective,
    optimize,
    rmse,
    score,
    to_bounded,
    to_unbounded,
)


def test_rmse_examples():
    assert rmse([0, 0, 0]) == 0
    assert rmse([3, 4]) == pytest.approx(3.5355339059327378, rel=1e-15)
    assert rmse([1, np.nan, -1]) == 1


def test_score_brute_force(rng):
    v = rng.normal(size=(50, 3))
    v[rng.random(v.shape) < 0.1] = np.nan
    r = ResidualMatrix((1, 2, 3), v)
    sp = np.arange(50) >= 5
    rep = score(r, sp)
    rows = [t for t in range(50) if t >= 5 and all(np.isfinite(v[t, j]) for j in range(3))]
    assert rep.n_rows == len(rows)
    for j in range(3):
        acc = sum(v[t, j] ** 2 for t in rows)
        assert rep.values[j] == pytest.approx(np.sqrt(acc / len(rows)), rel=1e-12)
    assert rep.total == pytest.approx(sum(rep.values))


def test_score_perfect_and_empty():
    assert score(ResidualMatrix((1, 2), np.zeros((4, 2)))).values == (0.0, 0.0)
    with pytest.raises(DataError):
        score(ResidualMatrix((1,), np.full((4, 1), np.nan)))


def test_score_models_share_rows(rng):
    a = rng.normal(size=(30, 2))
    b = rng.normal(size=(30, 2))
    b[3] = np.nan
    from onlinefc.data import complete_cases

    mask = complete_cases([ResidualMatrix((1, 2), a), ResidualMatrix((1, 2), b)])
    assert score(ResidualMatrix((1, 2), a), mask).n_rows == score(ResidualMatrix((1, 2), b), mask).n_rows == 29


@given(st.floats(-3, 3), st.floats(-3, 0), st.floats(0.01, 5))
def test_logit_map_is_bijective(u, lo, width):
    hi = lo + width
    x = lo + width * (0.5 + 0.49 * np.tanh(u))
    assert to_bounded(to_unbounded(x, lo, hi), lo, hi) == pytest.approx(x, abs=1e-12 * max(1, abs(x)))
    z = to_unbounded(to_bounded(u, lo, hi), lo, hi)
    assert z == pytest.approx(u, abs=1e-9)


@pytest.fixture(scope="module")
def lp_case():
    data = lp_recovery(n=1200, seed=11)
    model = ModelSpec(
        "y",
        {"mu": "one()", "u": "lp(u, a1=0.5)"},
        kseq=(1, 2, 3),
        regprm={"lambda": 0.99},
        bounds={"u__a1": ParameterBounds("u__a1", 0.3, 0.5, 0.9999)},
        scoreperiod=ScorePeriod(100),
    )
    return data, model


def test_true_parameter_beats_random_perturbations(lp_case):
    data, model = lp_case
    rng = np.random.default_rng(0)
    best = objective({"u__a1": 0.85}, model, data)
    draws = rng.uniform(0.3, 0.9999, 400)
    draws = draws[np.abs(draws - 0.85) > 0.03][:100]
    assert len(draws) == 100
    assert all(objective({"u__a1": a}, model, data) > best for a in draws)


def test_objective_binding_and_determinism(lp_case):
    data, model = lp_case
    v = objective({"u__a1": 0.8}, model, data, "ls")
    fixed = model.replace(inputs={"mu": "one()", "u": "lp(u, a1=0.8)"}, bounds={})
    assert v == ls_fit(None, fixed, data, return_analysis=False)
    assert objective({"u__a1": 0.8}, model, data, "ls") == v


def test_objective_penalty_and_errors(lp_case):
    data, model = lp_case
    assert objective({"u__a1": 0.1}, model, data) == PENALTY
    with pytest.raises(ConfigError):
        objective({"u__a1": 0.8}, model, data, kseq=[])
    with pytest.raises(ConfigError):
        objective({"u__a1": 0.8}, model, data, fit_scheme="qr")


def test_optimize_recovers_filter_coefficient(lp_case):
    data, model = lp_case
    with warnings.catch_warnings():
        warnings.simplefilter("error", BoundaryWarning)
        res = optimize(model, data)
    assert abs(res.params["u__a1"] - 0.85) < 0.05
    assert res.score <= res.init_score
    assert res.model.prm["u__a1"] == res.params["u__a1"]
    assert all(0.3 <= th["u__a1"] <= 0.9999 for th, _ in res.trace)


def _quadratic(center):
    def fit(theta, model, data, scorefun, return_analysis, scoreperiod):
        return sum((theta[k] - center[k]) ** 2 for k in center) + 1.0

    return fit


def _model(bounds):
    return ModelSpec("y", {"u": "lp(u, a1=0.5)", "v": "fs(v, nharmonics=2)"}, bounds=bounds)


def test_optimize_quadratic_interior_minimum():
    bounds = {
        "u__a1": ParameterBounds("u__a1", 0.0, 0.5, 0.99),
        "lambda": ParameterBounds("lambda", 0.9, 0.95, 1.0),
    }
    res = optimize(_model(bounds), None, fit_scheme=_quadratic({"u__a1": 0.3, "lambda": 0.97}),
                   settings=OptimSettings(fatol=1e-10, maxiter=500))
    assert res.params["u__a1"] == pytest.approx(0.3, abs=1e-3)
    assert res.params["lambda"] == pytest.approx(0.97, abs=1e-3)


def test_optimize_boundary_warning_and_integer_fixed():
    bounds = {
        "lambda": ParameterBounds("lambda", 0.9, 0.95, 0.9999),
        "v__nharmonics": ParameterBounds("v__nharmonics", 1, 3, 6, integer=True),
    }
    seen = []

    def fit(theta, *args):
        seen.append(theta["v__nharmonics"])
        return (theta["lambda"] - 2.0) ** 2

    with pytest.warns(BoundaryWarning, match="over-fit"):
        res = optimize(_model(bounds), None, fit_scheme=fit)
    assert res.at_bound == ["lambda"]
    assert set(seen) == {3}


def test_optimize_all_failures():
    bounds = {"u__a1": ParameterBounds("u__a1", 0.0, 0.5, 0.99)}

    def fit(*args):
        return float("nan")

    with pytest.raises(NumericError, match="all .* objective evaluations failed"):
        optimize(_model(bounds), None, fit_scheme=fit)


def test_optimize_needs_bounds():
    with pytest.raises(ConfigError):
        optimize(_model({}), None)
