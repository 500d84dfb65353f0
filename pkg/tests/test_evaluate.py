import numpy as np
import pytest

from onlinefc.data import ResidualMatrix
from onlinefc.errors import DataError
from onlinefc.evaluate import (
    acf,
    ccf,
    cumulative_squared_error,
    emit_plot_data,
    plot_rows,
    read_plot_csv,
    score_table,
)
from onlinefc.model import ModelSpec, ScorePeriod
from onlinefc.regression import ls_fit, rls_fit
from onlinefc.synthetic import building_like


def test_acf_alternating_and_lag0():
    x = np.tile([1.0, -1.0], 5000)
    cg = acf(x, 3)
    assert cg.values[0] == 1.0
    assert cg.values[1] == pytest.approx(-1.0, abs=1e-3)
    assert cg.band == pytest.approx(1.96 / 100)


def test_acf_pairwise_complete_oracle(rng):
    x = rng.normal(size=200)
    x[rng.random(200) < 0.1] = np.nan
    cg = acf(x, 10)
    ok = np.isfinite(x)
    xbar = x[ok].mean()
    den = sum((v - xbar) ** 2 for v in x[ok])
    for l in range(11):
        num = sum((x[t] - xbar) * (x[t + l] - xbar) for t in range(200 - l) if ok[t] and ok[t + l])
        assert cg.values[l] == pytest.approx(num / den, abs=1e-12)
    assert cg.m == ok.sum()


def test_acf_white_noise_within_band():
    rng = np.random.default_rng(1)
    fractions = [acf(rng.normal(size=2000), 96).outside_band().mean() for _ in range(20)]
    assert np.mean(fractions) == pytest.approx(0.05, abs=0.03)
    assert np.mean([f <= 0.07 for f in fractions]) >= 0.8


def test_acf_errors():
    with pytest.raises(DataError, match="variance"):
        acf(np.ones(10), 3)
    with pytest.raises(DataError):
        acf(np.array([1.0, np.nan]), 3)


def test_ccf(rng):
    r = rng.normal(size=500)
    c = ccf(r, r, 5)
    assert c.values[c.lags == 0][0] == pytest.approx(1.0)
    u = np.r_[r[3:], rng.normal(size=3)]  # u_t = r_{t+3}
    c = ccf(r, u, 10)
    assert c.lags[np.argmax(c.values)] == 3
    ind = ccf(r, rng.normal(size=500), 30)
    assert (~ind.outside_band(exclude_zero=False)).mean() >= 0.9


def test_cumulative_squared_error(rng):
    r = ResidualMatrix((1,), np.array([[np.nan], [1.0], [1.0]]))
    assert cumulative_squared_error(r, 1).tolist() == [0, 1, 2]
    assert (cumulative_squared_error(ResidualMatrix((1,), np.zeros((4, 1))), 1) == 0).all()
    v = rng.normal(size=(30, 1))
    acc, out = 0.0, []
    for x in v[:, 0]:
        acc += x * x
        out.append(acc)
    np.testing.assert_allclose(cumulative_squared_error(ResidualMatrix((1,), v), 1), out, rtol=1e-14)


@pytest.fixture(scope="module")
def fits():
    d = building_like(300, (1, 2, 3))
    base = ModelSpec("heatload", {"mu": "one()", "Ta": "lp(Ta, a1=0.9)"}, kseq=(1, 2, 3),
                     regprm={"lambda": 0.99}, scoreperiod=ScorePeriod(24))
    return {
        "ls": ls_fit(None, base, d),
        "rls": rls_fit(None, base, d),
        "ar": rls_fit(None, base.replace(inputs={**base.inputs, "AR": "AR(c(0))"}), d),
    }


def test_score_table_brute_force(fits):
    sp = np.arange(300) >= 24
    table = score_table(fits, sp)
    rows = [t for t in range(300) if sp[t] and all(np.isfinite(f.residuals.values[t]).all() for f in fits.values())]
    assert table.n_rows == len(rows)
    for i, k in enumerate(table.horizons):
        for j, name in enumerate(table.models):
            r = fits[name].residuals.column(k)
            assert table.values[i, j] == pytest.approx(np.sqrt(sum(r[t] ** 2 for t in rows) / len(rows)), rel=1e-12)


def test_score_table_identical_models_and_permutation(fits):
    t = score_table({"a": fits["rls"], "b": fits["rls"]})
    np.testing.assert_array_equal(t.column("a"), t.column("b"))
    t1 = score_table(fits)
    t2 = score_table(dict(reversed(list(fits.items()))))
    for m in fits:
        np.testing.assert_array_equal(t1.column(m), t2.column(m))


def test_plot_rows(fits, tmp_path):
    rows = plot_rows("forecasts", fits["rls"], horizons=[1, 3])
    assert {s for _, s, _ in rows} == {"y", "yhat.k1", "yhat.k3"}
    with pytest.raises(DataError, match="empty selection"):
        plot_rows("residuals", fits["rls"], horizons=[7])
    with pytest.raises(DataError):
        plot_rows("histogram", fits["rls"])
    for kind in ("forecasts", "residuals", "acf", "coef_trace"):
        csv_path, svg_path = emit_plot_data(kind, fits["rls"], tmp_path / kind, lag_max=24)
        back = read_plot_csv(csv_path)
        assert back == [tuple(r) for r in plot_rows(kind, fits["rls"], lag_max=24)]
        assert svg_path.read_text().startswith("<svg") and "<script" not in svg_path.read_text()
    (p,) = emit_plot_data("score", score_table(fits), tmp_path / "score", svg=False)
    assert len(read_plot_csv(p)) == 9


def test_plot_csv_round_trip_reproduces_numbers(fits, tmp_path):
    (p, _) = emit_plot_data("coef_trace", fits["rls"], tmp_path / "c")
    vals = {(x, s): float(v) for x, s, v in read_plot_csv(p) if v}
    f = fits["rls"]
    assert vals[("10.0", "Ta.k2")] == f.coefficients[10, 1, 1]


def test_plot_output_is_deterministic(fits, tmp_path):
    a = emit_plot_data("acf", fits["ar"], tmp_path / "a")
    b = emit_plot_data("acf", fits["ar"], tmp_path / "b")
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()
