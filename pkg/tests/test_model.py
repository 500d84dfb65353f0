import numpy as np
import pytest

from onlinefc.data import DataSet
from onlinefc.errors import ConfigError
from onlinefc.model import ModelSpec, ParameterBounds, ScorePeriod, dump_model, load_model, parse_config, parse_kseq


@pytest.mark.parametrize(
    "spec, expected",
    [("1:24", list(range(1, 25))), ("3,18", [3, 18]), ("c(3,18)", [3, 18]), (5, [5]), ([1, "3:4"], [1, 3, 4])],
)
def test_parse_kseq(spec, expected):
    assert parse_kseq(spec) == expected


@pytest.mark.parametrize("spec", ["", "3:1", "1,1", "a", True, 1.5])
def test_parse_kseq_rejects(spec):
    with pytest.raises(ConfigError):
        parse_kseq(spec)


def test_parameter_bounds_validation():
    ParameterBounds("Ta__a1", 0.5, 0.8, 0.9999)
    ParameterBounds("I__nharmonics", 1, 1, 6, integer=True)
    with pytest.raises(ConfigError):
        ParameterBounds("x", 1.0, 1.0, 2.0)
    with pytest.raises(ConfigError):
        ParameterBounds("x", 1, 2.5, 4, integer=True)
    b = ParameterBounds("Ta__a1", 0, 0.5, 1)
    assert (b.input, b.param) == ("Ta", "a1")


CONFIG = """\
output: heatload
inputs:
  mu: one()
  Ta: lp(Ta, a1=0.9)
kseq: 1:6
regprm: {lambda: 0.9}
prmbounds:
  Ta__a1: {min: 0.8, init: 0.9, max: 0.9999}
  lambda: [0.9, 0.99, 0.9999]
scoreperiod: {burnin: 120}
"""


def test_config_parse_and_round_trip(tmp_path):
    m = parse_config(CONFIG)
    assert m.kseq == tuple(range(1, 7))
    assert m.bounds["lambda"].init == 0.99
    assert m.scoreperiod == ScorePeriod(120)
    path = tmp_path / "m.yaml"
    path.write_text(dump_model(m, "header line"), encoding="utf-8")
    assert path.read_text().startswith("# header line\n")
    assert load_model(path) == m


def test_config_errors():
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config("output: y\ninputs: {mu: one()}\nbogus: 1\n")
    with pytest.raises(ConfigError, match="offset"):
        parse_config("output: y\ninputs: {x: 'lp(Ta'}\n")
    with pytest.raises(ConfigError):
        parse_config("output: y\ninputs: {}\n")


def test_bind_substitutes_named_argument():
    m = parse_config(CONFIG)
    exprs, regprm = m.bind({"Ta__a1": 0.8, "lambda": 0.95})
    assert m.replace(prm={"Ta__a1": 0.8}).bound_sources()["Ta"] == "lp(Ta, a1=0.8)"
    assert regprm == {"lambda": 0.95}


def test_bind_inserts_missing_argument():
    m = ModelSpec("y", {"I": "fs(tday/24)"})
    assert m.bound_sources({"I__nharmonics": 3}) == {"I": "fs(tday / 24, nharmonics=3)"}
    with pytest.raises(ConfigError, match="accepts"):
        m.bound_sources({"I__a1": 0.5})
    with pytest.raises(ConfigError, match="unknown input"):
        m.bound_sources({"Tx__a1": 0.5})


def test_integer_parameters_are_rounded():
    m = ModelSpec("y", {"I": "fs(u, nharmonics=2)"}, bounds={"I__nharmonics": ParameterBounds("I__nharmonics", 1, 2, 6, True)})
    assert m.bound_sources({"I__nharmonics": 3.0}) == {"I": "fs(u, nharmonics=3)"}


def test_scoreperiod_mask():
    d = DataSet(np.arange(10.0))
    assert ScorePeriod(3).mask(d).tolist() == [False] * 3 + [True] * 7
    assert ScorePeriod(0, 2, 6).mask(d).sum() == 4
