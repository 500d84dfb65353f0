"""Model specification and its YAML configuration file.

Offline parameters use the ``input__param`` naming convention: ``Ta__a1``
sets argument ``a1`` inside the expression of input ``Ta``. Bare names such
as ``lambda`` are regression-scheme parameters.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import yaml

from . import expr as E
from .data import DataSet, in_range
from .errors import ConfigError
from .transform import ALIASES, KERNEL_PARAMS

REGRESSION_PARAMS = {"lambda"}


@dataclass(frozen=True)
class ParameterBounds:
    name: str
    min: float
    init: float
    max: float
    integer: bool = False

    def __post_init__(self):
        if not self.min < self.init < self.max:
            if not (self.integer and self.min <= self.init <= self.max):
                raise ConfigError(
                    f"bounds for {self.name!r} need min < init < max, got "
                    f"({self.min}, {self.init}, {self.max})"
                )
        if self.integer and any(float(v) != int(v) for v in (self.min, self.init, self.max)):
            raise ConfigError(f"integer parameter {self.name!r} needs integral bounds")

    @property
    def input(self) -> str | None:
        return self.name.split("__", 1)[0] if "__" in self.name else None

    @property
    def param(self) -> str:
        return self.name.split("__", 1)[1] if "__" in self.name else self.name


@dataclass(frozen=True)
class ScorePeriod:
    """Rows entering the score: ``start < t <= end`` minus the first ``burnin`` rows."""

    burnin: int = 0
    start: str | float | None = None
    end: str | float | None = None

    def mask(self, data: DataSet) -> np.ndarray:
        if self.start is None and self.end is None:
            m = np.ones(data.n, dtype=bool)
        else:
            m = in_range(self.start, self.end, data.t)
        m[: self.burnin] = False
        return m


def parse_kseq(spec) -> list[int]:
    """Accept ``"1:24"``, ``"3,18"``, ``"c(3,18)"``, an int or a list of ints."""
    if isinstance(spec, bool):
        raise ConfigError(f"invalid kseq {spec!r}")
    if isinstance(spec, int):
        ks = [spec]
    elif isinstance(spec, (list, tuple)):
        ks = []
        for part in spec:
            ks += parse_kseq(part)
    elif isinstance(spec, str):
        s = spec.strip()
        m = re.fullmatch(r"c\((.*)\)", s)
        if m:
            s = m.group(1)
        ks = []
        for part in filter(None, (p.strip() for p in s.split(","))):
            r = re.fullmatch(r"(\d+)\s*:\s*(\d+)", part)
            if r:
                a, b = int(r.group(1)), int(r.group(2))
                if b < a:
                    raise ConfigError(f"invalid kseq range {part!r}")
                ks += list(range(a, b + 1))
            elif re.fullmatch(r"\d+", part):
                ks.append(int(part))
            else:
                raise ConfigError(f"invalid kseq element {part!r}")
    else:
        raise ConfigError(f"invalid kseq {spec!r}")
    if not ks:
        raise ConfigError("kseq is empty")
    if len(set(ks)) != len(ks):
        raise ConfigError(f"kseq has duplicates: {ks}")
    return sorted(ks)


@dataclass(frozen=True)
class ModelSpec:
    output: str
    inputs: dict[str, str]
    kseq: tuple[int, ...] = (1,)
    regprm: dict[str, float] = field(default_factory=dict)
    bounds: dict[str, ParameterBounds] = field(default_factory=dict)
    prm: dict[str, float] = field(default_factory=dict)
    scoreperiod: ScorePeriod = ScorePeriod()

    def __post_init__(self):
        object.__setattr__(self, "kseq", tuple(parse_kseq(list(self.kseq))))
        for name, src in self.inputs.items():
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.]*", name) or "__" in name:
                raise ConfigError(f"invalid input name {name!r}")
            E.parse_expr(src)
        unknown = set(self.regprm) - REGRESSION_PARAMS
        if unknown:
            raise ConfigError(f"unknown regression parameter(s) {sorted(unknown)}")

    def expr(self, name: str) -> E.Expr:
        return E.parse_expr(self.inputs[name])

    def replace(self, **changes) -> ModelSpec:
        return dataclasses.replace(self, **changes)

    def params(self, overrides: dict | None = None) -> dict[str, float]:
        """Current offline parameter values, optionally overridden."""
        out = dict(self.prm)
        out.update(overrides or {})
        return out

    def active_bounds(self) -> dict[str, ParameterBounds]:
        """Bounds that refer to inputs present in the model (or to the regression)."""
        return {
            name: b
            for name, b in self.bounds.items()
            if (b.input is None and b.param in REGRESSION_PARAMS) or b.input in self.inputs
        }

    def bind(self, params: dict | None = None) -> tuple[dict[str, E.Expr], dict[str, float]]:
        """Expressions and regression parameters with offline values substituted."""
        exprs = {name: self.expr(name) for name in self.inputs}
        regprm = dict(self.regprm)
        for name, value in self.params(params).items():
            b = self.bounds.get(name)
            if b is not None and b.integer:
                value = int(round(value))
            elif isinstance(value, (np.floating, np.integer)):
                value = value.item()
            if "__" not in name:
                if name not in REGRESSION_PARAMS:
                    raise ConfigError(f"unknown regression parameter {name!r}")
                regprm[name] = float(value)
                continue
            inp, param = name.split("__", 1)
            if inp not in exprs and name in self.bounds:
                continue  # declared for an input that selection has removed
            if inp not in exprs:
                raise ConfigError(f"parameter {name!r} refers to unknown input {inp!r}")
            node, count = E.substitute_kwarg(exprs[inp], param, value)
            if count == 0:
                node = _insert_kwarg(node, param, value)
                if node is None:
                    raise ConfigError(
                        f"parameter {name!r}: no function in {self.inputs[inp]!r} accepts {param!r}"
                    )
            exprs[inp] = node
        return exprs, regprm

    def bound_sources(self, params: dict | None = None) -> dict[str, str]:
        exprs, _ = self.bind(params)
        return {name: E.pretty_print(node) for name, node in exprs.items()}

    def with_kseq(self, kseq: Iterable[int]) -> ModelSpec:
        return self.replace(kseq=tuple(parse_kseq(list(kseq))))

    # ------------------------------------------------------------------ config

    def to_config(self) -> dict:
        cfg: dict = {"output": self.output, "inputs": dict(self.inputs), "kseq": list(self.kseq)}
        if self.regprm:
            cfg["regprm"] = {k: float(v) for k, v in self.regprm.items()}
        if self.bounds:
            cfg["prmbounds"] = {
                name: {"min": b.min, "init": b.init, "max": b.max, **({"integer": True} if b.integer else {})}
                for name, b in self.bounds.items()
            }
        if self.prm:
            cfg["prm"] = {
                k: (int(v) if self.bounds.get(k) and self.bounds[k].integer else float(v))
                for k, v in self.prm.items()
            }
        sp = self.scoreperiod
        if sp != ScorePeriod():
            cfg["scoreperiod"] = {k: v for k, v in dataclasses.asdict(sp).items() if v not in (None, 0)}
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> ModelSpec:
        if not isinstance(cfg, dict):
            raise ConfigError("model config must be a mapping")
        unknown = set(cfg) - {"output", "inputs", "kseq", "regprm", "prmbounds", "prm", "scoreperiod"}
        if unknown:
            raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
        if "output" not in cfg or "inputs" not in cfg:
            raise ConfigError("model config needs 'output' and 'inputs'")
        inputs = cfg["inputs"]
        if not isinstance(inputs, dict) or not inputs:
            raise ConfigError("'inputs' must be a non-empty mapping name -> expression")
        bounds = {}
        for name, spec in (cfg.get("prmbounds") or {}).items():
            if isinstance(spec, (list, tuple)):
                if len(spec) not in (3, 4):
                    raise ConfigError(f"bounds for {name!r} need [min, init, max(, integer)]")
                spec = dict(zip(("min", "init", "max", "integer"), spec))
            try:
                bounds[name] = ParameterBounds(
                    name, float(spec["min"]), float(spec["init"]), float(spec["max"]),
                    bool(spec.get("integer", False)),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bounds for {name!r}: {exc}") from None
        sp = cfg.get("scoreperiod") or {}
        try:
            scoreperiod = ScorePeriod(int(sp.get("burnin", 0)), sp.get("start"), sp.get("end"))
        except (AttributeError, TypeError, ValueError) as exc:
            raise ConfigError(f"scoreperiod: {exc}") from None
        return cls(
            output=str(cfg["output"]),
            inputs={str(k): str(v) for k, v in inputs.items()},
            kseq=tuple(parse_kseq(cfg.get("kseq", [1]))),
            regprm={str(k): float(v) for k, v in (cfg.get("regprm") or {}).items()},
            bounds=bounds,
            prm={str(k): v for k, v in (cfg.get("prm") or {}).items()},
            scoreperiod=scoreperiod,
        )


def _insert_kwarg(node: E.Expr, param: str, value) -> E.Expr | None:
    """Add ``param=value`` to the outermost call whose kernel accepts it."""
    if isinstance(node, E.Call):
        func = ALIASES.get(node.func, node.func)
        if param in KERNEL_PARAMS.get(func, ()):
            return E.Call(node.func, node.args, node.kwargs + ((param, E.Num(value)),))
        for i, a in enumerate(node.args):
            new = _insert_kwarg(a, param, value)
            if new is not None:
                args = node.args[:i] + (new,) + node.args[i + 1:]
                return E.Call(node.func, args, node.kwargs)
    if isinstance(node, E.BinOp):
        for side in ("left", "right"):
            new = _insert_kwarg(getattr(node, side), param, value)
            if new is not None:
                return dataclasses.replace(node, **{side: new})
    return None


class _Loader(yaml.SafeLoader):
    """SafeLoader without YAML 1.1 base-60 integers, so ``kseq: 1:24`` stays a string."""


_Loader.yaml_implicit_resolvers = {
    ch: [(tag, rx) for tag, rx in rs if not (tag.endswith((":int", ":float")) and ":[0-5]?[0-9]" in rx.pattern)]
    for ch, rs in yaml.SafeLoader.yaml_implicit_resolvers.items()
}
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:int",
    re.compile(r"^(?:[-+]?0b[0-1_]+|[-+]?0[0-7_]+|[-+]?(?:0|[1-9][0-9_]*)|[-+]?0x[0-9a-fA-F_]+)$"),
    list("-+0123456789"),
)
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^(?:(?=[-+]?\.?[0-9])[-+]?(?:[0-9][0-9_]*)?\.?[0-9_]*(?:[eE][-+]?[0-9]+)?|[-+]?\.(?:inf|Inf|INF)|\.(?:nan|NaN|NAN))$"),
    list("-+0123456789."),
)


def parse_config(text: str) -> ModelSpec:
    try:
        cfg = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return ModelSpec.from_config(cfg)


def load_model(path: str | Path) -> ModelSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = yaml.load(fh, Loader=_Loader)
    except OSError as exc:
        raise ConfigError(f"cannot read model config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return ModelSpec.from_config(cfg)


def dump_model(model: ModelSpec, header: str | None = None) -> str:
    text = yaml.safe_dump(model.to_config(), sort_keys=False, default_flow_style=None)
    if header:
        text = "".join(f"# {line}\n" for line in header.splitlines()) + text
    return text


def save_model(model: ModelSpec, path: str | Path, header: str | None = None) -> None:
    Path(path).write_text(dump_model(model, header), encoding="utf-8")
