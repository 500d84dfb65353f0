"""Parser for input transformation expressions such as ``bspline(lp(Ta, a1=0.9), df=5)``.

Grammar (whitespace-insensitive)::

    expr  := arith { "%**%" arith }
    arith := term { ("+" | "-") term }
    term  := unit { ("*" | "/") unit }
    unit  := ["-"] number | cvec | call | ident | "(" expr ")"
    call  := ident "(" [arg { "," arg }] ")"
    arg   := ident "=" expr | expr
    cvec  := "c" "(" number { "," number } ")"

Error offsets are 1-based character positions; end of input is ``len(source) + 1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from .errors import ParseError

Number = Union[int, float]


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Num:
    value: Number


@dataclass(frozen=True)
class CVec:
    values: tuple[Number, ...]


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...] = ()
    kwargs: tuple[tuple[str, "Expr"], ...] = ()

    def kwarg(self, name: str, default=None):
        for k, v in self.kwargs:
            if k == name:
                return v
        return default


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Var, Num, CVec, Call, BinOp]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<mul>%\*\*%)
  | (?P<op>[-+*/(),=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int  # 1-based


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    i = 0
    while i < len(source):
        m = _TOKEN.match(source, i)
        if not m:
            raise ParseError(f"unknown token {source[i]!r}", i + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind if kind != "op" else m.group(), m.group(), i + 1))
        i = m.end()
    toks.append(_Tok("eof", "", len(source) + 1))
    return toks


class _Parser:
    def __init__(self, source: str):
        self.toks = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str | None = None) -> _Tok:
        tok = self.tok
        if kind is not None and tok.kind != kind:
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise ParseError(f"expected {kind!r}, found {found}", tok.pos)
        self.i += 1
        return tok

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "eof":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def expr(self) -> Expr:
        node = self.arith()
        while self.tok.kind == "mul":
            self.take()
            node = BinOp("%**%", node, self.arith())
        return node

    def arith(self) -> Expr:
        node = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.take().kind
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unit()
        while self.tok.kind in ("*", "/"):
            op = self.take().kind
            node = BinOp(op, node, self.unit())
        return node

    def unit(self) -> Expr:
        tok = self.tok
        if tok.kind == "-" and self.toks[self.i + 1].kind == "number":
            self.take()
            return Num(-_number(self.take().text))
        if tok.kind == "number":
            return Num(_number(self.take().text))
        if tok.kind == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if tok.kind == "ident":
            self.take()
            if self.tok.kind != "(":
                return Var(tok.text)
            if tok.text == "c":
                return self.cvec()
            return self.call(tok.text)
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"unexpected {found}", tok.pos)

    def cvec(self) -> CVec:
        self.take("(")
        values = []
        while True:
            neg = False
            if self.tok.kind == "-":
                self.take()
                neg = True
            v = _number(self.take("number").text)
            values.append(-v if neg else v)
            if self.tok.kind == ")":
                self.take()
                return CVec(tuple(values))
            self.take(",")

    def call(self, func: str) -> Call:
        self.take("(")
        args, kwargs, names = [], [], set()
        if self.tok.kind == ")":
            self.take()
            return Call(func)
        while True:
            if self.tok.kind == "ident" and self.toks[self.i + 1].kind == "=":
                name_tok = self.take()
                if name_tok.text in names:
                    raise ParseError(f"duplicate named argument {name_tok.text!r}", name_tok.pos)
                names.add(name_tok.text)
                self.take("=")
                kwargs.append((name_tok.text, self.expr()))
            else:
                if kwargs:
                    raise ParseError("positional argument after named argument", self.tok.pos)
                args.append(self.expr())
            if self.tok.kind == ")":
                self.take()
                return Call(func, tuple(args), tuple(kwargs))
            self.take(",")


def _number(text: str) -> Number:
    if re.fullmatch(r"\d+", text):
        return int(text)
    return float(text)


@lru_cache(maxsize=1024)
def parse_expr(source: str) -> Expr:
    if not source or not source.strip():
        raise ParseError("empty expression", 1)
    return _Parser(source).parse()


def _fmt_number(v: Number) -> str:
    return str(v) if isinstance(v, int) else repr(float(v))


def pretty_print(node: Expr) -> str:
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Num):
        return _fmt_number(node.value)
    if isinstance(node, CVec):
        return "c(" + ", ".join(_fmt_number(v) for v in node.values) + ")"
    if isinstance(node, Call):
        parts = [pretty_print(a) for a in node.args]
        parts += [f"{k}={pretty_print(v)}" for k, v in node.kwargs]
        return f"{node.func}({', '.join(parts)})"
    if isinstance(node, BinOp):
        def side(child):
            s = pretty_print(child)
            return f"({s})" if isinstance(child, BinOp) else s
        return f"{side(node.left)} {node.op} {side(node.right)}"
    raise TypeError(f"not an expression node: {node!r}")


def walk(node: Expr, path: str = "0"):
    """Yield ``(path, node)`` pairs in pre-order; paths identify call sites stably."""
    yield path, node
    if isinstance(node, Call):
        children = list(node.args) + [v for _, v in node.kwargs]
    elif isinstance(node, BinOp):
        children = [node.left, node.right]
    else:
        children = []
    for i, child in enumerate(children):
        yield from walk(child, f"{path}.{i}")


def substitute_kwarg(node: Expr, name: str, value: Number) -> tuple[Expr, int]:
    """Replace every named argument ``name`` with a literal; returns (tree, count)."""
    if isinstance(node, Call):
        count = 0
        args = []
        for a in node.args:
            a, c = substitute_kwarg(a, name, value)
            args.append(a)
            count += c
        kwargs = []
        for k, v in node.kwargs:
            if k == name:
                kwargs.append((k, Num(value)))
                count += 1
            else:
                v, c = substitute_kwarg(v, name, value)
                kwargs.append((k, v))
                count += c
        return Call(node.func, tuple(args), tuple(kwargs)), count
    if isinstance(node, BinOp):
        left, a = substitute_kwarg(node.left, name, value)
        right, b = substitute_kwarg(node.right, name, value)
        return BinOp(node.op, left, right), a + b
    return node, 0
