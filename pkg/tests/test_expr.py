import pytest
from hypothesis import given
from hypothesis import strategies as st

from onlinefc.errors import ParseError
from onlinefc.expr import BinOp, Call, CVec, Num, Var, parse_expr, pretty_print, substitute_kwarg, walk


def test_call_with_named_argument():
    assert parse_expr("lp(Ta, a1=0.9)") == Call("lp", (Var("Ta"),), (("a1", Num(0.9)),))


def test_division_inside_call():
    node = parse_expr("fs(tday/24, nharmonics=10)")
    assert node == Call("fs", (BinOp("/", Var("tday"), Num(24)),), (("nharmonics", Num(10)),))
    assert isinstance(node.kwarg("nharmonics").value, int)


def test_nested_and_product():
    node = parse_expr("bspline(tday, df=5) %**% I")
    assert node == BinOp("%**%", Call("bspline", (Var("tday"),), (("df", Num(5)),)), Var("I"))
    assert parse_expr("bspline(lp(Ta, a1=0.9), df=5)").args[0].func == "lp"


def test_cvec_and_whitespace():
    assert parse_expr("AR( c( 0 ,1 ) )") == Call("AR", (CVec((0, 1)),))
    assert parse_expr("c(-1, 2.5)") == CVec((-1, 2.5))


def test_precedence():
    # products bind tighter than sums; %**% binds loosest
    assert parse_expr("a + b * 2") == BinOp("+", Var("a"), BinOp("*", Var("b"), Num(2)))
    assert parse_expr("a - b - c") == BinOp("-", BinOp("-", Var("a"), Var("b")), Var("c"))
    node = parse_expr("x * 2 %**% y")
    assert node.op == "%**%" and node.left == BinOp("*", Var("x"), Num(2))


@pytest.mark.parametrize(
    "source, offset",
    [
        ("lp(Ta", 6),
        ("lp(Ta))", 7),
        ("lp(Ta, a1=0.9, a1=0.8)", 16),
        ("Ta $ 2", 4),
        ("", 1),
        ("f(a=1, b)", 8),
        ("(a + b", 7),
    ],
)
def test_parse_errors_report_offset(source, offset):
    with pytest.raises(ParseError) as err:
        parse_expr(source)
    assert err.value.offset == offset
    assert f"at offset {offset}" in str(err.value)


def test_walk_paths_are_stable():
    paths = [p for p, _ in walk(parse_expr("bspline(lp(Ta, a1=0.9), df=5)"))]
    assert paths == ["0", "0.0", "0.0.0", "0.0.1", "0.1"]


def test_substitute_kwarg():
    node, count = substitute_kwarg(parse_expr("bspline(lp(Ta, a1=0.9), df=5)"), "a1", 0.8)
    assert count == 1
    assert pretty_print(node) == "bspline(lp(Ta, a1=0.8), df=5)"


# --- round trip on generated trees

names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,5}", fullmatch=True).filter(lambda s: s != "c")
numbers = st.one_of(
    st.integers(-1000, 1000),
    st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6),
)
leaves = st.one_of(names.map(Var), numbers.map(Num), st.lists(numbers, min_size=1, max_size=3).map(lambda v: CVec(tuple(v))))


def _call(children):
    return st.builds(
        lambda f, args, kw: Call(f, tuple(args), tuple(dict(kw).items())),
        names,
        st.lists(children, max_size=2),
        st.lists(st.tuples(names, children), max_size=2),
    )


trees = st.recursive(
    leaves,
    lambda children: st.one_of(
        _call(children),
        st.builds(BinOp, st.sampled_from(["+", "-", "*", "/", "%**%"]), children, children),
    ),
    max_leaves=12,
)


@given(trees)
def test_parse_of_pretty_print_is_identity(tree):
    assert parse_expr(pretty_print(tree)) == tree
