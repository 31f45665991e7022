import math
import zlib

import numpy as np
import pytest

from nullcone.metricexpr import (
    BUILTIN_NAMES,
    Binary,
    Const,
    EvalError,
    ExprError,
    MetricError,
    NonConstantExponentError,
    SignatureError,
    UnknownSymbolError,
    Unary,
    Var,
    builtin_metric,
    compile_exprs,
    diff_expr,
    eval_expr,
    load_metric,
    metric_from_source,
    parse_expr,
    to_source,
)

# Written in the printer's canonical spelling, so printing must reproduce them verbatim.
CORPUS = [
    "1",
    "x1",
    "-x1",
    "x1 + x2",
    "x1 - x2 - x3",
    "x1 - (x2 - x3)",
    "x1 + (x2 + x3)",
    "x1*x2*x3",
    "x1*(x2*x3)",
    "x1/x2/x3",
    "x1/(x2/x3)",
    "x1/(x2*x3)",
    "(x1 + x2)*x3",
    "x1 + x2*x3",
    "-x1^2",
    "(-x1)^2",
    "x1^2^3",
    "(x1^2)^3",
    "x1^-2",
    "x1^-0.5",
    "sin(x1)^2",
    "sin(x1^2)",
    "-1/4",
    "-1/sin(x3)^4",
    "sqrt(x1*x1 + x2*x2)",
    "exp(-x1*x1)",
    "log(1 + x2^2)",
    "tan(x3/2)",
    "cos(x1)*cos(x2) - sin(x1)*sin(x2)",
    "1 + x1 + x1^2/2 + x1^3/6",
    "pi*x1",
    "2*pi - x3",
    "x1^e",
    "--x1",
    "-(x1 + x2)",
    "-(x1*x2)",
    "-sin(x1)",
    "x1*-x2",
    "x1 - -x2",
    "x1/-x2",
    "(x1 - x2)/(x1 + x2)",
    "1.5e-3*x2",
    "0.25",
    "exp(sin(cos(x1)))",
    "sqrt(sqrt(x1))",
    "(1 + x1)^2*(1 - x2)^3",
    "x1^2 + x2^2 - x3^2",
    "1/(1 + exp(-x3))",
    "sin(x1)^2*cos(x2)^2 + 1",
    "-(x1^2)^0.5",
]


def test_corpus_size():
    assert len(CORPUS) == 50 and len(set(CORPUS)) == 50


@pytest.mark.parametrize("src", CORPUS)
def test_round_trip(src):
    tree = parse_expr(src)
    assert to_source(tree) == src
    assert parse_expr(to_source(tree)) == tree


@pytest.mark.parametrize("src", CORPUS)
def test_round_trip_ignores_whitespace(src):
    spaced = " ".join(src.replace("(", " ( ").replace(")", " ) ").split())
    assert parse_expr(spaced) == parse_expr(src)


def test_precedence():
    assert parse_expr("-x1^2") == Unary("neg", Binary("^", Var("x1"), Const(2.0)))
    assert parse_expr("x1 + x2*x3") == Binary("+", Var("x1"), Binary("*", Var("x2"), Var("x3")))
    assert parse_expr("x1 - x2 - x3") == Binary("-", Binary("-", Var("x1"), Var("x2")), Var("x3"))
    assert parse_expr("x1**2") == parse_expr("x1^2")


def test_basic_examples():
    assert eval_expr(parse_expr("sin(x1)^2"), (math.pi / 2, 0, 0)) == pytest.approx(1.0, abs=1e-15)
    assert parse_expr("1") == Const(1.0)
    assert eval_expr(parse_expr("sin(x1)^2"), (math.pi / 6, 0, 0)) == pytest.approx(0.25, abs=1e-15)
    assert eval_expr(parse_expr("sqrt(x1)"), (4, 0, 0)) == 2.0


@pytest.mark.parametrize(
    "src, error, pos",
    [
        ("x4 + 1", UnknownSymbolError, 0),
        ("1 + foo", UnknownSymbolError, 4),
        ("x1 + ", ExprError, 5),
        ("(x1", ExprError, 3),
        ("x1 $ 2", ExprError, 3),
        ("sin x1", ExprError, 4),
        ("x1^x2", NonConstantExponentError, 3),
        ("2^(1 + x3)", NonConstantExponentError, 2),
        ("x1 x2", ExprError, 3),
    ],
)
def test_parse_errors_carry_position(src, error, pos):
    with pytest.raises(error) as info:
        parse_expr(src)
    assert info.value.pos == pos


def test_eval_errors_locate_node():
    with pytest.raises(EvalError) as info:
        eval_expr(parse_expr("1/x1"), (0, 0, 0))
    assert info.value.pos == 1
    with pytest.raises(EvalError) as info:
        eval_expr(parse_expr("2 + log(x2)"), (0, -1, 0))
    assert info.value.pos == 4
    with pytest.raises(EvalError):
        eval_expr(parse_expr("sqrt(x1)"), (-1, 0, 0))
    with pytest.raises(EvalError):
        eval_expr(parse_expr("x1^0.5"), (-1, 0, 0))
    with pytest.raises(EvalError):
        eval_expr(parse_expr("x1^-1"), (0, 0, 0))


def test_compiled_matches_tree_walk_and_falls_back():
    exprs = [parse_expr(s) for s in CORPUS]
    fn = compile_exprs(exprs)
    p = (0.7, 0.3, 1.1)
    assert fn(*p) == pytest.approx([eval_expr(e, p) for e in exprs], rel=1e-14)
    bad = compile_exprs([parse_expr("1/x1")])
    with pytest.raises(EvalError):
        bad(0.0, 1.0, 1.0)


def test_diff_examples():
    d = diff_expr(parse_expr("sin(x1)^2"), "x1")
    # oracle: central difference of sin^2 at 0.3, compared with sin(0.6)
    h = 1e-6
    fd = (math.sin(0.3 + h) ** 2 - math.sin(0.3 - h) ** 2) / (2 * h)
    assert eval_expr(d, (0.3, 0, 0)) == pytest.approx(fd, abs=1e-8)
    assert eval_expr(d, (0.3, 0, 0)) == pytest.approx(0.5646424733950354, abs=1e-14)
    assert diff_expr(parse_expr("x1"), "x2") == Const(0.0)
    assert to_source(diff_expr(parse_expr("x1*x2"), "x1")) == "x2"


def _finite_difference(e, p, j, h=1e-6):
    hi, lo = list(p), list(p)
    hi[j] += h
    lo[j] -= h
    return (eval_expr(e, hi) - eval_expr(e, lo)) / (2 * h)


SMOOTH = [s for s in CORPUS if "log" not in s and "sqrt" not in s and "^-" not in s and "^0.5" not in s]


@pytest.mark.parametrize("src", SMOOTH)
def test_diff_matches_finite_difference(src):
    e = parse_expr(src)
    rng = np.random.default_rng(zlib.crc32(src.encode()))
    for _ in range(20):
        p = rng.uniform(0.3, 1.2, size=3)
        for j, var in enumerate(("x1", "x2", "x3")):
            value = eval_expr(diff_expr(e, var), p)
            fd = _finite_difference(e, p, j)
            assert abs(value - fd) <= 1e-6 * (1 + abs(value))


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtin_partials_match_finite_difference(name):
    m = builtin_metric(name)
    rng = np.random.default_rng(5)
    for _ in range(100):
        p = [rng.uniform(lo, hi) for lo, hi in m.domain]
        for i, g in enumerate(m.components):
            for j, var in enumerate(("x1", "x2", "x3")):
                value = eval_expr(m.partials[i][j], p)
                fd = _finite_difference(g, p, j)
                assert abs(value - fd) <= 1e-6 * (1 + abs(value))


def test_load_minkowski():
    m = load_metric({"g11": "1", "g22": "1", "g33": "-1", "domain": [[-1, 1]] * 3})
    assert all(d == Const(0.0) for row in m.partials for d in row)
    assert m.diag((0.3, 0.2, 0.1)) == (1.0, 1.0, -1.0)


def test_load_s2s1():
    m = load_metric(
        {"name": "s2s1", "g11": "1", "g22": "sin(x1)^2", "g33": "-1/4",
         "domain": [[0.05, math.pi - 0.05], [-3, 3], [-3, 3]]}
    )
    g, dg = m.diag_and_partials((0.4, 0.0, 0.0))
    assert g == pytest.approx((1.0, math.sin(0.4) ** 2, -0.25))
    assert dg[1][0] == pytest.approx(math.sin(0.8))


def test_signature_violation_reports_point():
    with pytest.raises(SignatureError) as info:
        load_metric({"g11": "-1", "g22": "1", "g33": "-1", "domain": [[0, 1]] * 3})
    assert len(info.value.point) == 3
    # sin(x1)^2 vanishes at the pole, so a domain reaching it is rejected
    with pytest.raises(SignatureError) as info:
        load_metric({"g11": "1", "g22": "sin(x1)^2", "g33": "-1", "domain": [[0, 1], [0, 1], [0, 1]]})
    assert info.value.point[0] == 0.0


def test_metric_config_errors():
    with pytest.raises(MetricError):
        load_metric({"g11": "1", "g22": "1"})
    with pytest.raises(MetricError):
        load_metric({"g11": "1", "g22": "1", "g33": "-1", "domain": [[1, 0]] * 3})
    with pytest.raises(MetricError):
        load_metric({"g11": "x4", "g22": "1", "g33": "-1", "domain": [[0, 1]] * 3})
    with pytest.raises(MetricError):
        builtin_metric("s2s1:c=0")


def test_metric_sources(tmp_path):
    path = tmp_path / "m.json"
    path.write_text('{"g11": "1", "g22": "1", "g33": "-2", "domain": [[0,1],[0,1],[0,1]]}')
    assert metric_from_source(str(path)).diag((0, 0, 0))[2] == -2.0
    assert metric_from_source("s2s1:c=3").diag((1.0, 0, 0))[2] == pytest.approx(-1 / 9)
    with pytest.raises(MetricError):
        metric_from_source(str(tmp_path / "missing.json"))
