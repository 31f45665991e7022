"""Closed-form metric components: parsing, symbolic differentiation, evaluation.

Expressions are over the chart variables ``x1, x2, x3`` with the functions
``sin cos tan exp log sqrt``, the constants ``pi`` and ``e``, the binary
operators ``+ - * / ^`` (``**`` is accepted for ``^``) and unary minus.
Exponents must be constant.

A :class:`DiagonalMetric` bundles three such expressions ``g11, g22, g33``
(with ``g11, g22 > 0 > g33``), their nine first partials and a box domain.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence, Union

VARIABLES = ("x1", "x2", "x3")
FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprError(ValueError):
    """Parse-time failure; ``pos`` is the offset into the source text."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at offset {pos}")
        self.pos = pos


class UnknownSymbolError(ExprError):
    pass


class NonConstantExponentError(ExprError):
    pass


class EvalError(ValueError):
    def __init__(self, message: str, node: "Node"):
        super().__init__(f"{message} (expression node at offset {node.pos})")
        self.node = node
        self.pos = node.pos


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float
    text: str | None = field(default=None, compare=False)
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a function name
    arg: "Node"
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"
    pos: int = field(default=-1, compare=False)


Node = Union[Const, Var, Unary, Binary]
ExprAst = Node


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None:
            bad = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ExprError(f"unexpected character {src[bad]!r}", bad)
        kind = m.lastgroup
        text = m.group(kind)
        tokens.append((kind, "^" if text == "**" else text, m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


def _has_var(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Unary):
        return _has_var(node.arg)
    if isinstance(node, Binary):
        return _has_var(node.left) or _has_var(node.right)
    return False


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, value, pos = self.take()
        if value != text or kind == "end":
            found = "end of input" if kind == "end" else repr(value)
            raise ExprError(f"expected {text!r}, found {found}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ExprError(f"unexpected {value!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Binary(op, node, self.term(), pos)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Binary(op, node, self.unary(), pos)
        return node

    def unary(self) -> Node:
        kind, value, pos = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return Unary("neg", self.unary(), pos)
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        kind, value, pos = self.peek()
        if kind == "op" and value == "^":
            self.take()
            exp_pos = self.peek()[2]
            exponent = self.unary()
            if _has_var(exponent):
                raise NonConstantExponentError("exponent must be constant", exp_pos)
            return Binary("^", base, exponent, pos)
        return base

    def primary(self) -> Node:
        kind, value, pos = self.take()
        if kind == "num":
            return Const(float(value), value, pos)
        if kind == "name":
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(value, arg, pos)
            if value in VARIABLES:
                return Var(value, pos)
            if value in CONSTANTS:
                return Const(CONSTANTS[value], value, pos)
            raise UnknownSymbolError(f"unknown symbol {value!r}", pos)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(value)
        raise ExprError(f"unexpected {found}", pos)


def parse_expr(src: str) -> Node:
    return _Parser(src).parse()


# -- printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}
_ATOM = 5


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _prec(node: Node) -> int:
    if isinstance(node, Const):
        return _PREC["neg"] if node.value < 0 else _ATOM
    if isinstance(node, Var):
        return _ATOM
    if isinstance(node, Unary):
        return _PREC["neg"] if node.op == "neg" else _ATOM
    return _PREC[node.op]


def _wrap(node: Node, min_prec: int) -> str:
    s = to_source(node)
    return f"({s})" if _prec(node) < min_prec else s


def to_source(node: Node) -> str:
    """Pretty-print with the minimal parentheses that re-parse to the same tree."""
    if isinstance(node, Const):
        if node.text is not None:
            return node.text
        return _format_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return "-" + _wrap(node.arg, _PREC["neg"])
        return f"{node.op}({to_source(node.arg)})"
    op = node.op
    if op == "^":
        return f"{_wrap(node.left, _ATOM)}^{_wrap(node.right, _PREC['neg'])}"
    p = _PREC[op]
    left = _wrap(node.left, p)
    right = _wrap(node.right, p + 1)
    return f"{left} {op} {right}" if p == 1 else f"{left}{op}{right}"


# -- differentiation ---------------------------------------------------------

ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(node: Node, value: float | None = None) -> bool:
    return isinstance(node, Const) and (value is None or node.value == value)


def _neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def _add(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def _mul(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def _div(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return Binary("/", a, b)


def _pow(a: Node, n: float) -> Node:
    if n == 0.0:
        return ONE
    if n == 1.0:
        return a
    return Binary("^", a, Const(n))


def _const_value(node: Node) -> float:
    return _eval_checked(node, (0.0, 0.0, 0.0))


def diff_expr(e: Node, var: str) -> Node:
    """Symbolic partial derivative of ``e`` with respect to ``var``."""
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Unary):
        u = e.arg
        du = diff_expr(u, var)
        if _is_const(du, 0.0):
            return ZERO
        if e.op == "neg":
            return _neg(du)
        if e.op == "sin":
            return _mul(Unary("cos", u), du)
        if e.op == "cos":
            return _neg(_mul(Unary("sin", u), du))
        if e.op == "tan":
            return _div(du, _pow(Unary("cos", u), 2.0))
        if e.op == "exp":
            return _mul(e, du)
        if e.op == "log":
            return _div(du, u)
        if e.op == "sqrt":
            return _div(du, _mul(Const(2.0), e))
        raise AssertionError(e.op)
    a, b = e.left, e.right
    if e.op == "^":
        n = _const_value(b)
        da = diff_expr(a, var)
        return _mul(_mul(Const(n), _pow(a, n - 1.0)), da)
    da, db = diff_expr(a, var), diff_expr(b, var)
    if e.op == "+":
        return _add(da, db)
    if e.op == "-":
        return _sub(da, db)
    if e.op == "*":
        return _add(_mul(da, b), _mul(a, db))
    if e.op == "/":
        if _is_const(db, 0.0):
            return _div(da, b)
        return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, 2.0))
    raise AssertionError(e.op)


# -- evaluation --------------------------------------------------------------


def _eval_checked(node: Node, p: Sequence[float]) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return float(p[VARIABLES.index(node.name)])
    if isinstance(node, Unary):
        a = _eval_checked(node.arg, p)
        op = node.op
        if op == "neg":
            return -a
        if op == "log" and a <= 0.0:
            raise EvalError(f"log of non-positive value {a!r}", node)
        if op == "sqrt" and a < 0.0:
            raise EvalError(f"sqrt of negative value {a!r}", node)
        try:
            value = getattr(math, op)(a)
        except (OverflowError, ValueError) as exc:
            raise EvalError(f"{op}({a!r}) failed: {exc}", node) from None
    else:
        a = _eval_checked(node.left, p)
        b = _eval_checked(node.right, p)
        op = node.op
        if op == "+":
            value = a + b
        elif op == "-":
            value = a - b
        elif op == "*":
            value = a * b
        elif op == "/":
            if b == 0.0:
                raise EvalError("division by zero", node)
            value = a / b
        else:
            if a == 0.0 and b < 0.0:
                raise EvalError("division by zero (zero to a negative power)", node)
            if a < 0.0 and not float(b).is_integer():
                raise EvalError(f"negative base {a!r} to non-integer power {b!r}", node)
            try:
                value = math.pow(a, b)
            except OverflowError:
                raise EvalError(f"overflow in {a!r}^{b!r}", node) from None
    if not math.isfinite(value):
        raise EvalError(f"non-finite value {value!r}", node)
    return value


def eval_expr(e: Node, p: Sequence[float]) -> float:
    """Evaluate at the chart point ``p = (x1, x2, x3)``; domain violations raise EvalError."""
    return _eval_checked(e, p)


def _codegen(node: Node) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        arg = _codegen(node.arg)
        if node.op == "neg":
            return f"(-{arg})"
        return f"_math.{node.op}({arg})"
    left, right = _codegen(node.left), _codegen(node.right)
    if node.op == "^":
        return f"_math.pow({left}, {right})"
    return f"({left} {node.op} {right})"


def compile_exprs(exprs: Sequence[Node]) -> Callable[[float, float, float], tuple]:
    """Fast evaluator for several expressions at once.

    Returns ``f(x1, x2, x3) -> tuple``.  Failures are re-diagnosed by the
    checked tree walk so the raised EvalError points at the offending node.
    """
    body = ", ".join(_codegen(e) for e in exprs)
    src = f"def _f(x1, x2, x3):\n    return ({body},)\n"
    namespace: dict = {"_math": math}
    exec(compile(src, "<metric-expr>", "exec"), namespace)
    fast = namespace["_f"]

    def evaluate(x1: float, x2: float, x3: float) -> tuple:
        try:
            values = fast(x1, x2, x3)
        except (ArithmeticError, ValueError):
            values = None
        if values is None or not all(math.isfinite(v) for v in values):
            return tuple(_eval_checked(e, (x1, x2, x3)) for e in exprs)
        return values

    return evaluate


# -- metrics -----------------------------------------------------------------


class MetricError(ValueError):
    pass


class SignatureError(MetricError):
    def __init__(self, message: str, point: tuple[float, float, float]):
        super().__init__(f"{message} at {point}")
        self.point = point


Box = tuple[tuple[float, float], tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class DiagonalMetric:
    """``g11 dx1^2 + g22 dx2^2 + g33 dx3^2`` on a coordinate box, x3 timelike.

    ``partials[i][j]`` is the derivative of the i-th diagonal entry with
    respect to ``x_{j+1}``.
    """

    name: str
    g11: Node
    g22: Node
    g33: Node
    partials: tuple[tuple[Node, ...], ...]
    domain: Box
    _fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        exprs = [self.g11, self.g22, self.g33] + [d for row in self.partials for d in row]
        object.__setattr__(self, "_fn", compile_exprs(exprs))

    @property
    def components(self) -> tuple[Node, Node, Node]:
        return (self.g11, self.g22, self.g33)

    def diag(self, p: Sequence[float]) -> tuple[float, float, float]:
        v = self._fn(p[0], p[1], p[2])
        return v[0], v[1], v[2]

    def diag_and_partials(self, p: Sequence[float]):
        """``(g, dg)`` with ``g[i]`` the diagonal entries and ``dg[i][j] = d g_ii / d x_j``."""
        v = self._fn(p[0], p[1], p[2])
        return v[:3], (v[3:6], v[6:9], v[9:12])

    def contains(self, p: Sequence[float], tol: float = 0.0) -> bool:
        return all(lo - tol <= float(x) <= hi + tol for x, (lo, hi) in zip(p, self.domain))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "g11": to_source(self.g11),
            "g22": to_source(self.g22),
            "g33": to_source(self.g33),
            "domain": [list(b) for b in self.domain],
        }


SIGNATURE_GRID = 10


def _grid(domain: Box, n: int):
    axes = [[lo + (hi - lo) * k / (n - 1) for k in range(n)] for lo, hi in domain]
    for a in axes[0]:
        for b in axes[1]:
            for c in axes[2]:
                yield (a, b, c)


def _check_signature(metric: DiagonalMetric, n: int = SIGNATURE_GRID) -> None:
    for p in _grid(metric.domain, n):
        try:
            g11, g22, g33 = metric.diag(p)
            metric.diag_and_partials(p)
        except EvalError as exc:
            raise SignatureError(f"metric {metric.name!r} cannot be evaluated: {exc}", p) from None
        if not (g11 > 0.0 and g22 > 0.0 and g33 < 0.0):
            raise SignatureError(
                f"metric {metric.name!r} has signature ({g11:+.3g}, {g22:+.3g}, {g33:+.3g}), "
                "expected (+, +, -)",
                p,
            )


def _parse_domain(raw) -> Box:
    try:
        box = tuple((float(lo), float(hi)) for lo, hi in raw)
    except (TypeError, ValueError):
        raise MetricError(f"domain must be three [lo, hi] pairs, got {raw!r}") from None
    if len(box) != 3 or not all(math.isfinite(lo) and math.isfinite(hi) and lo < hi for lo, hi in box):
        raise MetricError(f"domain must be three finite [lo, hi] pairs with lo < hi, got {raw!r}")
    return box  # type: ignore[return-value]


def load_metric(config: Mapping) -> DiagonalMetric:
    """Build and certify a metric from its JSON document."""
    missing = [k for k in ("g11", "g22", "g33", "domain") if k not in config]
    if missing:
        raise MetricError(f"metric config is missing {', '.join(missing)}")
    exprs = []
    for key in ("g11", "g22", "g33"):
        try:
            exprs.append(parse_expr(str(config[key])))
        except ExprError as exc:
            raise MetricError(f"{key}: {exc}") from exc
    partials = tuple(tuple(diff_expr(g, v) for v in VARIABLES) for g in exprs)
    metric = DiagonalMetric(
        name=str(config.get("name", "custom")),
        g11=exprs[0],
        g22=exprs[1],
        g33=exprs[2],
        partials=partials,
        domain=_parse_domain(config["domain"]),
    )
    _check_signature(metric)
    return metric


POLE_MARGIN = 0.05
WIDE = (-100.0, 100.0)


def builtin_config(name: str) -> dict:
    if name == "minkowski3":
        return {"name": name, "g11": "1", "g22": "1", "g33": "-1", "domain": [WIDE, WIDE, WIDE]}
    if name == "warped-sin4":
        return {
            "name": name,
            "g11": "1",
            "g22": "1",
            "g33": "-1/sin(x3)^4",
            "domain": [WIDE, WIDE, (0.2, math.pi - 0.2)],
        }
    m = re.fullmatch(r"s2s1:c=(\d+)", name)
    if m and int(m.group(1)) >= 1:
        c = int(m.group(1))
        return {
            "name": name,
            "g11": "1",
            "g22": "sin(x1)^2",
            "g33": f"-1/{c * c}",
            "domain": [(POLE_MARGIN, math.pi - POLE_MARGIN), WIDE, WIDE],
        }
    raise MetricError(f"unknown built-in metric {name!r}; expected minkowski3, s2s1:c=<n> or warped-sin4")


BUILTIN_NAMES = ("minkowski3", "s2s1:c=1", "s2s1:c=2", "s2s1:c=3", "s2s1:c=4", "warped-sin4")


def builtin_metric(name: str) -> DiagonalMetric:
    return load_metric(builtin_config(name))


def metric_from_source(source: str) -> DiagonalMetric:
    """Resolve a built-in name, a path to a metric JSON file, or inline JSON."""
    text = source.strip()
    if text.startswith("{"):
        return load_metric(json.loads(text))
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise MetricError(f"metric file {source!r} not found") from None
        except json.JSONDecodeError as exc:
            raise MetricError(f"metric file {source!r} is not valid JSON: {exc}") from None
        return load_metric(doc)
    return builtin_metric(text)
