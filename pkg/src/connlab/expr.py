"""Scalar expressions in chart coordinates x1..xn.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = atom [ "^" exponent ] ;
    exponent= [ "-" | "+" ] INTEGER | "(" [ "-" | "+" ] INTEGER ")" ;
    atom    = NUMBER | VARIABLE | FUNC "(" expr ")" | "(" expr ")" ;
    VARIABLE= "x" INTEGER ;            (* 1-based, at most dim *)
    FUNC    = "sin" | "cos" | "exp" | "log" | "sqrt" | "tanh" ;

Exponents must be integer literals, so ``-x1^2`` is ``-(x1^2)`` and
``x1^0.5`` is rejected.  Variable indices in the Python API are 0-based
(``x1`` is axis 0).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")


class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class ExprDomainError(ExprError, ArithmeticError):
    """Evaluation left the domain of a function (log, sqrt, division)."""


# ---------------------------------------------------------------------------
# AST nodes


class Node:
    __slots__ = ()
    precedence = 100

    def is_const(self, value: float | None = None) -> bool:
        return False


@dataclass(frozen=True, eq=True)
class Const(Node):
    value: float
    precedence = 100

    def is_const(self, value=None):
        return value is None or self.value == value


@dataclass(frozen=True)
class Var(Node):
    index: int
    precedence = 100


@dataclass(frozen=True)
class Neg(Node):
    arg: Node
    precedence = 3


@dataclass(frozen=True)
class Add(Node):
    left: Node
    right: Node
    precedence = 1


@dataclass(frozen=True)
class Sub(Node):
    left: Node
    right: Node
    precedence = 1


@dataclass(frozen=True)
class Mul(Node):
    left: Node
    right: Node
    precedence = 2


@dataclass(frozen=True)
class Div(Node):
    left: Node
    right: Node
    precedence = 2


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int
    precedence = 4


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node
    precedence = 100


ZERO = Const(0.0)
ONE = Const(1.0)


# Smart constructors fold constants and drop additive/multiplicative
# identities; they never reorder operands.

def _const(value: float) -> Node:
    if not math.isfinite(value):
        raise ExprDomainError(f"constant folding produced {value}")
    return Const(float(value))


def add(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value + b.value)
    if a.is_const(0.0):
        return b
    if b.is_const(0.0):
        return a
    if isinstance(b, Neg):
        return Sub(a, b.arg)
    return Add(a, b)


def sub(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value - b.value)
    if b.is_const(0.0):
        return a
    if a.is_const(0.0):
        return neg(b)
    if isinstance(b, Neg):
        return Add(a, b.arg)
    return Sub(a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return _const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value * b.value)
    if a.is_const(0.0) or b.is_const(0.0):
        return ZERO
    if a.is_const(1.0):
        return b
    if b.is_const(1.0):
        return a
    if a.is_const(-1.0):
        return neg(b)
    if b.is_const(-1.0):
        return neg(a)
    return Mul(a, b)


def div(a: Node, b: Node) -> Node:
    if isinstance(b, Const) and b.value == 0.0:
        raise ExprDomainError("division by constant zero")
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value / b.value)
    if a.is_const(0.0):
        return ZERO
    if b.is_const(1.0):
        return a
    return Div(a, b)


def power(base: Node, exponent: int) -> Node:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0.0 and exponent < 0:
            raise ExprDomainError("zero to a negative power")
        return _const(base.value ** exponent)
    return Pow(base, exponent)


def call(func: str, arg: Node) -> Node:
    return Call(func, arg)


# ---------------------------------------------------------------------------
# Differentiation


def _diff(node: Node, i: int) -> Node:
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.index == i else ZERO
    if isinstance(node, Neg):
        return neg(_diff(node.arg, i))
    if isinstance(node, Add):
        return add(_diff(node.left, i), _diff(node.right, i))
    if isinstance(node, Sub):
        return sub(_diff(node.left, i), _diff(node.right, i))
    if isinstance(node, Mul):
        return add(mul(_diff(node.left, i), node.right),
                   mul(node.left, _diff(node.right, i)))
    if isinstance(node, Div):
        du, dv = _diff(node.left, i), _diff(node.right, i)
        if dv.is_const(0.0):
            return div(du, node.right)
        return div(sub(mul(du, node.right), mul(node.left, dv)),
                   power(node.right, 2))
    if isinstance(node, Pow):
        db = _diff(node.base, i)
        if db.is_const(0.0):
            return ZERO
        k = node.exponent
        return mul(mul(Const(float(k)), power(node.base, k - 1)), db)
    if isinstance(node, Call):
        du = _diff(node.arg, i)
        if du.is_const(0.0):
            return ZERO
        u = node.arg
        if node.func == "sin":
            outer = Call("cos", u)
        elif node.func == "cos":
            outer = neg(Call("sin", u))
        elif node.func == "exp":
            outer = node
        elif node.func == "log":
            return div(du, u)
        elif node.func == "sqrt":
            return div(du, mul(Const(2.0), node))
        elif node.func == "tanh":
            outer = sub(ONE, power(node, 2))
        else:  # pragma: no cover - parser rejects unknown functions
            raise ExprError(f"unknown function {node.func}")
        return mul(outer, du)
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Printing and compilation


def _fmt_const(value: float) -> str:
    text = repr(float(value))
    return f"({text})" if value < 0 else text


def to_text(node: Node, var=lambda i: f"x{i + 1}", pow_op="^",
            fname=lambda f: f) -> str:
    def wrap(child: Node, min_prec: int) -> str:
        s = to_text(child, var, pow_op, fname)
        return f"({s})" if child.precedence < min_prec else s

    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return var(node.index)
    if isinstance(node, Neg):
        return "-" + wrap(node.arg, 4)
    if isinstance(node, Add):
        return f"{wrap(node.left, 1)} + {wrap(node.right, 2)}"
    if isinstance(node, Sub):
        return f"{wrap(node.left, 1)} - {wrap(node.right, 2)}"
    if isinstance(node, Mul):
        return f"{wrap(node.left, 2)}*{wrap(node.right, 3)}"
    if isinstance(node, Div):
        return f"{wrap(node.left, 2)}/{wrap(node.right, 3)}"
    if isinstance(node, Pow):
        k = node.exponent
        exp_text = str(k) if k >= 0 else f"({k})"
        return f"{wrap(node.base, 5)}{pow_op}{exp_text}"
    if isinstance(node, Call):
        return f"{fname(node.func)}({to_text(node.arg, var, pow_op, fname)})"
    raise TypeError(f"not an expression node: {node!r}")


_MATH_ENV = {f"_{name}": getattr(math, name) for name in FUNCTIONS}


def compile_nodes(nodes: Sequence[Node], dim: int) -> Callable[[Sequence[float]], tuple]:
    """Compile expression trees into one function returning a tuple of floats.

    The function takes a sequence of ``dim`` Python floats.
    """
    names = [f"_x{i}" for i in range(dim)]
    body = ", ".join(to_text(n, var=lambda i: names[i], pow_op="**",
                             fname=lambda f: f"_{f}")
                     for n in nodes)
    unpack = f"    {', '.join(names)}, = _x\n" if dim else ""
    src = f"def _f(_x):\n{unpack}    return ({body},)\n"
    env = dict(_MATH_ENV)
    exec(compile(src, "<connlab-expr>", "exec"), env)
    return env["_f"]


def evaluate_compiled(fn, x: Sequence[float]) -> tuple:
    try:
        values = fn(x)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ExprDomainError(f"domain error at {list(x)}: {exc}") from None
    for v in values:
        if not math.isfinite(v):
            raise ExprDomainError(f"non-finite value at {list(x)}")
    return values


def as_floats(x) -> list[float]:
    if isinstance(x, np.ndarray):
        return x.tolist()
    return [float(v) for v in x]


# ---------------------------------------------------------------------------
# Public expression type


@dataclass(frozen=True)
class ScalarExpr:
    """Immutable scalar expression over ``dim`` chart coordinates."""

    node: Node
    dim: int
    _fn: Callable = field(default=None, init=False, repr=False, compare=False)

    def _compiled(self):
        fn = self._fn
        if fn is None:
            fn = compile_nodes([self.node], self.dim)
            object.__setattr__(self, "_fn", fn)
        return fn

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def __str__(self) -> str:
        return to_text(self.node)

    def diff(self, i: int) -> "ScalarExpr":
        return differentiate(self, i)

    def embed(self, dim: int) -> "ScalarExpr":
        """Same expression viewed as a function of ``dim >= self.dim`` variables."""
        if dim < self.dim:
            raise ValueError("cannot embed into a smaller dimension")
        return ScalarExpr(self.node, dim)

    def is_zero(self) -> bool:
        return self.node.is_const(0.0)

    # arithmetic
    def _lift(self, other) -> Node:
        if isinstance(other, ScalarExpr):
            if other.dim != self.dim:
                raise ValueError(f"dimension mismatch {self.dim} vs {other.dim}")
            return other.node
        if isinstance(other, (int, float, np.floating, np.integer)):
            return _const(float(other))
        return NotImplemented

    def _wrap(self, node: Node) -> "ScalarExpr":
        return ScalarExpr(node, self.dim)

    def __add__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else self._wrap(add(self.node, o))

    def __radd__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else self._wrap(add(o, self.node))

    def __sub__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else self._wrap(sub(self.node, o))

    def __rsub__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else self._wrap(sub(o, self.node))

    def __mul__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else self._wrap(mul(self.node, o))

    def __rmul__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else self._wrap(mul(o, self.node))

    def __truediv__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else self._wrap(div(self.node, o))

    def __rtruediv__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else self._wrap(div(o, self.node))

    def __neg__(self):
        return self._wrap(neg(self.node))

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise ExprError("only integer powers are supported")
        return self._wrap(power(self.node, k))


def constant(value: float, dim: int) -> ScalarExpr:
    return ScalarExpr(_const(float(value)), dim)


def variable(index: int, dim: int) -> ScalarExpr:
    if not 0 <= index < dim:
        raise ExprError(f"variable index {index + 1} exceeds dimension {dim}")
    return ScalarExpr(Var(index), dim)


def evaluate(e: ScalarExpr, x) -> float:
    xs = as_floats(x)
    if len(xs) != e.dim:
        raise ValueError(f"expected a point of length {e.dim}, got {len(xs)}")
    return evaluate_compiled(e._compiled(), xs)[0]


def differentiate(e: ScalarExpr, i: int) -> ScalarExpr:
    """Partial derivative with respect to axis ``i`` (0-based; x1 is 0)."""
    if not 0 <= i < e.dim:
        raise ExprError(f"axis {i} out of range for dimension {e.dim}")
    return ScalarExpr(_diff(e.node, i), e.dim)


def to_string(e: ScalarExpr) -> str:
    return to_text(e.node)


# ---------------------------------------------------------------------------
# Parser

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(source: str) -> list[_Tok]:
    raw = source.encode("utf-8")
    toks: list[_Tok] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            offset = len(source[:pos].encode("utf-8"))
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", offset)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), len(source[:pos].encode("utf-8"))))
        pos = m.end()
    toks.append(_Tok("end", "", len(raw)))
    return toks


class _Parser:
    def __init__(self, source: str, dim: int):
        self.toks = _tokenize(source)
        self.pos = 0
        self.dim = dim

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def take(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> None:
        if self.tok.text != text or self.tok.kind == "end":
            raise ExprSyntaxError(f"expected {text!r}", self.tok.offset)
        self.take()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected token {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.take().text
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            arg = self.unary()
            return Neg(arg) if op == "-" else arg
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        paren = self.tok.text == "(" and self.tok.kind == "op"
        if paren:
            self.take()
        sign = 1
        if self.tok.kind == "op" and self.tok.text in "+-":
            sign = -1 if self.take().text == "-" else 1
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", t.offset)
        self.take()
        if paren:
            self.expect(")")
        return sign * int(t.text)

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.take()
            return Const(float(t.text))
        if t.kind == "name":
            self.take()
            m = re.fullmatch(r"x([1-9]\d*)", t.text)
            if m:
                idx = int(m.group(1))
                if idx > self.dim:
                    raise ExprError(
                        f"variable index {idx} exceeds dimension {self.dim} "
                        f"(byte offset {t.offset})")
                return Var(idx - 1)
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            raise ExprError(f"unknown identifier {t.text!r} at byte offset {t.offset}")
        if t.kind == "op" and t.text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"unexpected {what}", t.offset)


def parse(source: str, dim: int) -> ScalarExpr:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if isinstance(source, (int, float)):
        return constant(source, dim)
    return ScalarExpr(_Parser(source, dim).parse(), dim)


def compile_many(exprs: Sequence[ScalarExpr], dim: int) -> Callable:
    """Compile several expressions into one callable returning a tuple."""
    for e in exprs:
        if e.dim != dim:
            raise ValueError(f"dimension mismatch {e.dim} vs {dim}")
    fn = compile_nodes([e.node for e in exprs], dim)

    def run(x):
        return evaluate_compiled(fn, x)

    return run
