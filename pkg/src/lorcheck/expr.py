"""Closed-form scalar expressions in the chart coordinates.

Grammar (``^`` binds tightest and is right-associative, unary minus binds
looser than ``^`` so ``-x1^2 == -(x1^2)``)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := atom ('^' factor)?
    atom    := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'

Identifiers are ``t`` and ``x1`` ... ``xn``. Trees evaluate on floats or on
:class:`~lorcheck.jet.Jet2` inputs, the latter giving exact first and second
derivatives of the closed form.
"""

from __future__ import annotations

import math
import re

import numpy as np

from . import jet as _jet
from .jet import Jet2


class ParseError(ValueError):
    """Syntax error at a byte offset of the source string."""

    def __init__(self, message, offset, src=""):
        self.offset = offset
        self.src = src
        super().__init__(f"{message} (at offset {offset})")


class UnknownIdentifierError(ParseError):
    pass


class EvaluationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# tree


class Node:
    __slots__ = ()

    def __add__(self, other):
        return add(self, as_node(other))

    def __radd__(self, other):
        return add(as_node(other), self)

    def __sub__(self, other):
        return sub(self, as_node(other))

    def __rsub__(self, other):
        return sub(as_node(other), self)

    def __mul__(self, other):
        return mul(self, as_node(other))

    def __rmul__(self, other):
        return mul(as_node(other), self)

    def __truediv__(self, other):
        return div(self, as_node(other))

    def __neg__(self):
        return neg(self)

    def __pow__(self, other):
        return power(self, as_node(other))

    def __str__(self):
        return to_string(self)


class Const(Node):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)

    def __repr__(self):
        return f"Const({self.value!r})"


class Var(Node):
    __slots__ = ("index", "name")

    def __init__(self, index, name):
        self.index = index
        self.name = name

    def __repr__(self):
        return f"Var({self.name})"


class Neg(Node):
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg


class BinOp(Node):
    __slots__ = ("op", "left", "right")

    def __init__(self, op, left, right):
        self.op = op
        self.left = left
        self.right = right


class Call(Node):
    __slots__ = ("name", "arg")

    def __init__(self, name, arg):
        self.name = name
        self.arg = arg


def as_node(x):
    return x if isinstance(x, Node) else Const(x)


def is_const(node, value=None):
    return isinstance(node, Const) and (value is None or node.value == value)


# Builders with trivial constant folding (no algebraic simplification).


def add(a, b):
    if is_const(a) and is_const(b):
        return Const(a.value + b.value)
    if is_const(a, 0.0):
        return b
    if is_const(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a, b):
    if is_const(a) and is_const(b):
        return Const(a.value - b.value)
    if is_const(b, 0.0):
        return a
    if is_const(a, 0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a, b):
    if is_const(a) and is_const(b):
        return Const(a.value * b.value)
    if is_const(a, 0.0) or is_const(b, 0.0):
        return Const(0.0)
    if is_const(a, 1.0):
        return b
    if is_const(b, 1.0):
        return a
    return BinOp("*", a, b)


def div(a, b):
    if is_const(a) and is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    if is_const(b, 1.0):
        return a
    return BinOp("/", a, b)


def neg(a):
    if is_const(a):
        return Const(-a.value)
    return Neg(a)


def power(a, b):
    if is_const(a) and is_const(b):
        try:
            return Const(_float_pow(a.value, b.value))
        except (EvaluationError, OverflowError, ZeroDivisionError):
            pass
    return BinOp("^", a, b)


def call(name, arg):
    if name not in _jet.FUNCTIONS:
        raise KeyError(name)
    if is_const(arg):
        try:
            value = _jet.FUNCTIONS[name](arg.value)
            if math.isfinite(value):
                return Const(value)
        except (ValueError, OverflowError):
            pass
    return Call(name, arg)


def _float_pow(a, b):
    if a < 0 and not float(b).is_integer():
        raise EvaluationError("non-integer power of a negative base")
    return a**b


# ---------------------------------------------------------------------------
# evaluation


def evaluate(node, env, cache=None):
    """Evaluate ``node`` with ``env[i]`` bound to variable ``i``.

    ``cache`` memoizes shared subtrees by identity across several calls
    within one evaluation pass (e.g. the components of a conformally scaled
    metric all share the same factor).
    """
    if cache is None:
        cache = {}
    return _eval(node, env, cache)


def _eval(node, env, cache):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return env[node.index]
    key = id(node)
    hit = cache.get(key)
    if hit is not None:
        return hit[1]
    if isinstance(node, Neg):
        out = -_eval(node.arg, env, cache)
    elif isinstance(node, BinOp):
        a = _eval(node.left, env, cache)
        b = _eval(node.right, env, cache)
        op = node.op
        if op == "+":
            out = a + b
        elif op == "-":
            out = a - b
        elif op == "*":
            out = a * b
        elif op == "/":
            out = a / b
        else:
            out = _eval_pow(a, b)
    elif isinstance(node, Call):
        a = _eval(node.arg, env, cache)
        try:
            out = _jet.FUNCTIONS[node.name](a)
        except ValueError as exc:
            raise EvaluationError(f"{node.name}: {exc}") from exc
    else:
        raise TypeError(f"not an expression node: {node!r}")
    # keep node alive so its id cannot be recycled during this pass
    cache[key] = (node, out)
    return out


def _eval_pow(a, b):
    if isinstance(b, Jet2):
        base = a.value if isinstance(a, Jet2) else a
        if np.any(np.asarray(base) <= 0):
            raise EvaluationError("variable exponent requires a positive base")
        return _jet.exp(b * _jet.log(a if isinstance(a, Jet2) else a))
    if isinstance(a, Jet2):
        try:
            return a ** b
        except ValueError as exc:
            raise EvaluationError(str(exc)) from exc
    base = np.asarray(a, dtype=float)
    if np.any(base < 0) and not float(b).is_integer():
        raise EvaluationError("non-integer power of a negative base")
    return base**b if base.ndim else float(base) ** b


def to_string(node):
    """Fully parenthesized source that parses back to an equal tree."""
    if isinstance(node, Const):
        v = node.value
        return repr(v) if v >= 0 else f"(-{repr(-v)})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_string(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_string(node.left)}{node.op}{to_string(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({to_string(node.arg)})"
    raise TypeError(node)


def variable_names(dim_space):
    return ["t"] + [f"x{i}" for i in range(1, dim_space + 1)]


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(src):
    tokens = []
    pos = 0
    n = len(src)
    while pos < n:
        if src[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(src, pos)
        if m is None or m.lastgroup is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos), src)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


def _byte_offset(src, index):
    return len(src[:index].encode("utf-8"))


class _Parser:
    def __init__(self, src, names):
        self.src = src
        self.names = {name: i for i, name in enumerate(names)}
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, tok, expected):
        found = "end of input" if tok[0] == "end" else repr(tok[1])
        raise ParseError(f"expected {expected}, found {found}",
                         _byte_offset(self.src, tok[2]), self.src)

    def expect(self, value):
        tok = self.advance()
        if tok[1] != value or tok[0] != "op":
            self.error(tok, repr(value))

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.error(tok, "operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            rhs = self.term()
            node = add(node, rhs) if op == "+" else sub(node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            rhs = self.factor()
            node = mul(node, rhs) if op == "*" else div(node, rhs)
        return node

    def factor(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.advance()
            return neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.advance()
            return power(base, self.factor())
        return base

    def atom(self):
        tok = self.advance()
        kind, text, _ = tok
        if kind == "num":
            return Const(float(text))
        if kind == "ident":
            if text in _jet.FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return call(text, arg)
            if text in self.names:
                return Var(self.names[text], text)
            raise UnknownIdentifierError(f"unknown identifier {text!r}",
                                         _byte_offset(self.src, tok[2]), self.src)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.error(tok, "number, identifier, function or '('")


def parse_metric_expression(src, dim_space=3, names=None):
    """Parse ``src`` into an evaluable expression tree.

    Raises :class:`ParseError` (with ``offset``) on syntax errors and
    :class:`UnknownIdentifierError` on identifiers outside ``t, x1..xn``.
    """
    if names is None:
        names = variable_names(dim_space)
    if not isinstance(src, str):
        raise ParseError("expression must be a string", 0, str(src))
    return _Parser(src, names).parse()
