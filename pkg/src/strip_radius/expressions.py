"""Closed-form coefficient expressions in ``(t, x)``.

Coefficients, potentials and initial data are given as small strings such as
``"1/(1+x^2)"`` or ``"2*sin(x)*exp(-t)"``.  This module parses them into an
immutable syntax tree and evaluates the tree on numpy arrays.

Grammar (highest precedence first)::

    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    power   := atom ('^' INTEGER)*            integer exponents only
    unary   := '-' unary | power
    term    := unary (('*' | '/') unary)*
    expr    := term (('+' | '-') term)*

Names are the declared variables (``x`` and ``t`` by default), the constants
``pi`` and ``i`` (imaginary unit) and the functions ``sin cos exp tanh sqrt``.
Anything else is an error.

Besides plain evaluation, every node can be evaluated as a truncated Taylor
series (a *jet*) in one variable.  That gives exact pointwise derivatives of
coefficient functions without symbolic manipulation; the commutator and the
magnetic Schrödinger assembly rely on it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np

__all__ = [
    "Expr",
    "Num",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "Derivative",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "EvaluationError",
    "FUNCTIONS",
    "parse_expr",
    "to_source",
    "evaluate",
    "evaluate_jet",
    "derivatives",
    "eval_on_grid",
    "free_variables",
    "is_zero",
]

FUNCTIONS = ("sin", "cos", "exp", "tanh", "sqrt")
CONSTANTS = ("pi", "i")


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class EvaluationError(ExprError):
    """Raised for division by zero, square roots of negative reals, etc.

    ``index`` is the flat index of the first offending sample when the
    expression was evaluated on an array, otherwise ``None``.
    """

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"{message} (node {index})"
        super().__init__(message)
        self.index = index


# ---------------------------------------------------------------------------
# Syntax tree
# ---------------------------------------------------------------------------


class Expr:
    """Base class of all syntax-tree nodes (immutable)."""

    def __str__(self) -> str:
        return to_source(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Const(Expr):
    name: str  # "pi" or "i"


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


@dataclass(frozen=True)
class Derivative(Expr):
    """``order``-th derivative of ``operand`` with respect to ``var``.

    Never produced by the parser; built programmatically (for instance the
    divergence of a magnetic potential) and evaluated through jets.
    """

    operand: Expr
    var: str = "x"
    order: int = 1


# ---------------------------------------------------------------------------
# Tokenizer and parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num, name, op, end
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos))
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), _byte_offset(src, pos)))
        pos = m.end()
    tokens.append(_Token("end", "", _byte_offset(src, len(src))))
    return tokens


def _byte_offset(src: str, pos: int) -> int:
    return len(src[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, src: str, variables: tuple[str, ...]):
        self.tokens = _tokenize(src)
        self.pos = 0
        self.variables = variables

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind != "op":
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, message: str):
        tok = self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"{message}, found {found}", tok.offset)

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            self.fail("unexpected token")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        while self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            node = Pow(node, self.integer_exponent())
        return node

    def integer_exponent(self) -> int:
        parens = self.tok.kind == "op" and self.tok.text == "("
        if parens:
            self.advance()
        sign = 1
        if self.tok.kind == "op" and self.tok.text in "+-":
            sign = -1 if self.advance().text == "-" else 1
        tok = self.tok
        if tok.kind != "num" or not tok.text.isdigit():
            self.fail("integer exponent required")
        self.advance()
        if parens:
            self.expect(")")
        return sign * int(tok.text)

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError("numeric literal out of range", tok.offset)
            return Num(value)
        if tok.kind == "name":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text in CONSTANTS:
                return Const(tok.text)
            if tok.text in self.variables:
                return Var(tok.text)
            raise UnknownIdentifierError(tok.text, tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, name or '('")


def parse_expr(src: str, variables: tuple[str, ...] = ("x", "t")) -> Expr:
    """Parse ``src`` into an expression tree.

    ``variables`` lists the free variables the expression may use.  Raises
    :class:`ExprSyntaxError` (with a byte offset) on malformed input and
    :class:`UnknownIdentifierError` for names outside the closed vocabulary.
    """
    if not isinstance(src, str) or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    clash = set(variables) & (set(FUNCTIONS) | set(CONSTANTS))
    if clash:
        raise ValueError(f"reserved names used as variables: {sorted(clash)}")
    return _Parser(src, tuple(variables)).parse()


def to_source(expr: Expr) -> str:
    """Fully parenthesized source text; ``parse_expr`` inverts it exactly."""
    if isinstance(expr, Num):
        return repr(float(expr.value))
    if isinstance(expr, (Const, Var)):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{to_source(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({to_source(expr.left)} {expr.op} {to_source(expr.right)})"
    if isinstance(expr, Pow):
        return f"({to_source(expr.base)}^{expr.exponent})"
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    if isinstance(expr, Derivative):
        raise TypeError("derivative nodes have no source form")
    raise TypeError(f"not an expression node: {expr!r}")


def free_variables(expr: Expr) -> frozenset[str]:
    if isinstance(expr, Var):
        return frozenset([expr.name])
    if isinstance(expr, (Num, Const)):
        return frozenset()
    if isinstance(expr, Neg):
        return free_variables(expr.operand)
    if isinstance(expr, BinOp):
        return free_variables(expr.left) | free_variables(expr.right)
    if isinstance(expr, Pow):
        return free_variables(expr.base)
    if isinstance(expr, Call):
        return free_variables(expr.arg)
    if isinstance(expr, Derivative):
        return free_variables(expr.operand) | {expr.var}
    raise TypeError(f"not an expression node: {expr!r}")


def is_zero(expr: Expr) -> bool:
    """True for the literal zero (possibly negated); no simplification."""
    if isinstance(expr, Num):
        return expr.value == 0.0
    if isinstance(expr, Neg):
        return is_zero(expr.operand)
    return False


# ---------------------------------------------------------------------------
# Jet evaluation
# ---------------------------------------------------------------------------
#
# A jet of order K is an array of shape (K + 1, *sample_shape) holding the
# Taylor coefficients f^(j)(x) / j! for j = 0..K.  Plain evaluation is the
# K = 0 case, so scalar and vectorized evaluation share one code path.


def _first_bad(mask) -> int | None:
    mask = np.asarray(mask)
    if mask.ndim == 0:
        return None
    return int(np.flatnonzero(mask)[0])


def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    K = a.shape[0] - 1
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for j in range(K + 1):
        acc = a[0] * b[j]
        for i in range(1, j + 1):
            acc = acc + a[i] * b[j - i]
        out[j] = acc
    return out


def _div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    b0 = b[0]
    bad = b0 == 0
    if np.any(bad):
        raise EvaluationError("division by zero", _first_bad(bad))
    K = a.shape[0] - 1
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.empty(shape, dtype=np.result_type(a, b, float))
    for j in range(K + 1):
        acc = a[j]
        for i in range(1, j + 1):
            acc = acc - b[i] * out[j - i]
        out[j] = acc / b0
    return out


def _pow(a: np.ndarray, n: int) -> np.ndarray:
    if n < 0:
        return _div(_const_jet(1.0, a), _pow(a, -n))
    result = _const_jet(1.0, a)
    base = a
    while n:
        if n & 1:
            result = _mul(result, base)
        n >>= 1
        if n:
            base = _mul(base, base)
    return result


def _const_jet(value, like: np.ndarray) -> np.ndarray:
    out = np.zeros(like.shape, dtype=np.result_type(like, type(value)))
    out[0] = value
    return out


def _exp(a: np.ndarray) -> np.ndarray:
    K = a.shape[0] - 1
    out = np.empty(a.shape, dtype=np.result_type(a, float))
    out[0] = np.exp(a[0])
    for j in range(1, K + 1):
        acc = a[1] * out[j - 1]
        for i in range(2, j + 1):
            acc = acc + i * a[i] * out[j - i]
        out[j] = acc / j
    return out


def _sincos(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    K = a.shape[0] - 1
    dtype = np.result_type(a, float)
    s = np.empty(a.shape, dtype=dtype)
    c = np.empty(a.shape, dtype=dtype)
    s[0] = np.sin(a[0])
    c[0] = np.cos(a[0])
    for j in range(1, K + 1):
        acc_s = a[1] * c[j - 1]
        acc_c = a[1] * s[j - 1]
        for i in range(2, j + 1):
            acc_s = acc_s + i * a[i] * c[j - i]
            acc_c = acc_c + i * a[i] * s[j - i]
        s[j] = acc_s / j
        c[j] = -acc_c / j
    return s, c


def _tanh(a: np.ndarray) -> np.ndarray:
    # tanh' = (1 - tanh^2) a'
    K = a.shape[0] - 1
    dtype = np.result_type(a, float)
    th = np.empty(a.shape, dtype=dtype)
    w = np.empty(a.shape, dtype=dtype)
    th[0] = np.tanh(a[0])
    w[0] = 1 - th[0] * th[0]
    for j in range(1, K + 1):
        acc = a[1] * w[j - 1]
        for i in range(2, j + 1):
            acc = acc + i * a[i] * w[j - i]
        th[j] = acc / j
        acc = th[0] * th[j]
        for i in range(1, j + 1):
            acc = acc + th[i] * th[j - i]
        w[j] = -acc
    return th


def _sqrt(a: np.ndarray) -> np.ndarray:
    a0 = a[0]
    bad = (np.imag(a0) == 0) & (np.real(a0) < 0)
    if np.any(bad):
        raise EvaluationError("square root of a negative number", _first_bad(bad))
    K = a.shape[0] - 1
    out = np.empty(a.shape, dtype=np.result_type(a, float))
    out[0] = np.sqrt(a0)
    if K and np.any(out[0] == 0):
        raise EvaluationError("square root is not differentiable at 0", _first_bad(out[0] == 0))
    for j in range(1, K + 1):
        acc = a[j]
        for i in range(1, j):
            acc = acc - out[i] * out[j - i]
        out[j] = acc / (2 * out[0])
    return out


def _jet(expr: Expr, env: Mapping, var: str | None, K: int, shape: tuple) -> np.ndarray:
    if isinstance(expr, Num):
        out = np.zeros((K + 1,) + shape)
        out[0] = expr.value
        return out
    if isinstance(expr, Const):
        value = math.pi if expr.name == "pi" else 1j
        out = np.zeros((K + 1,) + shape, dtype=type(value))
        out[0] = value
        return out
    if isinstance(expr, Var):
        if expr.name not in env:
            raise EvaluationError(f"no value bound for variable {expr.name!r}")
        value = np.broadcast_to(np.asarray(env[expr.name]), shape)
        out = np.zeros((K + 1,) + shape, dtype=np.result_type(value, float))
        out[0] = value
        if expr.name == var and K >= 1:
            out[1] = 1.0
        return out
    if isinstance(expr, Neg):
        return -_jet(expr.operand, env, var, K, shape)
    if isinstance(expr, BinOp):
        a = _jet(expr.left, env, var, K, shape)
        b = _jet(expr.right, env, var, K, shape)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return _mul(a, b)
        return _div(a, b)
    if isinstance(expr, Pow):
        return _pow(_jet(expr.base, env, var, K, shape), expr.exponent)
    if isinstance(expr, Call):
        a = _jet(expr.arg, env, var, K, shape)
        if expr.func == "sin":
            return _sincos(a)[0]
        if expr.func == "cos":
            return _sincos(a)[1]
        if expr.func == "exp":
            return _exp(a)
        if expr.func == "tanh":
            return _tanh(a)
        return _sqrt(a)
    if isinstance(expr, Derivative):
        m = expr.order
        if expr.var == var:
            inner = _jet(expr.operand, env, var, K + m, shape)
            out = np.empty((K + 1,) + inner.shape[1:], dtype=inner.dtype)
            for j in range(K + 1):
                # coefficient of d^m f: c_{j+m} (j+m)! / j!
                out[j] = inner[j + m] * (math.factorial(j + m) / math.factorial(j))
            return out
        if K != 0:
            raise NotImplementedError("mixed-variable jets are not supported")
        inner = _jet(expr.operand, env, expr.var, m, shape)
        return inner[m:m + 1] * math.factorial(m)
    raise TypeError(f"not an expression node: {expr!r}")


def _shape_of(env: Mapping) -> tuple:
    shapes = [np.shape(v) for v in env.values()]
    return np.broadcast_shapes(*shapes) if shapes else ()


def evaluate(expr: Expr, **env):
    """Evaluate ``expr`` with variables bound to scalars or arrays.

    Returns a numpy scalar/array (real when no ``i`` is involved).
    """
    shape = _shape_of(env)
    value = _jet(expr, env, None, 0, shape)[0]
    return value[()] if value.ndim == 0 else value


def evaluate_jet(expr: Expr, var: str, order: int, **env) -> np.ndarray:
    """Taylor coefficients ``d^j expr / d var^j / j!`` for ``j = 0..order``."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    return _jet(expr, env, var, order, _shape_of(env))


def derivatives(expr: Expr, var: str, order: int, **env) -> np.ndarray:
    """Pointwise derivatives ``d^j expr / d var^j`` for ``j = 0..order``."""
    jet = evaluate_jet(expr, var, order, **env)
    scale = np.array([math.factorial(j) for j in range(order + 1)], dtype=float)
    return jet * scale.reshape((-1,) + (1,) * (jet.ndim - 1))


def eval_on_grid(expr: Expr, grid, t: float = 0.0) -> np.ndarray:
    """Complex samples of ``expr`` at the nodes of ``grid`` at time ``t``.

    Evaluation errors carry the index of the first offending node.
    """
    values = evaluate(expr, x=grid.x, t=np.float64(t))
    return np.asarray(np.broadcast_to(values, grid.x.shape), dtype=complex).copy()
