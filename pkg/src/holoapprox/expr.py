"""
Scalar expression language used to write down the input section.

Grammar (whitespace is insignificant)::

    expr    := sum
    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names are the variables ``x1..xm``, ``y``, ``z1..zk`` and the constant ``pi``;
the callable names are ``sin``, ``cos``, ``exp``, ``sqrt`` and ``abs``.
Evaluation is generic over floats, numpy arrays and dual numbers.
"""

import re
from dataclasses import dataclass

import numpy as np

from . import numcore
from .numcore import Dual, base_value

__all__ = [
    "Binary",
    "Call",
    "Const",
    "EvalDomainError",
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "Neg",
    "Num",
    "UnboundVariableError",
    "UnknownIdentifierError",
    "Var",
    "eval_dual",
    "evaluate",
    "free_variables",
    "parse",
    "pretty",
]

FUNCTIONS = {
    "sin": numcore.sin,
    "cos": numcore.cos,
    "exp": numcore.exp,
    "sqrt": numcore.sqrt,
    "abs": numcore.fabs,
}
CONSTANTS = {"pi": np.pi}
_DEFAULT_VAR = re.compile(r"^(x[1-9][0-9]*|y|z[1-9][0-9]*)$")


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message, line, column, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(expected))
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at line {line}, column {column}{exp}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class UnboundVariableError(ExprError):
    pass


class EvalDomainError(ExprError):
    pass


class Expr:
    """Base class of AST nodes."""

    def __str__(self):
        return pretty(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


# ---------------------------------------------------------------------------
# lexing / parsing

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src):
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind == "ws":
            nl = text.count("\n")
            if nl:
                line += nl
                line_start = pos + text.rindex("\n") + 1
        else:
            toks.append(_Tok(kind, text, line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


_ATOM_START = {"NUMBER", "NAME", "(", "-"}


class _Parser:
    def __init__(self, src, variables):
        self.toks = _tokenize(src)
        self.i = 0
        self.variables = variables

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, message, expected):
        t = self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"{message}: unexpected {what}", t.line, t.col, expected)

    def expect(self, text):
        if self.tok.text != text or self.tok.kind != "op":
            self.error("syntax error", {text})
        self.i += 1

    def parse(self):
        e = self.sum()
        if self.tok.kind != "end":
            self.error("syntax error", {"+", "-", "*", "/", "^", "end of input"})
        return e

    def sum(self):
        left = self.product()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.product())
        return left

    def product(self):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.unary())
        return left

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(float(t.text))
        if t.kind == "name":
            self.i += 1
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.sum()
                self.expect(")")
                return Call(t.text, arg)
            if t.text in CONSTANTS:
                return Const(t.text)
            if self._declared(t.text):
                return Var(t.text)
            raise UnknownIdentifierError(f"unknown identifier {t.text!r}", t.line, t.col)
        if t.kind == "op" and t.text == "(":
            self.i += 1
            e = self.sum()
            self.expect(")")
            return e
        self.error("syntax error", _ATOM_START)

    def _declared(self, name):
        if self.variables is None:
            return bool(_DEFAULT_VAR.match(name))
        return name in self.variables


def parse(src, variables=None):
    """
    Parse ``src`` into an AST.

    ``variables`` restricts the allowed variable names; by default any of
    ``x<i>``, ``y``, ``z<i>`` is accepted.
    """
    return _Parser(src, None if variables is None else set(variables)).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def pretty(e):
    """Fully parenthesized text form; ``parse(pretty(e)) == e``."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{pretty(e.arg)})"
    if isinstance(e, Binary):
        return f"({pretty(e.left)} {e.op} {pretty(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({pretty(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def free_variables(e):
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, (Num, Const)):
        return set()
    if isinstance(e, (Neg, Call)):
        return free_variables(e.arg)
    return free_variables(e.left) | free_variables(e.right)


# ---------------------------------------------------------------------------
# evaluation


def _is_zero(v):
    return np.any(np.asarray(base_value(v)) == 0.0)


def evaluate(e, point):
    """Evaluate ``e`` with variables bound by the mapping ``point``."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        try:
            return point[e.name]
        except KeyError:
            raise UnboundVariableError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Neg):
        return -evaluate(e.arg, point)
    if isinstance(e, Call):
        arg = evaluate(e.arg, point)
        if e.func == "sqrt":
            b = np.asarray(base_value(arg))
            if np.any(b < 0) or (isinstance(arg, Dual) and np.any(b == 0)):
                raise EvalDomainError(f"sqrt of a negative (or non-differentiable) value in {pretty(e)}")
        return FUNCTIONS[e.func](arg)
    a = evaluate(e.left, point)
    b = evaluate(e.right, point)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if _is_zero(b):
            raise EvalDomainError(f"division by zero in {pretty(e)}")
        return a / b
    if isinstance(e.right, Num) and float(e.right.value).is_integer() and e.right.value >= 0:
        return a ** int(e.right.value)
    if isinstance(a, Dual) or isinstance(b, Dual):
        if np.any(np.asarray(base_value(a)) <= 0):
            raise EvalDomainError(f"non-integer power of a non-positive base in {pretty(e)}")
        return numcore.exp(b * numcore.log(a))
    return np.power(a, b)


def eval_dual(e, point, active):
    """
    Evaluate ``e`` as a dual number whose partials follow the order of
    ``active`` (names of the differentiated variables).
    """
    active = list(active)
    xs = numcore.seed([point[name] for name in active])
    bound = dict(point)
    bound.update(zip(active, xs))
    out = evaluate(e, bound)
    if not isinstance(out, Dual) or out.tag != xs[0].tag:
        out = Dual(out, [0.0] * len(active), xs[0].tag if xs else 0)
    return out
