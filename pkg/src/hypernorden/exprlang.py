"""A small expression language for chart functions.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = primary { "^" [ "-" ] INTEGER } ;
    primary = NUMBER | VARIABLE | FUNC "(" expr ")" | "(" expr ")" ;
    VARIABLE = "x" INTEGER ;            (* x1 .. xD *)
    FUNC    = "exp" | "log" | "sin" | "cos" | "sinh" | "cosh" | "sqrt" ;

``^`` binds tighter than unary minus, so ``-x1^2`` is ``-(x1^2)``.
Same-precedence operators associate to the left. There is no implicit
multiplication and exponents must be integer literals.
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass
from typing import Sequence, Union

from . import numeric
from .errors import EvaluationDomainError, ExprSyntaxError, UnknownIdentifier


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    index: int  # 1-based

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"

    def __str__(self):
        return f"(-{self.operand})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int

    def __str__(self):
        return f"({self.base}^{self.exponent})"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"

    def __str__(self):
        return f"{self.func}({self.arg})"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)
_VAR = re.compile(r"x([1-9]\d*)")
_BINARY = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.truediv}


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise ExprSyntaxError(f"unexpected character {text[pos]!r}", self._byte(pos))
            if m.lastgroup != "ws":
                self.tokens.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def _byte(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, tok, pos = self.take()
        if tok != text or kind == "end":
            found = "end of input" if kind == "end" else repr(tok)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", self._byte(pos))

    def parse(self) -> Expr:
        e = self.expr()
        kind, tok, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {tok!r}", self._byte(pos))
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        e = self.primary()
        while self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, tok, pos = self.take()
            if kind != "num" or not tok.isdigit():
                raise ExprSyntaxError("exponent must be an integer literal", self._byte(pos))
            e = Pow(e, sign * int(tok))
        return e

    def primary(self) -> Expr:
        kind, tok, pos = self.take()
        if kind == "num":
            value = float(tok)
            if value == float("inf"):
                raise ExprSyntaxError("numeric literal overflows", self._byte(pos))
            return Num(value)
        if kind == "name":
            m = _VAR.fullmatch(tok)
            if m:
                idx = int(m.group(1))
                if idx > self.dim:
                    raise UnknownIdentifier(tok, self._byte(pos))
                return Var(idx)
            if tok in numeric.FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok, arg)
            raise UnknownIdentifier(tok, self._byte(pos))
        if tok == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(tok)
        raise ExprSyntaxError(f"unexpected {found}", self._byte(pos))


def parse(text: str, dim: int) -> Expr:
    """Parse ``text`` into an expression over variables ``x1..x{dim}``."""
    if dim < 1:
        raise ValueError("dim must be positive")
    return _Parser(text, dim).parse()


def to_text(e: Expr) -> str:
    """Fully parenthesized rendering that parses back to the same tree."""
    return str(e)


def evaluate(e: Expr, bindings: Sequence):
    """Evaluate ``e`` with ``bindings[i-1]`` bound to ``xi``.

    The bindings may be floats, ``Dual1`` or ``Dual2`` scalars; derivative
    information then propagates through the result.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.index > len(bindings):
            raise UnknownIdentifier(str(e))
        return bindings[e.index - 1]
    if isinstance(e, Neg):
        return -evaluate(e.operand, bindings)
    try:
        if isinstance(e, BinOp):
            a = evaluate(e.left, bindings)
            b = evaluate(e.right, bindings)
            if e.op == "/" and numeric.value_of(b) == 0.0:
                raise EvaluationDomainError("division by zero")
            out = _BINARY[e.op](a, b)
            if not math.isfinite(numeric.value_of(out)):
                raise EvaluationDomainError("non-finite intermediate value")
            return out
        if isinstance(e, Pow):
            base = evaluate(e.base, bindings)
            if e.exponent < 0 and numeric.value_of(base) == 0.0:
                raise EvaluationDomainError("negative power of zero")
            if isinstance(base, float) or isinstance(base, int):
                return float(base) ** e.exponent
            return base**e.exponent
        if isinstance(e, Call):
            return numeric.FUNCTIONS[e.func](evaluate(e.arg, bindings))
    except EvaluationDomainError as err:
        if err.subexpr is None:
            raise EvaluationDomainError(str(err), subexpr=str(e)) from None
        raise
    except OverflowError:
        raise EvaluationDomainError("overflow", subexpr=str(e)) from None
    raise TypeError(f"not an expression node: {e!r}")


def free_vars(e: Expr) -> frozenset[int]:
    """1-based indices of the variables appearing in ``e``."""
    if isinstance(e, Var):
        return frozenset((e.index,))
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, (Neg,)):
        return free_vars(e.operand)
    if isinstance(e, Pow):
        return free_vars(e.base)
    if isinstance(e, Call):
        return free_vars(e.arg)
    return free_vars(e.left) | free_vars(e.right)


def compile_expr(text: str, dim: int):
    """Parse once and return a closure ``bindings -> scalar``."""
    tree = parse(text, dim)

    def fn(x):
        return evaluate(tree, x)

    fn.expr = tree
    fn.source = text
    return fn
