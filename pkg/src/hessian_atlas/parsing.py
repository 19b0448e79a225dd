"""Recursive-descent parser for polynomial expressions in x and y.

Accepts integer, rational, and decimal coefficients, the operators
``+ - * / ^`` with standard precedence, parentheses, and implicit
multiplication by adjacency ("3xy^2", "2(x+y)").  Coefficient arithmetic
is exact (fractions) during expansion; the result is converted to floats
once, on construction of the polynomial.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction

from .polynomials import BivariatePolynomial, poly_from_fractions


class ParseError(ValueError):
    """Syntax or semantic error, with a 1-based column position."""

    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.column = column
        self.reason = message


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    column: int


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos + 1)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), m.start() + 1))
        pos = m.end()
    tokens.append(_Token("end", "", len(text) + 1))
    return tokens


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except ValueError:
        return Fraction(Decimal(text))


# A value during parsing is a dict (i, j) -> Fraction.
_Table = dict


def _const(q: Fraction) -> _Table:
    return {(0, 0): q} if q else {}


def _add(a: _Table, b: _Table, sign: int = 1) -> _Table:
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, Fraction(0)) + sign * c
    return {e: c for e, c in out.items() if c}


def _mul(a: _Table, b: _Table) -> _Table:
    out: _Table = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            e = (i1 + i2, j1 + j2)
            out[e] = out.get(e, Fraction(0)) + c1 * c2
    return {e: c for e, c in out.items() if c}


def _as_constant(a: _Table):
    if not a:
        return Fraction(0)
    if set(a) == {(0, 0)}:
        return a[(0, 0)]
    return None


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> _Table:
        value = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected {tok.text!r}", tok.column)
        return value

    def expr(self) -> _Table:
        value = self.term()
        while self.peek().text in ("+", "-"):
            op = self.advance()
            rhs = self.term()
            value = _add(value, rhs, 1 if op.text == "+" else -1)
        return value

    def term(self) -> _Table:
        value = self.unary()
        while True:
            tok = self.peek()
            if tok.text in ("*", "/"):
                op = self.advance()
                rhs = self.unary()
                if op.text == "*":
                    value = _mul(value, rhs)
                else:
                    q = _as_constant(rhs)
                    if q is None:
                        raise ParseError("division by a non-constant", op.column)
                    if q == 0:
                        raise ParseError("division by zero", op.column)
                    value = _mul(value, _const(1 / q))
            elif tok.kind in ("number", "ident") or tok.text == "(":
                value = _mul(value, self.unary())  # implicit multiplication
            else:
                return value

    def unary(self) -> _Table:
        sign = 1
        while self.peek().text in ("+", "-"):
            if self.advance().text == "-":
                sign = -sign
        value = self.power()
        return value if sign == 1 else _mul(value, _const(Fraction(-1)))

    def power(self) -> _Table:
        base = self.atom()
        if self.peek().text == "^":
            caret = self.advance()
            exponent = self.unary()
            q = _as_constant(exponent)
            if q is None or q.denominator != 1 or q < 0:
                raise ParseError("exponent not a nonnegative integer", caret.column)
            n = int(q)
            out = _const(Fraction(1))
            for _ in range(n):
                out = _mul(out, base)
            return out
        return base

    def atom(self) -> _Table:
        tok = self.advance()
        if tok.kind == "number":
            return _const(_fraction(tok.text))
        if tok.kind == "ident":
            if tok.text == "x":
                return {(1, 0): Fraction(1)}
            if tok.text == "y":
                return {(0, 1): Fraction(1)}
            raise ParseError(f"unknown identifier {tok.text!r}", tok.column)
        if tok.text == "(":
            value = self.expr()
            closing = self.advance()
            if closing.text != ")":
                raise ParseError("expected ')'", closing.column)
            return value
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.column)


def parse_polynomial(text: str) -> BivariatePolynomial:
    """Parse an expression in x and y into a canonical coefficient table."""
    return poly_from_fractions(_Parser(text).parse())
