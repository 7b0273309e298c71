"""Recursive-descent parser shared by the scalar and Weyl text formats.

Grammar (whitespace-insensitive, juxtaposition is multiplication)::

    expr    := ['+'|'-'] term (('+'|'-') term)*
    term    := power (('*'|'/')? power)*
    power   := atom ('^' INT)?
    atom    := INT | 'i' | 'r2' | 'ir2' | GENERATOR | '(' expr ')'

Division is only allowed by a constant. The token ``a*`` always denotes the
ladder creation generator, so ``a*a`` reads as ``(a*) a``; write ``a a`` or
``a^2`` for the square of ``a``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Callable, Optional

from .scalar import I, SQRT2, Scalar

_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>a\*|[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {col}")
        self.message = message
        self.line = line
        self.column = col


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, lift: Callable, generator: Optional[Callable]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.lift = lift
        self.generator = generator

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, self.text, tok[2])

    def parse(self):
        value = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return value

    def expr(self):
        sign = 1
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
        value = self.term()
        if sign < 0:
            value = -value
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                value = value + rhs if val == "+" else value - rhs
            else:
                return value

    def _starts_atom(self, tok):
        kind, val, _ = tok
        return kind in ("int", "name") or (kind == "op" and val == "(")

    def term(self):
        value = self.power()
        while True:
            tok = self.peek()
            kind, val, _ = tok
            if kind == "op" and val == "*":
                self.take()
                value = value * self.power()
            elif kind == "op" and val == "/":
                self.take()
                rhs_tok = self.peek()
                rhs = self.power()
                value = self._divide(value, rhs, rhs_tok)
            elif self._starts_atom(tok):
                value = value * self.power()
            else:
                return value

    def _divide(self, value, rhs, tok):
        if not isinstance(rhs, Scalar):
            const = getattr(rhs, "constant_value", lambda: None)()
            if const is None:
                raise self.error("division by a non-constant", tok)
            rhs = const
        if rhs.is_zero():
            raise self.error("division by zero", tok)
        return value * rhs.inv()

    def power(self):
        value = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            tok = self.take()
            if tok[0] != "int":
                raise self.error("expected integer exponent", tok)
            value = value ** int(tok[1])
        return value

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "int":
            return self.lift(Scalar(Fraction(int(val))))
        if kind == "op" and val == "(":
            value = self.expr()
            close = self.take()
            if close[0] != "op" or close[1] != ")":
                raise self.error("expected ')'", close)
            return value
        if kind == "name":
            if val == "i":
                return self.lift(I)
            if val == "r2":
                return self.lift(SQRT2)
            if val == "ir2":
                return self.lift(I * SQRT2)
            if self.generator is not None:
                g = self.generator(val)
                if g is not None:
                    return g
            raise self.error(f"unknown symbol {val!r}", tok)
        raise self.error(f"unexpected token {val!r}", tok)


def parse_expression(text: str, lift: Callable, generator: Optional[Callable] = None):
    """Parse ``text`` into the ring described by ``lift`` and ``generator``."""
    return _Parser(text, lift, generator).parse()


def parse_scalar_expr(text: str) -> Scalar:
    return parse_expression(text, lambda s: s)
