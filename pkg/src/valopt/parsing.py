"""Parser turning function text like ``3*x1 + (x1+x2+x3)^2 + 5*x4``
into expression trees.

Grammar, loosest binding first:

    expr   :=  term  (('+' | '-') term)*
    term   :=  power (('*' | '/') power)*
    power  :=  base  ('^' exponent)?          right associative
    base   :=  '-' base | atom
    atom   :=  NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Unary minus binds tighter than '^', so ``-x^2`` squares the negated
value.  An exponent written as a bare (optionally signed) integer
literal produces an exact integer power; anything else is treated as a
real power and evaluated through exp/log.
"""

from __future__ import annotations

import re
from typing import Optional, Sequence

from .expr import Binary, Const, Power, Unary, Var

__all__ = ["ParseError", "parse_function", "FUNCTION_NAMES"]

FUNCTION_NAMES = ("sqrt", "exp", "log", "sin", "cos", "tan", "abs")


class ParseError(Exception):
    """Syntax or name error in problem text.

    `line` and `column` are 1-based positions; `line` is None for text
    parsed outside a file context.
    """

    def __init__(self, message: str, column: Optional[int] = None,
                 line: Optional[int] = None):
        self.message = message
        self.column = column
        self.line = line
        super().__init__(str(self))

    def __str__(self):
        at = []
        if self.line is not None:
            at.append(f"line {self.line}")
        if self.column is not None:
            at.append(f"column {self.column}")
        return (", ".join(at) + ": " if at else "") + self.message


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+[eE][+-]?\d+|\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))")


class _Token:
    __slots__ = ("kind", "text", "column", "is_int")

    def __init__(self, kind, text, column, is_int=False):
        self.kind = kind
        self.text = text
        self.column = column
        self.is_int = is_int


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            col = len(text) - len(stripped) + 1
            raise ParseError(f"unexpected character {stripped[0]!r}", column=col)
        col = m.start(m.lastgroup) + 1
        if m.lastgroup == "num":
            toks.append(_Token("num", m.group("num"), col,
                               is_int=m.group("num").isdigit()))
        elif m.lastgroup == "name":
            toks.append(_Token("name", m.group("name"), col))
        else:
            toks.append(_Token("op", m.group("op"), col))
        pos = m.end()
    toks.append(_Token("end", "", len(text) + 1))
    return toks


class _Parser:
    def __init__(self, text: str, symbols: dict):
        self.toks = _tokenize(text)
        self.i = 0
        self.symbols = symbols

    def peek(self, ahead=0) -> _Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _Token:
        t = self.toks[self.i]
        if t.kind != "end":
            self.i += 1
        return t

    def expect_op(self, op: str):
        t = self.next()
        if t.kind != "op" or t.text != op:
            raise ParseError(f"expected {op!r}", column=t.column)

    def parse(self):
        e = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"unexpected {t.text!r}", column=t.column)
        return e

    def expr(self):
        e = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            e = Binary("add" if op == "+" else "sub", e, self.term())
        return e

    def term(self):
        e = self.power()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            e = Binary("mul" if op == "*" else "div", e, self.power())
        return e

    def power(self):
        b = self.base()
        t = self.peek()
        if t.kind == "op" and t.text == "^":
            self.next()
            k = self._int_exponent()
            if k is not None:
                return Power(b, k)
            return Binary("pow", b, self.power())
        return b

    def _int_exponent(self) -> Optional[int]:
        # a bare integer literal, optionally signed, and nothing tighter
        # following it (so x^2.5 and x^2*y are not captured here)
        sign = 1
        ahead = 0
        while self.peek(ahead).kind == "op" and self.peek(ahead).text == "-":
            sign = -sign
            ahead += 1
        t = self.peek(ahead)
        if t.kind == "num" and t.is_int:
            after = self.peek(ahead + 1)
            if not (after.kind == "op" and after.text == "^"):
                for _ in range(ahead + 1):
                    self.next()
                return sign * int(t.text)
        return None

    def base(self):
        t = self.peek()
        if t.kind == "op" and t.text == "-":
            self.next()
            return Unary("neg", self.base())
        return self.atom()

    def atom(self):
        t = self.next()
        if t.kind == "num":
            return Const(float(t.text))
        if t.kind == "name":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if t.text not in FUNCTION_NAMES:
                    raise ParseError(f"unknown function {t.text!r}", column=t.column)
                self.next()
                arg = self.expr()
                self.expect_op(")")
                return Unary(t.text, arg)
            if t.text not in self.symbols:
                raise ParseError(f"unknown variable {t.text!r}", column=t.column)
            return Var(self.symbols[t.text])
        if t.kind == "op" and t.text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        what = repr(t.text) if t.kind != "end" else "end of input"
        raise ParseError(f"unexpected {what}", column=t.column)


def parse_function(text: str, var_names: Sequence[str]):
    """Parse one function row.  Variables resolve against `var_names`
    (position gives the 0-based index).  Raises ParseError with a column
    position on bad input."""
    symbols = {name: j for j, name in enumerate(var_names)}
    return _Parser(text, symbols).parse()
