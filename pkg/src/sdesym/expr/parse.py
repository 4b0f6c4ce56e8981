"""Recursive-descent parser for the expression grammar.

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ['-'] atom ['^' factor]
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import re
from fractions import Fraction

from .core import FUNCTIONS, Const, Sym, add, func, mul, neg, power

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([^\W\d]\w*)|(\S))", re.UNICODE)


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ValueError):
    def __init__(self, name: str):
        super().__init__(f"unknown identifier {name!r}")
        self.name = name


def _tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # trailing whitespace
            break
        start = m.start(m.lastindex)
        byte_off = len(text[:start].encode("utf-8"))
        if m.group(1) is not None:
            toks.append(("num", m.group(1), byte_off))
        elif m.group(2) is not None:
            toks.append(("id", m.group(2), byte_off))
        else:
            toks.append(("op", m.group(3), byte_off))
        pos = m.end()
    toks.append(("end", "", len(text.encode("utf-8"))))
    return toks


class _Parser:
    def __init__(self, text, symbols):
        self.toks = _tokenize(text)
        self.i = 0
        self.symbols = symbols

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {op!r}, found {what}", off)
        self.take()

    def expr(self):
        terms = [self.term()]
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                terms.append(t if val == "+" else neg(t))
            else:
                return add(*terms)

    def term(self):
        out = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                f = self.factor()
                out = mul(out, f) if val == "*" else mul(out, power(f, Const(-1)))
            else:
                return out

    def factor(self):
        kind, val, _ = self.peek()
        negate = False
        if kind == "op" and val == "-":
            self.take()
            negate = True
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            base = power(base, self.factor())
        return neg(base) if negate else base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "id":
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                if val not in FUNCTIONS:
                    raise ParseError(f"unknown function {val!r}", off)
                self.take()
                arg = self.expr()
                self.expect(")")
                return func(val, arg)
            if val in FUNCTIONS:
                raise ParseError(f"function {val!r} needs an argument", off)
            if self.symbols is not None and val not in self.symbols:
                raise UnknownIdentifierError(val)
            return Sym(val)
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", off)


def parse(text: str, symbols=None):
    """Parse text into a canonical expression.

    ``symbols`` is an optional collection of admissible identifiers; any
    other identifier raises :class:`UnknownIdentifierError`.
    """
    p = _Parser(text, None if symbols is None else set(symbols))
    out = p.expr()
    kind, val, off = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {val!r}", off)
    return out
