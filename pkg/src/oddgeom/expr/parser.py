"""Recursive-descent parser for the expression language.

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' uint)?
    base   := number | ident | '(' expr ')' | 'sqrt' '(' expr ')' | '-' base

Unary minus binds to a *base*, so ``-x^2`` reads as ``(-x)^2``.
"""
from __future__ import annotations

import re

from . import nodes as N

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


class ParseError(ValueError):
    """Malformed expression text; ``offset`` is a byte offset into the input."""

    def __init__(self, message: str, text: str, pos: int):
        self.offset = len(text[:pos].encode("utf-8"))
        self.text = text
        super().__init__(f"{message} at offset {self.offset}")


class UnknownSymbolError(ParseError):
    def __init__(self, name: str, text: str, pos: int):
        self.symbol = name
        super().__init__(f"unknown identifier {name!r}", text, pos)


def _tokenize(text: str):
    toks = []
    pos = 0
    end = len(text)
    while True:
        while pos < end and text[pos].isspace():
            pos += 1
        if pos >= end:
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("end", "", end))
    return toks


class _Parser:
    def __init__(self, text: str, names):
        self.text = text
        self.names = names
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, what: str):
        kind, val, pos = self.peek()
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"expected {what}, found {found}", self.text, pos)

    def expect(self, sym: str):
        kind, val, _ = self.peek()
        if kind != "op" or val != sym:
            self.fail(repr(sym))
        self.take()

    def parse(self) -> N.Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail("operator or end of input")
        return e

    def expr(self):
        terms = [self.term()]
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                terms.append(t if val == "+" else N.neg(t))
            else:
                return N.add(*terms)

    def term(self):
        acc = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                rhs = self.factor()
                acc = N.mul(acc, rhs) if val == "*" else N.div(acc, rhs)
            else:
                return acc

    def factor(self):
        b = self.base()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val, _ = self.peek()
            if kind != "num" or not val.isdigit():
                self.fail("non-negative integer exponent")
            self.take()
            return N.power(b, int(val))
        return b

    def base(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return N.const(float(val))
        if kind == "ident":
            self.take()
            if val == "sqrt":
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return N.sqrt(inner)
            if val not in self.names:
                raise UnknownSymbolError(val, self.text, pos)
            return N.sym(val)
        if kind == "op" and val == "(":
            self.take()
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "op" and val == "-":
            self.take()
            return N.neg(self.base())
        self.fail("number, identifier, '(' or '-'")


def parse(text: str, names) -> N.Expr:
    """Parse ``text``; identifiers must belong to ``names``."""
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    return _Parser(text, frozenset(names)).parse()
