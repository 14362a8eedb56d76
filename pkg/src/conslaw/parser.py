"""Expression parser with ``D(u, t, x)`` derivative syntax."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    FUNCTIONS,
    Add,
    Call,
    Div,
    ExprError,
    Indep,
    Jet,
    Mul,
    MultiIndex,
    Node,
    Num,
    Param,
    Pow,
    Sym,
    VarTable,
    normalize,
)


class ParseError(ExprError):
    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end
    text: str
    pos: int


def _tokenize(src: str, line: int, col0: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            break
        if m.group(1):
            toks.append(_Tok("num", m.group(1), m.start(1)))
        elif m.group(2):
            toks.append(_Tok("name", m.group(2), m.start(2)))
        elif m.group(3):
            if m.group(3) not in "+-*/^(),":
                raise ParseError(f"unexpected character {m.group(3)!r}", line, col0 + m.start(3))
            toks.append(_Tok("op", m.group(3), m.start(3)))
        pos = m.end()
    toks.append(_Tok("end", "", len(src.rstrip())))
    return toks


class _Parser:
    def __init__(self, src, vars, params, line, col0):
        self.vars = vars
        self.params = set(params)
        self.line = line
        self.col0 = col0
        self.toks = _tokenize(src, line, col0)
        self.i = 0

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, self.line, self.col0 + tok.pos)

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.take()
        if tok.text != text:
            raise self.error(f"expected {text!r}", tok)
        return tok

    def parse(self) -> Node:
        if self.peek().kind == "end":
            raise self.error("empty expression")
        node = self.sum()
        if self.peek().kind != "end":
            raise self.error(f"unexpected {self.peek().text!r}")
        return node

    def sum(self):
        args = [self.product()]
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            rhs = self.product()
            args.append(rhs if op == "+" else Mul((Num(Fraction(-1)), rhs)))
        return args[0] if len(args) == 1 else Add(tuple(args))

    def product(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in ("*", "/"):
            op = self.take().text
            rhs = self.unary()
            node = Mul((node, rhs)) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        if self.peek().kind == "op" and self.peek().text in ("-", "+"):
            op = self.take().text
            node = self.unary()
            return Mul((Num(Fraction(-1)), node)) if op == "-" else node
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek().kind == "op" and self.peek().text == "^":
            tok = self.take()
            exp_node = self.unary()
            try:
                value = normalize(exp_node)
            except ExprError as exc:
                raise self.error(str(exc), tok) from None
            if not value.is_constant():
                raise self.error("exponent must be an integer constant", tok)
            c = value.constant_value()
            if c.denominator != 1:
                raise self.error("rational exponents are not supported", tok)
            return Pow(base, int(c))
        return base

    def primary(self):
        tok = self.take()
        if tok.kind == "num":
            return Num(Fraction(tok.text))
        if tok.kind == "op" and tok.text == "(":
            node = self.sum()
            self.expect(")")
            return node
        if tok.kind == "name":
            if self.peek().text == "(" and self.peek().kind == "op":
                return self.call(tok)
            return Sym(self.identifier(tok))
        raise self.error(f"unexpected {tok.text or 'end of input'!r}", tok)

    def identifier(self, tok):
        name = tok.text
        vars = self.vars
        if name in vars.independent:
            return Indep(name)
        if name in vars.dependents:
            return Jet(name, MultiIndex.zero(vars.n))
        if name in self.params:
            return Param(name)
        raise self.error(f"unknown identifier {name!r}", tok)

    def call(self, tok):
        self.expect("(")
        name = tok.text
        if name == "D":
            args = [self.take()]
            while self.peek().text == ",":
                self.take()
                args.append(self.take())
            self.expect(")")
            dep = args[0]
            if dep.kind != "name" or dep.text not in self.vars.dependents:
                raise self.error("first argument of D must be a dependent variable", dep)
            if len(args) < 2:
                raise self.error("D needs at least one independent variable", tok)
            counts = [0] * self.vars.n
            for a in args[1:]:
                if a.kind != "name" or a.text not in self.vars.independent:
                    raise self.error(f"{a.text!r} is not an independent variable", a)
                counts[self.vars.independent.index(a.text)] += 1
            return Sym(Jet(dep.text, MultiIndex(counts)))
        if name in FUNCTIONS:
            arg = self.sum()
            if self.peek().text == ",":
                raise self.error(f"{name} takes exactly one argument")
            self.expect(")")
            return Call(name, arg)
        raise self.error(f"unknown function {name!r}", tok)


def parse_tree(src: str, vars: VarTable, params=(), line: int = 1, col: int = 1) -> Node:
    """Parse into an unnormalized tree.  ``line``/``col`` offset diagnostics."""
    return _Parser(src, vars, params, line, col).parse()


def parse_expression(src: str, vars: VarTable, params=(), line: int = 1, col: int = 1):
    node = parse_tree(src, vars, params, line, col)
    try:
        return normalize(node)
    except ExprError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), line, col) from None
