"""Expression AST, recursive-descent parser and canonical printer.

Constants are exact rationals; constant subtrees are folded while parsing, so
the parsed tree is the canonical form and ``parse(to_string(e)) == e``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..errors import ParseError

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


class Expr:
    __slots__ = ()

    def __str__(self):
        return to_string(self)

    def variables(self):
        out = set()
        _collect_vars(self, out)
        return out


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 0-based


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


def _collect_vars(e, out):
    if isinstance(e, Var):
        out.add(e.index)
    elif isinstance(e, BinOp):
        _collect_vars(e.left, out)
        _collect_vars(e.right, out)
    elif isinstance(e, (Neg, Call)):
        _collect_vars(e.arg, out)
    elif isinstance(e, Pow):
        _collect_vars(e.base, out)


# ---------------------------------------------------------------------------
# folding constructors


def make_binop(op, a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        x, y = a.value, b.value
        if op == "+":
            return Const(x + y)
        if op == "-":
            return Const(x - y)
        if op == "*":
            return Const(x * y)
        if y == 0:
            raise ZeroDivisionError("constant division by zero")
        return Const(x / y)
    return BinOp(op, a, b)


def make_neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    return Neg(a)


def make_pow(a, e):
    if e < 0:
        raise ValueError("negative exponent")
    if isinstance(a, Const):
        if a.value == 0 and e == 0:
            return Const(Fraction(1))
        return Const(a.value**e)
    return Pow(a, e)


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        tok = m.group(kind)
        start = m.start(kind)
        if tok == "**":
            tok = "^"
        tokens.append((kind, tok, start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, n, names):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.n = n
        self.names = {name: k for k, name in enumerate(names or ())}

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        kind, tok, pos = self.next()
        if tok != op or kind != "op":
            what = "end of input" if kind == "eof" else repr(tok)
            raise ParseError(f"expected {op!r}, found {what}", pos)

    def parse(self):
        e = self.expr()
        kind, tok, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected token {tok!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.next()[1]
            e = self._fold(make_binop, op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.next()
            e = self._fold(make_binop, op, e, self.unary(), pos)
        return e

    def unary(self):
        kind, tok, _ = self.peek()
        if kind == "op" and tok == "-":
            self.next()
            return make_neg(self.unary())
        if kind == "op" and tok == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, tok, _ = self.peek()
        if kind == "op" and tok == "^":
            self.next()
            kind, tok, pos = self.next()
            if kind != "num" or not tok.isdigit():
                raise ParseError("exponent must be a non-negative integer literal", pos)
            return make_pow(base, int(tok))
        return base

    def atom(self):
        kind, tok, pos = self.next()
        if kind == "num":
            return Const(Fraction(tok))
        if kind == "name":
            if tok in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok, arg)
            return Var(self._variable(tok, pos))
        if kind == "op" and tok == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "eof" else repr(tok)
        raise ParseError(f"unexpected {what}", pos)

    def _variable(self, name, pos):
        if name in self.names:
            return self.names[name]
        m = re.fullmatch(r"x(\d+)", name)
        if m is None:
            raise ParseError(f"unknown identifier {name!r}", pos)
        k = int(m.group(1))
        if k < 1 or k > self.n:
            raise ParseError(f"variable {name} out of range for dimension {self.n}", pos)
        return k - 1

    def _fold(self, ctor, op, a, b, pos=None):
        try:
            return ctor(op, a, b)
        except ZeroDivisionError:
            raise ParseError("constant division by zero", pos) from None


def parse(text, n, names=None):
    """Parse ``text`` into an :class:`Expr` over variables x1..xn."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text, n, names).parse()


# ---------------------------------------------------------------------------
# printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e):
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def _const_str(v):
    if v.denominator == 1:
        s = str(v.numerator)
    else:
        s = f"{abs(v.numerator)}/{v.denominator}"
        return f"(-{s})" if v < 0 else f"({s})"
    return f"({s})" if v < 0 else s


def to_string(e, names=None):
    if isinstance(e, Const):
        return _const_str(e.value)
    if isinstance(e, Var):
        return names[e.index] if names else f"x{e.index + 1}"
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg, names)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg, names)
        return f"-({inner})" if _prec(e.arg) < 3 else f"-{inner}"
    if isinstance(e, Pow):
        inner = to_string(e.base, names)
        if _prec(e.base) < 5:
            inner = f"({inner})"
        return f"{inner}^{e.exponent}"
    p = _PREC[e.op]
    left = to_string(e.left, names)
    right = to_string(e.right, names)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    sep = f" {e.op} " if p == 1 else e.op
    return f"{left}{sep}{right}"
