"""Recursive-descent parser for the expression grammar.

::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := ('-' | '+') unary | power
    power    := atom ('^' exponent)?
    atom     := number | ident | func '(' expr ')' | '(' expr ')'
    exponent := ['-'] integer | '(' ['-'] integer ['/' integer] ')'
    ident    := 'x'<digits> | 'u'<digits> ('_' ('x'<digits>)+)?
    func     := sqrt | exp | log | sin | cos | sinh | cosh | tanh

Unary minus binds looser than ``^``, so ``-u1^2`` is ``-(u1^2)``.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..jetspace import JetCoordinate, JetLayout, MultiIndex
from .expr import FUNCTIONS, Const, Expr, Jet, Var, add, div, func, mul, neg, power


class ParseError(ValueError):
    """Syntax or naming error; ``position`` is the 0-based column."""

    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} (at column {position + 1})")
        self.message = message
        self.position = position
        self.text = text


_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)
_IDENT = re.compile(r"^(?:x(?P<axis>\d+)|u(?P<dep>\d+)(?:_(?P<suffix>(?:x\d+)+))?)$")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[col]!r}", col, text)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, lay: JetLayout | None, n: int | None, allow_jets: bool):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.layout = lay
        self.n = lay.n if lay is not None else n
        self.allow_jets = allow_jets

    def error(self, message, pos=None):
        if pos is None:
            pos = self.peek()[2]
        raise ParseError(message, pos, self.text)

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept(self, op):
        kind, value, _ = self.peek()
        if kind == "op" and value == op:
            self.i += 1
            return True
        return False

    def expect(self, op):
        if not self.accept(op):
            kind, value, pos = self.peek()
            found = "end of input" if kind == "end" else repr(value)
            self.error(f"expected {op!r}, found {found}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            self.error(f"unexpected {value!r}", pos)
        return e

    def expr(self):
        terms = [self.term()]
        while True:
            if self.accept("+"):
                terms.append(self.term())
            elif self.accept("-"):
                terms.append(neg(self.term()))
            else:
                return add(*terms)

    def term(self):
        acc = self.unary()
        while True:
            if self.accept("*"):
                acc = mul(acc, self.unary())
            elif self.accept("/"):
                acc = div(acc, self.unary())
            else:
                return acc

    def unary(self):
        if self.accept("-"):
            return neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            pos = self.peek()[2]
            p = self.exponent()
            if p.denominator not in (1, 2):
                self.error(
                    f"exponent {p} is not a half-integer; write exp(p*log(b)) instead",
                    pos,
                )
            base = power(base, p)
            if self.peek()[0] == "op" and self.peek()[1] == "^":
                self.error("chained '^' is ambiguous; add parentheses")
        return base

    def integer(self):
        kind, value, pos = self.next()
        if kind != "number" or not value.isdigit():
            self.error("expected an integer exponent", pos)
        return int(value)

    def exponent(self) -> Fraction:
        if self.accept("-"):
            return Fraction(-self.integer())
        if self.accept("("):
            sign = -1 if self.accept("-") else 1
            num = self.integer()
            den = 1
            if self.accept("/"):
                den = self.integer()
                if den == 0:
                    self.error("zero denominator in exponent")
            self.expect(")")
            return Fraction(sign * num, den)
        return Fraction(self.integer())

    def atom(self):
        kind, value, pos = self.next()
        if kind == "number":
            return Const(Fraction(value))
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "ident":
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(value, arg)
            return self.identifier(value, pos)
        if kind == "end":
            self.error("unexpected end of input", pos)
        self.error(f"unexpected {value!r}", pos)

    def identifier(self, name, pos):
        m = _IDENT.match(name)
        if m is None:
            self.error(f"unknown identifier {name!r}", pos)
        n = self.n
        if m.group("axis") is not None:
            axis = int(m.group("axis"))
            if axis < 1 or (n is not None and axis > n):
                self.error(f"unknown identifier {name!r} (n={n})", pos)
            return Var(axis)
        if not self.allow_jets:
            self.error(f"{name!r} not allowed here: expression must depend on x only", pos)
        lay = self.layout
        dep = int(m.group("dep"))
        if dep < 1 or (lay is not None and dep > lay.m):
            m_ = lay.m if lay is not None else "?"
            self.error(f"unknown identifier {name!r} (m={m_})", pos)
        axes = [int(a) for a in re.findall(r"x(\d+)", m.group("suffix") or "")]
        for a in axes:
            if a < 1 or (n is not None and a > n):
                self.error(f"unknown identifier {name!r} (no x{a} when n={n})", pos)
        if n is None:
            raise ParseError("jet coordinates need a layout", pos, self.text)
        coord = JetCoordinate(dep, MultiIndex.from_sequence(n, axes))
        if axes != sorted(axes):
            self.error(
                f"derivative suffix of {name!r} must be nondecreasing; "
                f"write {coord.name}",
                pos,
            )
        if lay is not None and coord.order > lay.s:
            self.error(f"{name!r} has order {coord.order}, exceeding s={lay.s}", pos)
        return Jet(coord)


def parse(text: str, lay: JetLayout) -> Expr:
    """Parse ``text`` with jet coordinates validated against ``lay``."""
    return _Parser(text, lay, None, True).parse()


def parse_x(text: str, n: int) -> Expr:
    """Parse an expression in the independent variables ``x1..xn`` only."""
    return _Parser(text, None, n, False).parse()
