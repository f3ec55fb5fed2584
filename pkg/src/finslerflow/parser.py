"""Parser for the expression surface language.

Grammar (precedence encoded in the descent):

    expr     := term  (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-' factor | power
    power    := base ('^' exponent)?
    base     := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
    exponent := ['+'|'-'] NUMBER | '(' ['+'|'-'] NUMBER ('/' NUMBER)? ')'

Exponents must be rational constants; anything else is rejected here so the
tree never contains a general f^g.  A unary minus applied directly to a
number literal folds into a negative constant, which keeps printing and
re-parsing structurally stable.  Offsets in errors are 0-based byte offsets.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DslSyntaxError
from .expr import Const, Neg, Pow, Var, _FUNC_CLASSES, Add, Sub, Mul, Div

_OPS = set("+-*/^()")


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(src):
    toks = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch in _OPS:
            toks.append(_Token(ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            start = i
            while i < n and src[i].isdigit():
                i += 1
            if i < n and src[i] == ".":
                i += 1
                while i < n and src[i].isdigit():
                    i += 1
            if src[start:i] == ".":
                raise DslSyntaxError("malformed number", start)
            if i < n and src[i] in "eE":
                i += 1
                if i < n and src[i] in "+-":
                    i += 1
                if i >= n or not src[i].isdigit():
                    raise DslSyntaxError("malformed number", i)
                while i < n and src[i].isdigit():
                    i += 1
            toks.append(_Token("num", src[start:i], start))
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (src[i].isalnum() or src[i] == "_"):
                i += 1
            toks.append(_Token("ident", src[start:i], start))
            continue
        raise DslSyntaxError(f"unexpected character {ch!r}", i)
    toks.append(_Token("eof", "", n))
    return toks


class _Parser:
    def __init__(self, src):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind, what):
        t = self.peek()
        if t.kind != kind:
            raise DslSyntaxError(f"expected {what}", t.pos)
        return self.next()

    def parse(self):
        e = self.expr()
        t = self.peek()
        if t.kind != "eof":
            raise DslSyntaxError(f"unexpected token {t.text!r}", t.pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self):
        e = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.next().kind
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self):
        if self.peek().kind == "-":
            self.next()
            inner = self.factor()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Neg(inner)
        return self.power()

    def power(self):
        e = self.base()
        if self.peek().kind == "^":
            self.next()
            e = Pow(e, self.exponent())
        return e

    def base(self):
        t = self.peek()
        if t.kind == "num":
            self.next()
            return Const(self._number(t))
        if t.kind == "ident":
            self.next()
            if self.peek().kind == "(":
                cls = _FUNC_CLASSES.get(t.text)
                if cls is None:
                    raise DslSyntaxError(f"unknown function name {t.text!r}", t.pos)
                self.next()
                arg = self.expr()
                self.expect(")", "')'")
                return cls(arg)
            return Var(t.text)
        if t.kind == "(":
            self.next()
            e = self.expr()
            self.expect(")", "')'")
            return e
        if t.kind == "eof":
            raise DslSyntaxError("unexpected end of input", t.pos)
        raise DslSyntaxError(f"unexpected token {t.text!r}", t.pos)

    def exponent(self):
        t = self.peek()
        sign = 1
        if t.kind in ("+", "-"):
            self.next()
            sign = -1 if t.kind == "-" else 1
            t = self.peek()
        if t.kind == "num":
            self.next()
            return sign * self._rational(t)
        if t.kind == "(":
            self.next()
            inner_sign = 1
            t2 = self.peek()
            if t2.kind in ("+", "-"):
                self.next()
                inner_sign = -1 if t2.kind == "-" else 1
            num_tok = self.expect("num", "exponent")
            r = self._rational(num_tok)
            if self.peek().kind == "/":
                self.next()
                den_tok = self.expect("num", "exponent denominator")
                den = self._rational(den_tok)
                if den == 0:
                    raise DslSyntaxError("zero denominator in exponent", den_tok.pos)
                r = r / den
            t3 = self.peek()
            if t3.kind != ")":
                raise DslSyntaxError("exponent must be a rational constant", t3.pos)
            self.next()
            return inner_sign * sign * r
        raise DslSyntaxError("expected exponent", t.pos)

    def _number(self, tok):
        try:
            v = float(tok.text)
        except ValueError:
            raise DslSyntaxError("malformed number", tok.pos) from None
        if v != v or v in (float("inf"), float("-inf")):
            raise DslSyntaxError("number out of range", tok.pos)
        return v

    def _rational(self, tok):
        try:
            return Fraction(tok.text)
        except ValueError:
            raise DslSyntaxError("malformed number", tok.pos) from None


def parse(src):
    """Parse surface syntax into an expression tree."""
    return _Parser(src).parse()
