"""Morphism description files.

A file declares the source and target dimensions and assigns one expression
to every target coordinate::

    source: n'=1 k'=1
    target: n=2 k=0
    x1 = u1
    x2 = z1      # comments start with '#'

Expressions use rational literals (``3``, ``-1/2``), the source variables
``u1..`` and ``z1..``, ``+ - *``, ``^`` with a natural exponent and
parentheses.  A leading minus is allowed in front of any factor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .exactalg import Poly, Rational
from .morphism import Morphism
from .series import DEFAULT_ORDER, fps_from_poly

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\s*/\s*\d+)?)|(?P<var>[A-Za-z]\d+)|(?P<op>[-+*^()]))"
)
_HEADER = re.compile(r"^(source|target)\s*:\s*(.*)$")
_DIM = re.compile(r"^(n'|k'|n|k)\s*=\s*(\d+)$")
_ASSIGN = re.compile(r"^([xy])(\d+)\s*=(.*)$")


@dataclass
class _Token:
    kind: str
    text: str
    column: int


def _tokenize(text: str, line: int, offset: int) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN.match(text, pos)
        if not match:
            col = offset + pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {text[pos:].strip()[0]!r}", line, col)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(_Token(kind, match.group(kind), offset + start + 1))
        pos = match.end()
    tokens.append(_Token("end", "", offset + len(text) + 1))
    return tokens


class _ExprParser:
    """Recursive descent over the token list, producing a ``Poly``."""

    def __init__(self, tokens: list[_Token], variables: dict[str, int], arity: int, line: int):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables
        self.arity = arity
        self.line = line

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, self.line, tok.column)

    def parse(self) -> Poly:
        value = self.expr()
        if self.peek().kind != "end":
            self.fail(f"unexpected {self.peek().text!r}")
        return value

    def expr(self) -> Poly:
        value = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> Poly:
        value = self.factor()
        while self.peek().kind == "op" and self.peek().text == "*":
            self.take()
            value = value * self.factor()
        return value

    def factor(self) -> Poly:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.take()
            return -self.factor()
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            exp = self.take()
            if exp.kind != "num" or "/" in exp.text:
                self.fail("exponent must be a natural number", exp)
            base = base ** int(exp.text)
        return base

    def atom(self) -> Poly:
        tok = self.take()
        if tok.kind == "num":
            num, _, den = tok.text.replace(" ", "").partition("/")
            if den and int(den) == 0:
                self.fail("zero denominator", tok)
            return Poly.constant(self.arity, Rational(int(num), int(den or 1)))
        if tok.kind == "var":
            if tok.text not in self.variables:
                self.fail(f"unknown variable {tok.text!r}", tok)
            return Poly.var(self.arity, self.variables[tok.text])
        if tok.kind == "op" and tok.text == "(":
            value = self.expr()
            close = self.take()
            if close.kind != "op" or close.text != ")":
                self.fail("expected ')'", close)
            return value
        self.fail("expected a number, a variable or '('", tok)


def parse_expression(text: str, smooth: str, formal: str, n: int, k: int, line: int = 1, offset: int = 0) -> Poly:
    """Parse an expression over ``smooth1..smoothn`` and ``formal1..formalk`` into a Poly of arity n+k."""
    variables = {f"{smooth}{i + 1}": i for i in range(n)}
    variables.update({f"{formal}{j + 1}": n + j for j in range(k)})
    return _ExprParser(_tokenize(text, line, offset), variables, n + k, line).parse()


def _strip_comment(raw: str) -> str:
    return raw.split("#", 1)[0]


def parse_morphism(text: str, order: int = DEFAULT_ORDER) -> Morphism:
    """Parse a morphism file into a validated ``Morphism`` at ``order``."""
    dims: dict[str, int] = {}
    assigned: dict[tuple[str, int], tuple[str, int, int]] = {}
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        body = _strip_comment(raw).strip()
        if not body:
            continue
        header = _HEADER.match(body)
        if header:
            side = header.group(1)
            fields = header.group(2).split()
            for fld in fields:
                dm = _DIM.match(fld)
                if not dm:
                    raise ParseError(f"bad dimension field {fld!r}", lineno, raw.find(fld) + 1)
                key = dm.group(1)
                if (side == "source") != key.endswith("'"):
                    raise ParseError(f"{key} does not belong in the {side} header", lineno, raw.find(fld) + 1)
                if key in dims:
                    raise ParseError(f"{key} declared twice", lineno, raw.find(fld) + 1)
                dims[key] = int(dm.group(2))
            continue
        assign = _ASSIGN.match(body)
        if not assign:
            raise ParseError("expected a header or an assignment", lineno, raw.find(body[0]) + 1)
        key = (assign.group(1), int(assign.group(2)))
        if key in assigned:
            raise ParseError(f"{key[0]}{key[1]} assigned twice", lineno, raw.find(body[0]) + 1)
        rhs_offset = raw.index("=") + 1
        assigned[key] = (raw[rhs_offset:].split("#", 1)[0], lineno, rhs_offset)
    for key in ("n'", "k'", "n", "k"):
        if key not in dims:
            raise ParseError(f"missing dimension {key}", last_line, 1)
    n2, k2, n, k = dims["n'"], dims["k'"], dims["n"], dims["k"]
    for (kind, idx), (_, lineno, _) in assigned.items():
        bound = n if kind == "x" else k
        if not 1 <= idx <= bound:
            raise ParseError(f"{kind}{idx} is not a target coordinate", lineno, 1)
    cx, cy = [], []
    for kind, count, out in (("x", n, cx), ("y", k, cy)):
        for idx in range(1, count + 1):
            if (kind, idx) not in assigned:
                raise ParseError(f"{kind}{idx} is never assigned", last_line, 1)
            rhs, lineno, offset = assigned[(kind, idx)]
            poly = parse_expression(rhs, "u", "z", n2, k2, lineno, offset)
            out.append(fps_from_poly(poly, n2, k2, order))
    return Morphism((n2, k2), (n, k), tuple(cx), tuple(cy), order)


def print_morphism(m: Morphism) -> str:
    """Canonical file text; ``parse_morphism`` inverts it."""
    n2, k2 = m.src
    n, k = m.tgt
    lines = [f"source: n'={n2} k'={k2}", f"target: n={n} k={k}"]
    lines += m.format_lines()
    return "\n".join(lines) + "\n"
