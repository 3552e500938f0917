"""Exact rationals and multivariate polynomials over the smooth variables.

Polynomials with rational coefficients stand in for smooth functions on a
chart.  A chart domain is all of R^n, so a polynomial vanishes on an open set
exactly when it is the zero polynomial; the constant-rank detector relies on
this.

A ``Poly`` stores a canonical term map ``exponent tuple -> Rational`` with no
zero coefficients.  Variable indices are 0-based in the API; printed names
are 1-based (``x1``, ``x2``, ...).
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import factorial
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import gmpy2

from .errors import ArityMismatch, IndexOutOfRange

Rational = gmpy2.mpq
ZERO = Rational(0)
ONE = Rational(1)

Exponent = tuple[int, ...]


def as_rational(value) -> Rational:
    """Coerce ints, ``Fraction``, ``mpq`` and ``"p/q"`` strings to ``Rational``."""
    if isinstance(value, type(ZERO)):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, type(gmpy2.mpz(0)))):
        return Rational(value)
    if isinstance(value, Fraction):
        return Rational(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        num, sep, den = text.partition("/")
        try:
            if sep:
                return Rational(int(num), int(den))
            return Rational(int(num))
        except ValueError as exc:
            raise ValueError(f"not a rational literal: {value!r}") from exc
    raise TypeError(f"cannot interpret {type(value).__name__} as an exact rational")


def rational_str(value) -> str:
    """Serialize as ``"p/q"`` (or ``"p"`` for integers)."""
    return str(as_rational(value))


def as_point(values: Iterable) -> tuple[Rational, ...]:
    return tuple(as_rational(v) for v in values)


def grlex_key(exps: Exponent):
    """Sort key: total degree first, then x1 before x2 within a degree."""
    return (sum(exps), tuple(-e for e in exps))


def _add_exps(a: Exponent, b: Exponent) -> Exponent:
    return tuple(i + j for i, j in zip(a, b))


class Poly:
    """Immutable polynomial in ``arity`` smooth variables over Q."""

    __slots__ = ("arity", "_terms")

    def __init__(self, arity: int, terms: Mapping[Sequence[int], object] | None = None):
        if arity < 0:
            raise ValueError("arity must be non-negative")
        clean: dict[Exponent, Rational] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != arity or any(e < 0 for e in exps):
                raise ArityMismatch(f"exponent {exps} does not fit arity {arity}")
            c = as_rational(coeff)
            if c:
                clean[exps] = clean.get(exps, ZERO) + c
        object.__setattr__(self, "arity", arity)
        object.__setattr__(self, "_terms", {e: c for e, c in clean.items() if c})

    @classmethod
    def _raw(cls, arity: int, terms: dict) -> "Poly":
        # trusted constructor: keys already tuples of the right length, no zeros
        obj = object.__new__(cls)
        object.__setattr__(obj, "arity", arity)
        object.__setattr__(obj, "_terms", terms)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    @classmethod
    def zero(cls, arity: int) -> "Poly":
        return cls._raw(arity, {})

    @classmethod
    def constant(cls, arity: int, value) -> "Poly":
        c = as_rational(value)
        return cls._raw(arity, {(0,) * arity: c} if c else {})

    @classmethod
    def var(cls, arity: int, index: int) -> "Poly":
        if not 0 <= index < arity:
            raise IndexOutOfRange(f"variable index {index} outside arity {arity}")
        exps = [0] * arity
        exps[index] = 1
        return cls._raw(arity, {tuple(exps): ONE})

    @property
    def terms(self) -> Mapping[Exponent, Rational]:
        return MappingProxyType(self._terms)

    def sorted_terms(self) -> list[tuple[Exponent, Rational]]:
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]))

    def coeff(self, exps: Sequence[int]) -> Rational:
        return self._terms.get(tuple(exps), ZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self._terms), default=-1)

    def constant_term(self) -> Rational:
        return self._terms.get((0,) * self.arity, ZERO)

    def _check(self, other: "Poly") -> None:
        if self.arity != other.arity:
            raise ArityMismatch(f"arity {self.arity} vs {other.arity}")

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        return Poly.constant(self.arity, other)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, ZERO) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly._raw(self.arity, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(self.arity, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            c = as_rational(other)
            if not c:
                return Poly.zero(self.arity)
            return Poly._raw(self.arity, {e: v * c for e, v in self._terms.items()})
        self._check(other)
        out: dict[Exponent, Rational] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = _add_exps(e1, e2)
                out[e] = out.get(e, ZERO) + c1 * c2
        return Poly._raw(self.arity, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Poly":
        if power < 0:
            raise ValueError("negative powers are not polynomials")
        result = Poly.constant(self.arity, 1)
        base = self
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.arity == other.arity and self._terms == other._terms
        try:
            return self == Poly.constant(self.arity, other)
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        return hash((self.arity, frozenset(self._terms.items())))

    def diff(self, index: int) -> "Poly":
        return poly_diff(self, index)

    def __call__(self, *point) -> Rational:
        return poly_eval(self, point)

    def format(self, names: Sequence[str] | None = None) -> str:
        names = list(names) if names is not None else [f"x{i + 1}" for i in range(self.arity)]
        return format_terms(self.sorted_terms(), names)

    def __str__(self) -> str:
        return self.format()

    def __repr__(self) -> str:
        return f"Poly({self.arity}, {self.format()!r})"


def format_monomial(exps: Sequence[int], names: Sequence[str]) -> str:
    parts = []
    for e, name in zip(exps, names):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def format_terms(terms: Iterable[tuple[Sequence[int], Rational]], names: Sequence[str]) -> str:
    """Render ``c*m + ...`` with rationals as ``p/q``; ``0`` when empty."""
    out = []
    for exps, c in terms:
        mono = format_monomial(exps, names)
        mag = abs(c)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if not out:
            out.append(body if c > 0 else f"-{body}")
        else:
            out.append(("+ " if c > 0 else "- ") + body)
    return " ".join(out) if out else "0"


def poly_add(p: Poly, q: Poly) -> Poly:
    if p.arity != q.arity:
        raise ArityMismatch(f"arity {p.arity} vs {q.arity}")
    return p + q


def poly_mul(p: Poly, q: Poly) -> Poly:
    if p.arity != q.arity:
        raise ArityMismatch(f"arity {p.arity} vs {q.arity}")
    return p * q


def poly_diff(p: Poly, index: int) -> Poly:
    """Exact partial derivative with respect to variable ``index`` (0-based)."""
    if not 0 <= index < p.arity:
        raise IndexOutOfRange(f"variable index {index} outside arity {p.arity}")
    out: dict[Exponent, Rational] = {}
    for exps, c in p._terms.items():
        e = exps[index]
        if e:
            new = exps[:index] + (e - 1,) + exps[index + 1:]
            out[new] = c * e
    return Poly._raw(p.arity, out)


def poly_eval(p: Poly, point: Sequence) -> Rational:
    if len(point) != p.arity:
        raise ArityMismatch(f"point of length {len(point)} for arity {p.arity}")
    pt = as_point(point)
    total = ZERO
    for exps, c in p._terms.items():
        term = c
        for v, e in zip(pt, exps):
            if e:
                term *= v ** e
        total += term
    return total


def poly_subst(p: Poly, args: Sequence[Poly]) -> Poly:
    """Compose ``p(args)``; every argument shares one arity."""
    if len(args) != p.arity:
        raise ArityMismatch(f"{len(args)} arguments for arity {p.arity}")
    if not args:
        # a constant polynomial in zero variables; caller must lift it
        raise ArityMismatch("substitution into a 0-ary polynomial needs a target arity")
    arity = args[0].arity
    for a in args:
        if a.arity != arity:
            raise ArityMismatch("substitution arguments have different arities")
    powers: list[list[Poly]] = [[Poly.constant(arity, 1)] for _ in args]

    def power(i: int, e: int) -> Poly:
        cache = powers[i]
        while len(cache) <= e:
            cache.append(cache[-1] * args[i])
        return cache[e]

    result = Poly.zero(arity)
    for exps, c in p.sorted_terms():
        term = Poly.constant(arity, c)
        for i, e in enumerate(exps):
            if e:
                term = term * power(i, e)
        result = result + term
    return result


def poly_lift(p: Poly, arity: int, positions: Sequence[int]) -> Poly:
    """Re-embed ``p`` into ``arity`` variables, sending variable i to ``positions[i]``."""
    if len(positions) != p.arity:
        raise ArityMismatch("one position per variable is required")
    out: dict[Exponent, Rational] = {}
    for exps, c in p._terms.items():
        new = [0] * arity
        for e, pos in zip(exps, positions):
            new[pos] += e
        key = tuple(new)
        out[key] = out.get(key, ZERO) + c
    return Poly._raw(arity, {e: c for e, c in out.items() if c})


def poly_shift(p: Poly, point: Sequence) -> Poly:
    """Rewrite ``p`` in the shifted variables ``x - a``.

    The coefficient of ``(x - a)^I`` in the result is the Taylor coefficient
    of ``p`` at ``a``.
    """
    if len(point) != p.arity:
        raise ArityMismatch(f"point of length {len(point)} for arity {p.arity}")
    pt = as_point(point)
    if not any(pt) or p.is_zero():
        return p
    # binomial expansion monomial by monomial
    out: dict[Exponent, Rational] = {}
    for exps, c in p._terms.items():
        ranges = [range(e + 1) for e in exps]
        for low in product(*ranges):
            coeff = c
            for e, l, a in zip(exps, low, pt):
                if l != e:
                    if not a:
                        coeff = ZERO
                        break
                    coeff *= _binom(e, l) * a ** (e - l)
            if coeff:
                out[low] = out.get(low, ZERO) + coeff
    return Poly._raw(p.arity, {e: c for e, c in out.items() if c})


def _binom(n: int, k: int) -> int:
    return factorial(n) // (factorial(k) * factorial(n - k))


def poly_div_exact(p: Poly, q: Poly) -> Poly:
    """Quotient ``p / q`` when ``q`` divides ``p``; raises ``ValueError`` otherwise."""
    if q.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if p.arity != q.arity:
        raise ArityMismatch(f"arity {p.arity} vs {q.arity}")
    lead_q, lc_q = max(q._terms.items(), key=lambda t: grlex_key(t[0]))
    if len(q._terms) == 1:
        out = {}
        for exps, c in p._terms.items():
            diff = tuple(a - b for a, b in zip(exps, lead_q))
            if min(diff, default=0) < 0:
                raise ValueError("polynomial division is not exact")
            out[diff] = c / lc_q
        return Poly._raw(p.arity, out)
    remainder = dict(p._terms)
    quotient: dict[Exponent, Rational] = {}
    while remainder:
        lead_r = max(remainder, key=grlex_key)
        diff = tuple(a - b for a, b in zip(lead_r, lead_q))
        if min(diff, default=0) < 0:
            raise ValueError("polynomial division is not exact")
        c = remainder[lead_r] / lc_q
        quotient[diff] = c
        for exps, cq in q._terms.items():
            key = _add_exps(exps, diff)
            v = remainder.get(key, ZERO) - c * cq
            if v:
                remainder[key] = v
            else:
                remainder.pop(key, None)
    return Poly._raw(p.arity, quotient)
