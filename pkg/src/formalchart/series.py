"""Truncated formal power series and jets.

``Fps`` is a truncated series in the formal variables ``y`` whose
coefficients are ``Poly`` in the smooth variables ``x``: a global section of
the local model, modulo formal degree ``order + 1``.

``Jet`` is a truncated element of a formal stalk at a rational basepoint ``a``:
a polynomial of total degree ``<= order`` in the shifted variables ``t = v - a``.
The constant coefficient is the value at ``a``.

Both carry a ``precision`` next to the nominal ``order``: the highest degree
that is known to be correct.  It drops below ``order`` only after a formal
derivative, whose top degree is under-determined.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

from .errors import (
    ArityMismatch,
    BasepointMismatch,
    FormalOrderViolation,
    IndexOutOfRange,
    NotLocal,
    ShapeMismatch,
)
from .exactalg import (
    ONE,
    ZERO,
    Poly,
    Rational,
    as_point,
    as_rational,
    format_monomial,
    grlex_key,
    poly_shift,
)

DEFAULT_ORDER = 8
INFINITY = math.inf

Multi = tuple[int, ...]


def _multi_sum(a: Multi, b: Multi) -> Multi:
    return tuple(i + j for i, j in zip(a, b))


def multi_indices(count: int, degree: int) -> list[Multi]:
    """All exponent tuples of length ``count`` and total degree ``degree``, grlex order."""
    if count == 0:
        return [()] if degree == 0 else []
    out = []

    def rec(prefix: list[int], left: int, slots: int):
        if slots == 1:
            out.append(tuple(prefix + [left]))
            return
        for e in range(left, -1, -1):
            rec(prefix + [e], left - e, slots - 1)

    rec([], degree, count)
    return out


def multi_indices_upto(count: int, degree: int, start: int = 0) -> list[Multi]:
    return [m for d in range(start, degree + 1) for m in multi_indices(count, d)]


# --- Fps -------------------------------------------------------------------------


class Fps:
    """Truncated series ``sum_J f_J(x) y^J`` with ``|J| <= order``."""

    __slots__ = ("n_smooth", "k_formal", "order", "precision", "_coeffs")

    def __init__(
        self,
        n_smooth: int,
        k_formal: int,
        order: int,
        coeffs: Mapping[Sequence[int], Poly] | None = None,
        precision: int | None = None,
    ):
        if n_smooth < 0 or k_formal < 0 or order < 0:
            raise ShapeMismatch("dimensions and order must be non-negative")
        clean: dict[Multi, Poly] = {}
        for J, p in (coeffs or {}).items():
            J = tuple(int(j) for j in J)
            if len(J) != k_formal or any(j < 0 for j in J):
                raise ShapeMismatch(f"formal index {J} does not fit {k_formal} formal variables")
            if not isinstance(p, Poly):
                p = Poly.constant(n_smooth, p)
            if p.arity != n_smooth:
                raise ArityMismatch(f"coefficient arity {p.arity}, expected {n_smooth}")
            if sum(J) <= order and not p.is_zero():
                clean[J] = clean[J] + p if J in clean else p
        self.n_smooth = n_smooth
        self.k_formal = k_formal
        self.order = order
        self.precision = order if precision is None else min(precision, order)
        self._coeffs = {J: p for J, p in clean.items() if not p.is_zero()}

    @classmethod
    def _raw(cls, n: int, k: int, order: int, coeffs: dict, precision: int) -> "Fps":
        obj = object.__new__(cls)
        obj.n_smooth, obj.k_formal, obj.order, obj.precision = n, k, order, precision
        obj._coeffs = coeffs
        return obj

    # constructors

    @classmethod
    def zero(cls, n: int, k: int, order: int = DEFAULT_ORDER) -> "Fps":
        return cls._raw(n, k, order, {}, order)

    @classmethod
    def constant(cls, n: int, k: int, value, order: int = DEFAULT_ORDER) -> "Fps":
        p = value if isinstance(value, Poly) else Poly.constant(n, value)
        return cls(n, k, order, {(0,) * k: p})

    @classmethod
    def smooth_var(cls, n: int, k: int, index: int, order: int = DEFAULT_ORDER) -> "Fps":
        return cls._raw(n, k, order, {(0,) * k: Poly.var(n, index)}, order)

    @classmethod
    def formal_var(cls, n: int, k: int, index: int, order: int = DEFAULT_ORDER) -> "Fps":
        if not 0 <= index < k:
            raise IndexOutOfRange(f"formal index {index} outside {k} formal variables")
        J = [0] * k
        J[index] = 1
        coeffs = {tuple(J): Poly.constant(n, 1)} if order >= 1 else {}
        return cls._raw(n, k, order, coeffs, order)

    # accessors

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_smooth, self.k_formal)

    @property
    def coeffs(self) -> Mapping[Multi, Poly]:
        return dict(self._coeffs)

    def coeff(self, J: Sequence[int]) -> Poly:
        return self._coeffs.get(tuple(J), Poly.zero(self.n_smooth))

    def sorted_coeffs(self) -> list[tuple[Multi, Poly]]:
        return sorted(self._coeffs.items(), key=lambda t: grlex_key(t[0]))

    def is_zero(self) -> bool:
        return not self._coeffs

    def reduction(self) -> Poly:
        """The z-constant coefficient (the image in the reduced ring)."""
        return self.coeff((0,) * self.k_formal)

    def linear_coeff(self, j: int) -> Poly:
        J = [0] * self.k_formal
        J[j] = 1
        return self.coeff(J)

    def homogeneous(self, degree: int) -> "Fps":
        coeffs = {J: p for J, p in self._coeffs.items() if sum(J) == degree}
        return Fps._raw(self.n_smooth, self.k_formal, self.order, coeffs, self.precision)

    def truncate(self, order: int) -> "Fps":
        order = min(order, self.order)
        coeffs = {J: p for J, p in self._coeffs.items() if sum(J) <= order}
        return Fps._raw(self.n_smooth, self.k_formal, order, coeffs, min(self.precision, order))

    def with_order(self, order: int) -> "Fps":
        """Same coefficients with a raised nominal order (exact for finite series)."""
        return Fps._raw(self.n_smooth, self.k_formal, order, dict(self._coeffs), order)

    # arithmetic

    def _check(self, other: "Fps") -> None:
        if self.shape != other.shape:
            raise ShapeMismatch(f"series shapes {self.shape} and {other.shape} differ")

    def _coerce(self, other) -> "Fps":
        if isinstance(other, Fps):
            self._check(other)
            return other
        return Fps.constant(self.n_smooth, self.k_formal, other, self.order)

    def __add__(self, other) -> "Fps":
        return fps_add(self, self._coerce(other))

    __radd__ = __add__

    def __neg__(self) -> "Fps":
        coeffs = {J: -p for J, p in self._coeffs.items()}
        return Fps._raw(self.n_smooth, self.k_formal, self.order, coeffs, self.precision)

    def __sub__(self, other) -> "Fps":
        return fps_add(self, -self._coerce(other))

    def __rsub__(self, other) -> "Fps":
        return fps_add(self._coerce(other), -self)

    def __mul__(self, other) -> "Fps":
        if isinstance(other, Fps):
            return fps_mul(self, other)
        if isinstance(other, Poly):
            return fps_mul(self, Fps.constant(self.n_smooth, self.k_formal, other, self.order))
        c = as_rational(other)
        coeffs = {J: p * c for J, p in self._coeffs.items()} if c else {}
        return Fps._raw(self.n_smooth, self.k_formal, self.order, coeffs, self.precision)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Fps":
        result = Fps.constant(self.n_smooth, self.k_formal, 1, self.order)
        for _ in range(power):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Fps):
            return NotImplemented
        if self.shape != other.shape:
            return False
        d = min(self.precision, other.precision)
        a = {J: p for J, p in self._coeffs.items() if sum(J) <= d}
        b = {J: p for J, p in other._coeffs.items() if sum(J) <= d}
        return a == b

    __hash__ = None

    def format(self, smooth_names: Sequence[str] | None = None, formal_names: Sequence[str] | None = None) -> str:
        smooth_names = smooth_names or [f"x{i + 1}" for i in range(self.n_smooth)]
        formal_names = formal_names or [f"y{j + 1}" for j in range(self.k_formal)]
        return format_fps_terms(self, smooth_names, formal_names)

    def __str__(self) -> str:
        return self.format()

    def __repr__(self) -> str:
        return f"Fps(n={self.n_smooth}, k={self.k_formal}, order={self.order}, {self.format()!r})"


def format_fps_terms(f: Fps, smooth_names: Sequence[str], formal_names: Sequence[str]) -> str:
    """Flatten into ``c*x^I*y^J`` terms ordered by formal then smooth grlex."""
    from .exactalg import format_terms

    names = list(smooth_names) + list(formal_names)
    flat = []
    for J, p in f.sorted_coeffs():
        for I, c in p.sorted_terms():
            flat.append((I + J, c))
    return format_terms(flat, names)


def fps_add(f: Fps, g: Fps) -> Fps:
    f._check(g)
    order = min(f.order, g.order)
    out = {J: p for J, p in f._coeffs.items() if sum(J) <= order}
    for J, p in g._coeffs.items():
        if sum(J) > order:
            continue
        s = out[J] + p if J in out else p
        if s.is_zero():
            out.pop(J, None)
        else:
            out[J] = s
    return Fps._raw(f.n_smooth, f.k_formal, order, out, min(f.precision, g.precision, order))


def fps_mul(f: Fps, g: Fps) -> Fps:
    f._check(g)
    order = min(f.order, g.order)
    out: dict[Multi, Poly] = {}
    for J1, p1 in f._coeffs.items():
        d1 = sum(J1)
        for J2, p2 in g._coeffs.items():
            if d1 + sum(J2) > order:
                continue
            J = _multi_sum(J1, J2)
            prod = p1 * p2
            out[J] = out[J] + prod if J in out else prod
    # a low-precision factor only spoils degrees above its precision plus the other's order
    prec = min(order, _mul_precision(f, g), _mul_precision(g, f))
    return Fps._raw(f.n_smooth, f.k_formal, order, {J: p for J, p in out.items() if not p.is_zero()}, prec)


def _mul_precision(f: Fps, g: Fps) -> int:
    if f.precision >= f.order:
        return f.order
    low = fps_formal_order(g)
    return f.precision + (0 if low == INFINITY else int(low))


def fps_diff_smooth(f: Fps, i: int) -> Fps:
    if not 0 <= i < f.n_smooth:
        raise IndexOutOfRange(f"smooth index {i} outside {f.n_smooth} variables")
    coeffs = {J: p.diff(i) for J, p in f._coeffs.items()}
    return Fps._raw(f.n_smooth, f.k_formal, f.order, {J: p for J, p in coeffs.items() if not p.is_zero()}, f.precision)


def fps_diff_formal(f: Fps, j: int) -> Fps:
    """``d/dy_j``; the nominal order is kept and the top degree marked unreliable."""
    if not 0 <= j < f.k_formal:
        raise IndexOutOfRange(f"formal index {j} outside {f.k_formal} variables")
    out = {}
    for J, p in f._coeffs.items():
        e = J[j]
        if e:
            out[J[:j] + (e - 1,) + J[j + 1:]] = p * e
    return Fps._raw(f.n_smooth, f.k_formal, f.order, out, max(min(f.precision, f.order) - 1, 0))


def fps_value(f: Fps, a: Sequence) -> Rational:
    if len(a) != f.n_smooth:
        raise ShapeMismatch(f"point of length {len(a)} for {f.n_smooth} smooth variables")
    return f.reduction()(*a) if f.n_smooth else f.reduction().constant_term()


def fps_formal_order(f: Fps) -> int | float:
    """Least formal degree with a nonzero coefficient; ``math.inf`` for zero."""
    return min((sum(J) for J in f._coeffs), default=INFINITY)


def fps_truncate(f: Fps, order: int) -> Fps:
    return f.truncate(order)


def fps_subst(f: Fps, sx: Sequence[Fps], sy: Sequence[Fps]) -> Fps:
    """Substitute ``x_i -> sx[i]`` and ``y_j -> sy[j]`` into ``f``.

    Every ``sy[j]`` must lie in the formal ideal.  The result order is the
    minimum of ``f.order`` and the argument orders.
    """
    if len(sx) != f.n_smooth or len(sy) != f.k_formal:
        raise ShapeMismatch(
            f"substitution needs {f.n_smooth}+{f.k_formal} arguments, got {len(sx)}+{len(sy)}"
        )
    args = list(sx) + list(sy)
    if not args:
        raise ShapeMismatch("substitution into a series over no variables needs an explicit shape")
    shape = args[0].shape
    for g in args:
        if g.shape != shape:
            raise ShapeMismatch("substitution arguments have different shapes")
    for j, g in enumerate(sy):
        if not g.reduction().is_zero():
            raise FormalOrderViolation(f"argument for y{j + 1} has a nonzero formal-constant part")
    order = min([f.order] + [g.order for g in args])
    precision = min([f.precision] + [g.precision for g in args] + [order])
    n2, k2 = shape
    sx = [g.truncate(order) for g in sx]
    sy = [g.truncate(order) for g in sy]
    one = Fps.constant(n2, k2, 1, order)
    xpow: list[list[Fps]] = [[one] for _ in sx]
    ypow: list[list[Fps]] = [[one] for _ in sy]

    def power(cache: list[Fps], base: Fps, e: int) -> Fps:
        while len(cache) <= e:
            cache.append(cache[-1] * base)
        return cache[e]

    result = Fps.zero(n2, k2, order)
    for J, p in f.sorted_coeffs():
        if sum(J) > order:
            continue
        yterm = one
        for j, e in enumerate(J):
            if e:
                yterm = yterm * power(ypow[j], sy[j], e)
        if yterm.is_zero():
            continue
        value = Fps.zero(n2, k2, order)
        for I, c in p.sorted_terms():
            term = one * c
            for i, e in enumerate(I):
                if e:
                    term = term * power(xpow[i], sx[i], e)
            value = value + term
        result = result + value * yterm
    return Fps._raw(n2, k2, order, result._coeffs, precision)


# --- Jet -------------------------------------------------------------------------

_BITS = 8
_MASK = (1 << _BITS) - 1
MAX_JET_ORDER = _MASK


def pack(exps: Sequence[int]) -> int:
    key = 0
    for i, e in enumerate(exps):
        key |= e << (_BITS * i)
    return key


def unpack(key: int, arity: int) -> Multi:
    return tuple((key >> (_BITS * i)) & _MASK for i in range(arity))


def _unit_key(i: int) -> int:
    return 1 << (_BITS * i)


class Jet:
    """Truncated stalk element: ``sum_I c_I (v - a)^I`` with ``|I| <= order``.

    Stored as homogeneous parts; part ``d`` maps a packed exponent key to
    its coefficient.
    """

    __slots__ = ("arity", "basepoint", "order", "precision", "_parts")

    def __init__(
        self,
        arity: int,
        basepoint: Sequence,
        order: int,
        coeffs: Mapping[Sequence[int], object] | None = None,
        precision: int | None = None,
    ):
        if len(basepoint) != arity:
            raise ShapeMismatch(f"basepoint of length {len(basepoint)} for arity {arity}")
        if not 0 <= order <= MAX_JET_ORDER:
            raise ShapeMismatch(f"jet order must lie in 0..{MAX_JET_ORDER}")
        parts: list[dict[int, Rational]] = [{} for _ in range(order + 1)]
        for exps, c in (coeffs or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != arity or any(e < 0 for e in exps):
                raise ShapeMismatch(f"exponent {exps} does not fit arity {arity}")
            d = sum(exps)
            c = as_rational(c)
            if d <= order and c:
                key = pack(exps)
                v = parts[d].get(key, ZERO) + c
                if v:
                    parts[d][key] = v
                else:
                    parts[d].pop(key, None)
        self.arity = arity
        self.basepoint = as_point(basepoint)
        self.order = order
        self.precision = order if precision is None else min(precision, order)
        self._parts = parts

    @classmethod
    def _raw(cls, arity: int, basepoint: tuple, order: int, parts: list, precision: int | None = None) -> "Jet":
        obj = object.__new__(cls)
        obj.arity = arity
        obj.basepoint = basepoint
        obj.order = order
        obj.precision = order if precision is None else precision
        obj._parts = parts
        return obj

    # constructors

    @classmethod
    def constant(cls, arity: int, basepoint: Sequence, value, order: int) -> "Jet":
        parts = [{} for _ in range(order + 1)]
        c = as_rational(value)
        if c:
            parts[0][0] = c
        return cls._raw(arity, as_point(basepoint), order, parts)

    @classmethod
    def coordinate(cls, arity: int, basepoint: Sequence, index: int, order: int) -> "Jet":
        """The coordinate function ``v_index`` expanded at the basepoint."""
        if not 0 <= index < arity:
            raise IndexOutOfRange(f"coordinate {index} outside arity {arity}")
        bp = as_point(basepoint)
        parts = [{} for _ in range(order + 1)]
        if bp[index]:
            parts[0][0] = bp[index]
        if order >= 1:
            parts[1][_unit_key(index)] = ONE
        return cls._raw(arity, bp, order, parts)

    # accessors

    @property
    def coeffs(self) -> dict[Multi, Rational]:
        return {unpack(k, self.arity): c for part in self._parts for k, c in part.items()}

    def coeff(self, exps: Sequence[int]) -> Rational:
        d = sum(exps)
        if d > self.order:
            return ZERO
        return self._parts[d].get(pack(exps), ZERO)

    def sorted_terms(self) -> list[tuple[Multi, Rational]]:
        return sorted(self.coeffs.items(), key=lambda t: grlex_key(t[0]))

    def homogeneous(self, degree: int) -> dict[Multi, Rational]:
        if degree > self.order:
            return {}
        return {unpack(k, self.arity): c for k, c in self._parts[degree].items()}

    def value(self) -> Rational:
        return self._parts[0].get(0, ZERO)

    def linear(self) -> list[Rational]:
        """Degree-one coefficients, one per variable."""
        if self.order < 1:
            return [ZERO] * self.arity
        part = self._parts[1]
        return [part.get(_unit_key(i), ZERO) for i in range(self.arity)]

    def is_zero(self) -> bool:
        return not any(self._parts)

    def truncate(self, order: int) -> "Jet":
        order = min(order, self.order)
        parts = [dict(p) for p in self._parts[: order + 1]]
        return Jet._raw(self.arity, self.basepoint, order, parts, min(self.precision, order))

    def drop_constant(self) -> "Jet":
        parts = [{}] + [dict(p) for p in self._parts[1:]]
        return Jet._raw(self.arity, self.basepoint, self.order, parts, self.precision)

    def lower(self, start: int) -> "Jet":
        """Only the homogeneous parts of degree ``< start``."""
        parts = [dict(p) if d < start else {} for d, p in enumerate(self._parts)]
        return Jet._raw(self.arity, self.basepoint, self.order, parts, self.precision)

    # arithmetic

    def _check(self, other: "Jet") -> None:
        if self.arity != other.arity:
            raise ShapeMismatch(f"jet arities {self.arity} and {other.arity} differ")
        if self.basepoint != other.basepoint:
            raise BasepointMismatch("jets live at different basepoints")

    def __add__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            other = Jet.constant(self.arity, self.basepoint, other, self.order)
        return jet_add(self, other)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        parts = [{k: -c for k, c in p.items()} for p in self._parts]
        return Jet._raw(self.arity, self.basepoint, self.order, parts, self.precision)

    def __sub__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            other = Jet.constant(self.arity, self.basepoint, other, self.order)
        return jet_add(self, -other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return jet_mul(self, other)
        c = as_rational(other)
        parts = [{k: v * c for k, v in p.items()} if c else {} for p in self._parts]
        return Jet._raw(self.arity, self.basepoint, self.order, parts, self.precision)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Jet":
        result = Jet.constant(self.arity, self.basepoint, 1, self.order)
        for _ in range(power):
            result = jet_mul(result, self)
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Jet):
            return NotImplemented
        if self.arity != other.arity or self.basepoint != other.basepoint:
            return False
        d = min(self.precision, other.precision)
        return self._parts[: d + 1] == other._parts[: d + 1]

    __hash__ = None

    def jet_order(self) -> int | float:
        """Least degree with a nonzero coefficient; ``math.inf`` for the zero jet."""
        return next((d for d, p in enumerate(self._parts) if p), INFINITY)

    def format(self, names: Sequence[str] | None = None) -> str:
        """Render in shifted variables, e.g. ``1 + 2*(u1-1)``."""
        from .exactalg import format_terms

        names = list(names) if names is not None else [f"v{i + 1}" for i in range(self.arity)]
        shifted = []
        for name, a in zip(names, self.basepoint):
            if not a:
                shifted.append(name)
            elif a > 0:
                shifted.append(f"({name} - {a})")
            else:
                shifted.append(f"({name} + {-a})")
        return format_terms(self.sorted_terms(), shifted)

    def __str__(self) -> str:
        return self.format()

    def __repr__(self) -> str:
        return f"Jet(arity={self.arity}, basepoint={[str(a) for a in self.basepoint]}, order={self.order}, {self.format()!r})"


def jet_add(j1: Jet, j2: Jet) -> Jet:
    j1._check(j2)
    order = min(j1.order, j2.order)
    parts = []
    for d in range(order + 1):
        out = dict(j1._parts[d])
        for k, c in j2._parts[d].items():
            v = out.get(k, ZERO) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        parts.append(out)
    return Jet._raw(j1.arity, j1.basepoint, order, parts, min(j1.precision, j2.precision, order))


def _mul_parts(a: list[dict], b: list[dict], order: int) -> list[dict]:
    out: list[dict] = [{} for _ in range(order + 1)]
    for d1 in range(min(order, len(a) - 1) + 1):
        p1 = a[d1]
        if not p1:
            continue
        for d2 in range(min(order - d1, len(b) - 1) + 1):
            p2 = b[d2]
            if not p2:
                continue
            target = out[d1 + d2]
            get = target.get
            for k1, c1 in p1.items():
                for k2, c2 in p2.items():
                    k = k1 + k2
                    target[k] = get(k, ZERO) + c1 * c2
    return [{k: c for k, c in p.items() if c} for p in out]


def jet_mul(j1: Jet, j2: Jet) -> Jet:
    j1._check(j2)
    order = min(j1.order, j2.order)
    prec = order
    if j1.precision < order or j2.precision < order:
        o1, o2 = j1.jet_order(), j2.jet_order()
        prec = min(
            order,
            j1.precision + (0 if o2 == INFINITY else int(o2)),
            j2.precision + (0 if o1 == INFINITY else int(o1)),
        )
    return Jet._raw(j1.arity, j1.basepoint, order, _mul_parts(j1._parts, j2._parts, order), prec)


def jet_subst(f: Jet, args: Sequence[Jet], basepoint: Sequence | None = None, order: int | None = None) -> Jet:
    """Compose: the jet of ``f`` after substituting its variables by ``args``.

    Each argument's constant term must equal the matching coordinate of
    ``f.basepoint``; ``f`` is then expanded in ``arg - a``, which lies in the
    maximal ideal.  ``basepoint`` (and ``order``) are needed only when
    ``f`` has no variables.
    """
    if len(args) != f.arity:
        raise ShapeMismatch(f"{len(args)} arguments for a jet of arity {f.arity}")
    if args:
        arity, bp = args[0].arity, args[0].basepoint
        for g in args:
            args[0]._check(g)
        out_order = min([f.order] + [g.order for g in args])
        prec = min([f.precision] + [g.precision for g in args] + [out_order])
    else:
        if basepoint is None:
            raise ShapeMismatch("a basepoint is required to compose with no arguments")
        bp = as_point(basepoint)
        arity = len(bp)
        out_order = f.order if order is None else min(order, f.order)
        prec = min(f.precision, out_order)
    if order is not None:
        out_order = min(out_order, order)
        prec = min(prec, out_order)
    for i, (g, a) in enumerate(zip(args, f.basepoint)):
        if g.value() != a:
            raise NotLocal(f"argument {i + 1} has value {g.value()} at the basepoint, expected {a}")
    shifted = [[{}] + [p for p in g._parts[1 : out_order + 1]] for g in args]
    # powers of each shifted argument, extended lazily
    pow_cache: list[list[list[dict]]] = [[[{0: ONE}] + [{} for _ in range(out_order)]] for _ in args]

    def power(i: int, e: int) -> list[dict]:
        cache = pow_cache[i]
        while len(cache) <= e:
            cache.append(_mul_parts(cache[-1], shifted[i], out_order))
        return cache[e]

    unit = [{0: ONE}] + [{} for _ in range(out_order)]
    prefix_cache: dict[Multi, list[dict]] = {(): unit}

    def monomial(exps: Multi) -> list[dict]:
        # product of powers, memoized on the exponent prefix
        last = len(exps)
        while last and exps[last - 1] == 0:
            last -= 1
        key = exps[:last]
        hit = prefix_cache.get(key)
        if hit is not None:
            return hit
        head = monomial(key[:-1])
        tail = power(last - 1, key[-1])
        value = tail if head is unit else _mul_parts(head, tail, out_order)
        prefix_cache[key] = value
        return value

    result: list[dict] = [{} for _ in range(out_order + 1)]
    for d in range(min(f.order, out_order) + 1):
        for k, c in f._parts[d].items():
            exps = unpack(k, f.arity)
            mono = monomial(exps)
            for dd in range(d, out_order + 1):
                part = mono[dd]
                if not part:
                    continue
                target = result[dd]
                for mk, mc in part.items():
                    target[mk] = target.get(mk, ZERO) + c * mc
    parts = [{k: v for k, v in p.items() if v} for p in result]
    return Jet._raw(arity, bp, out_order, parts, prec)


def identity_jets(arity: int, basepoint: Sequence, order: int) -> list[Jet]:
    return [Jet.coordinate(arity, basepoint, i, order) for i in range(arity)]


def fps_to_jet(f: Fps, a: Sequence, order: int) -> Jet:
    """Taylor jet of ``f`` at ``(a, 0)`` in the variables ``(x - a, y)``.

    ``order`` may not exceed the precision of ``f``.
    """
    if len(a) != f.n_smooth:
        raise ShapeMismatch(f"point of length {len(a)} for {f.n_smooth} smooth variables")
    if order > f.precision:
        raise ShapeMismatch(f"jet order {order} exceeds the series precision {f.precision}")
    pt = as_point(a)
    arity = f.n_smooth + f.k_formal
    parts: list[dict[int, Rational]] = [{} for _ in range(order + 1)]
    n = f.n_smooth
    for J, p in f._coeffs.items():
        dJ = sum(J)
        if dJ > order:
            continue
        jkey = 0
        for j, e in enumerate(J):
            jkey |= e << (_BITS * (n + j))
        for I, c in poly_shift(p, pt)._terms.items():
            d = dJ + sum(I)
            if d <= order:
                parts[d][pack(I) | jkey] = c
    return Jet._raw(arity, pt + (ZERO,) * f.k_formal, order, parts)


def jets_equal(a: Iterable[Jet], b: Iterable[Jet]) -> bool:
    return all(x == y for x, y in zip(a, b))


def fps_from_poly(p: Poly, n: int, k: int, order: int = DEFAULT_ORDER) -> Fps:
    """Split a polynomial in ``n + k`` variables into smooth and formal parts.

    Terms of formal degree above ``order`` are dropped.
    """
    if p.arity != n + k:
        raise ArityMismatch(f"polynomial arity {p.arity}, expected {n}+{k}")
    grouped: dict[Multi, dict[Multi, Rational]] = {}
    for exps, c in p.terms.items():
        J = exps[n:]
        if sum(J) <= order:
            grouped.setdefault(J, {})[exps[:n]] = c
    return Fps._raw(n, k, order, {J: Poly._raw(n, t) for J, t in grouped.items()}, order)


def fps_to_poly(f: Fps) -> Poly:
    """Flatten into one polynomial over ``n + k`` variables."""
    terms = {}
    for J, p in f._coeffs.items():
        for I, c in p.terms.items():
            terms[I + J] = c
    return Poly._raw(f.n_smooth + f.k_formal, terms)


def jet_drop_vars(j: Jet, variables: Iterable[int]) -> Jet:
    """Remove every monomial that involves one of ``variables`` (restriction to their zero locus)."""
    mask = 0
    for v in variables:
        mask |= _MASK << (_BITS * v)
    parts = [{k: c for k, c in p.items() if not k & mask} for p in j._parts]
    return Jet._raw(j.arity, j.basepoint, j.order, parts, j.precision)


def jet_variables(j: Jet) -> set[int]:
    """Indices of the variables occurring in some monomial."""
    used = 0
    for p in j._parts:
        for k in p:
            used |= k
    return {i for i in range(j.arity) if (used >> (_BITS * i)) & _MASK}


def jet_reindex(j: Jet, arity: int, positions: Sequence[int | None], basepoint: Sequence, order: int | None = None) -> Jet:
    """Rename variable ``i`` to ``positions[i]`` in a jet of arity ``arity``.

    Variables mapped to ``None`` must not occur.  The coefficients are kept
    as they are, so the jet is read in the shifted variables of ``basepoint``.
    """
    order = j.order if order is None else min(order, j.order)
    parts: list[dict[int, Rational]] = [{} for _ in range(order + 1)]
    for d in range(order + 1):
        for k, c in j._parts[d].items():
            key = 0
            for i, e in enumerate(unpack(k, j.arity)):
                if e:
                    if positions[i] is None:
                        raise ShapeMismatch(f"variable {i + 1} has no image under the renaming")
                    key += e << (_BITS * positions[i])
            parts[d][key] = parts[d].get(key, ZERO) + c
    parts = [{k: c for k, c in p.items() if c} for p in parts]
    return Jet._raw(arity, as_point(basepoint), order, parts)
