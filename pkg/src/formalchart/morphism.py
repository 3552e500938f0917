"""Morphisms between chart models and their first-order data.

A morphism from the model with ``n'`` smooth and ``k'`` formal variables
(``u``, ``z``) to the model with ``n`` smooth and ``k`` formal variables
(``x``, ``y``) is given by the pullbacks of the target coordinates: ``n``
arbitrary series ``cx`` and ``k`` series ``cy`` that lie in the formal ideal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import IllFormedMorphism, ShapeMismatch
from .exactalg import Poly, Rational, as_point, poly_eval
from .linalg import rank
from .series import DEFAULT_ORDER, Fps, fps_subst, fps_value


def source_names(n: int, k: int) -> list[str]:
    return [f"u{i + 1}" for i in range(n)] + [f"z{j + 1}" for j in range(k)]


def target_names(n: int, k: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)] + [f"y{j + 1}" for j in range(k)]


@dataclass(frozen=True, eq=False)
class Morphism:
    """Coordinate pullbacks ``cx`` (length n) and ``cy`` (length k) over (u, z)."""

    src: tuple[int, int]
    tgt: tuple[int, int]
    cx: tuple[Fps, ...]
    cy: tuple[Fps, ...]
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        object.__setattr__(self, "src", tuple(self.src))
        object.__setattr__(self, "tgt", tuple(self.tgt))
        object.__setattr__(self, "cx", tuple(c.truncate(self.order) for c in self.cx))
        object.__setattr__(self, "cy", tuple(c.truncate(self.order) for c in self.cy))
        validate(self)

    @classmethod
    def identity(cls, n: int, k: int, order: int = DEFAULT_ORDER) -> "Morphism":
        cx = tuple(Fps.smooth_var(n, k, i, order) for i in range(n))
        cy = tuple(Fps.formal_var(n, k, j, order) for j in range(k))
        return cls((n, k), (n, k), cx, cy, order)

    @property
    def components(self) -> tuple[Fps, ...]:
        return self.cx + self.cy

    def __eq__(self, other) -> bool:
        if not isinstance(other, Morphism):
            return NotImplemented
        return (
            self.src == other.src
            and self.tgt == other.tgt
            and self.cx == other.cx
            and self.cy == other.cy
        )

    __hash__ = None

    def format_lines(self) -> list[str]:
        names = source_names(*self.src)
        sn, fn = names[: self.src[0]], names[self.src[0]:]
        lines = [f"x{i + 1} = {c.format(sn, fn)}" for i, c in enumerate(self.cx)]
        lines += [f"y{j + 1} = {c.format(sn, fn)}" for j, c in enumerate(self.cy)]
        return lines


def validate(m: Morphism) -> None:
    """Check component counts, shapes, orders and the formal-ideal condition."""
    n2, k2 = m.src
    n, k = m.tgt
    if min(n2, k2, n, k) < 0:
        raise ShapeMismatch("dimensions must be non-negative")
    if len(m.cx) != n or len(m.cy) != k:
        raise ShapeMismatch(f"expected {n} smooth and {k} formal components")
    for name, c in zip(target_names(n, k), m.components):
        if not isinstance(c, Fps):
            raise IllFormedMorphism(name, "component is not a series")
        if c.shape != (n2, k2):
            raise IllFormedMorphism(name, f"component has shape {c.shape}, expected {(n2, k2)}")
        if c.order < m.order:
            raise IllFormedMorphism(name, f"component order {c.order} below the morphism order {m.order}")
    for j, c in enumerate(m.cy):
        if not c.reduction().is_zero():
            raise IllFormedMorphism(f"y{j + 1}", "formal component has a nonzero part free of formal variables")


def pullback(m: Morphism, f: Fps) -> Fps:
    """``phi^*(f)``: substitute the coordinate pullbacks into ``f``."""
    if f.shape != m.tgt:
        raise ShapeMismatch(f"series of shape {f.shape} cannot be pulled back along a map into {m.tgt}")
    if not m.components:
        # target is a point: only the constant survives
        return Fps.constant(*m.src, f.reduction().constant_term(), min(f.order, m.order))
    return fps_subst(f, m.cx, m.cy)


def compose(outer: Morphism, inner: Morphism) -> Morphism:
    """``outer o inner``; the result order is the smaller of the two orders."""
    if inner.tgt != outer.src:
        raise ShapeMismatch(f"cannot compose: inner target {inner.tgt} vs outer source {outer.src}")
    order = min(outer.order, inner.order)
    comps = [pullback(inner, c).truncate(order) for c in outer.components]
    n = outer.tgt[0]
    return Morphism(inner.src, outer.tgt, tuple(comps[:n]), tuple(comps[n:]), order)


def _check_point(m: Morphism, b: Sequence) -> tuple[Rational, ...]:
    if len(b) != m.src[0]:
        raise ShapeMismatch(f"point of length {len(b)} for {m.src[0]} smooth source variables")
    return as_point(b)


def underlying_point(m: Morphism, b: Sequence) -> tuple[Rational, ...]:
    b = _check_point(m, b)
    return tuple(fps_value(c, b) for c in m.cx)


PolyMatrix = tuple[tuple[Poly, ...], ...]


@dataclass(frozen=True)
class JacobianBlocks:
    """Blocks of ``J = [[F, G], [0, H]]`` with entries in the source smooth variables."""

    F: PolyMatrix
    G: PolyMatrix
    H: PolyMatrix
    arity: int
    dims: tuple[int, int, int, int]  # (n, k, n', k')

    def full(self) -> PolyMatrix:
        n, k, n2, k2 = self.dims
        zero = Poly.zero(self.arity)
        top = tuple(self.F[i] + self.G[i] for i in range(n))
        bottom = tuple((zero,) * n2 + self.H[j] for j in range(k))
        return top + bottom

    def evaluate(self, block: PolyMatrix, b: Sequence) -> list[list[Rational]]:
        return [[poly_eval(p, b) for p in row] for row in block]


def jacobian(m: Morphism) -> JacobianBlocks:
    n2, k2 = m.src
    n, k = m.tgt
    F = tuple(tuple(c.reduction().diff(i) for i in range(n2)) for c in m.cx)
    G = tuple(tuple(c.linear_coeff(j) for j in range(k2)) for c in m.cx)
    H = tuple(tuple(c.linear_coeff(j) for j in range(k2)) for c in m.cy)
    return JacobianBlocks(F, G, H, n2, (n, k, n2, k2))


@dataclass(frozen=True)
class RankTriple:
    rank_total: int
    rank_reduced: int
    rank_formal: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.rank_total, self.rank_reduced, self.rank_formal)

    @property
    def r1(self) -> int:
        return self.rank_reduced

    @property
    def r2(self) -> int:
        return self.rank_total - self.rank_reduced - self.rank_formal

    @property
    def r3(self) -> int:
        return self.rank_formal


@dataclass(frozen=True)
class DifferentialMatrix:
    """``J`` at a point, rows indexed by target and columns by source coordinates."""

    entries: tuple[tuple[Rational, ...], ...]
    source_basis: tuple[str, ...]
    target_basis: tuple[str, ...]

    def rows(self) -> list[list[Rational]]:
        return [list(r) for r in self.entries]


def differential_at(m: Morphism, b: Sequence) -> DifferentialMatrix:
    b = _check_point(m, b)
    J = jacobian(m)
    entries = tuple(tuple(poly_eval(p, b) for p in row) for row in J.full())
    return DifferentialMatrix(
        entries,
        tuple(f"d/d{v}" for v in source_names(*m.src)),
        tuple(f"d/d{v}" for v in target_names(*m.tgt)),
    )


def rank_at(m: Morphism, b: Sequence) -> RankTriple:
    b = _check_point(m, b)
    J = jacobian(m)
    triple = RankTriple(
        rank(J.evaluate(J.full(), b)),
        rank(J.evaluate(J.F, b)),
        rank(J.evaluate(J.H, b)),
    )
    # block-triangular shape forces this inequality
    assert triple.rank_total >= triple.rank_reduced + triple.rank_formal
    return triple


@dataclass(frozen=True)
class Classification:
    immersion: bool
    submersion: bool
    regular: bool
    bijective_differential: bool
    triple: RankTriple = field(compare=False)


def classify_at(m: Morphism, b: Sequence) -> Classification:
    t = rank_at(m, b)
    n2, k2 = m.src
    n, k = m.tgt
    imm = t.rank_total == n2 + k2
    sub = t.rank_total == n + k
    return Classification(imm, sub, t.rank_total == t.rank_reduced + t.rank_formal, imm and sub, t)
