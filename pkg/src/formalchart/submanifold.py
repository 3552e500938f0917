"""Slices, their pullback by Taylor expansion, Borel preimages and level sets.

The slice with parameters ``(n, n', r, k, k')`` embeds the model with ``n'``
smooth and ``k'`` formal variables into the one with ``n`` and ``k``:
``x_{<=n'} -> u``, the middle smooth coordinates go to 0, the last ``r``
smooth coordinates become the formal ``z_1..z_r`` and the first ``k' - r``
formal coordinates become ``z_{r+1}..z_{k'}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

from .errors import ConstraintViolation, FiberMismatch, ShapeMismatch
from .exactalg import ZERO, Poly, Rational, as_point, poly_lift
from .localforms import (
    JetMap,
    jet_invert,
    jetmap_compose,
    morphism_to_jetmap,
    standardize,
)
from .morphism import Morphism, _check_point, underlying_point
from .series import DEFAULT_ORDER, Fps, Jet, multi_indices_upto


@dataclass(frozen=True)
class SliceSpec:
    n: int
    n_src: int
    r: int
    k: int
    k_src: int

    def __post_init__(self):
        n, n2, r, k, k2 = self.n, self.n_src, self.r, self.k, self.k_src
        if min(n, n2, r, k, k2) < 0:
            raise ConstraintViolation("slice parameters must be non-negative")
        if r > n - n2:
            raise ConstraintViolation(f"r={r} exceeds n-n'={n - n2}")
        if r > k2:
            raise ConstraintViolation(f"r={r} exceeds k'={k2}")
        if k2 - r > k:
            raise ConstraintViolation(f"k'-r={k2 - r} exceeds k={k}")

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.n_src + self.k_src, self.n_src, self.k_src - self.r)

    @property
    def tail(self) -> range:
        """Smooth target coordinates that turn formal."""
        return range(self.n - self.r, self.n)


def make_slice(spec: SliceSpec, order: int = DEFAULT_ORDER) -> Morphism:
    n, n2, r, k, k2 = spec.n, spec.n_src, spec.r, spec.k, spec.k_src
    cx = []
    for i in range(n):
        if i < n2:
            cx.append(Fps.smooth_var(n2, k2, i, order))
        elif i >= n - r:
            cx.append(Fps.formal_var(n2, k2, i - (n - r), order))
        else:
            cx.append(Fps.zero(n2, k2, order))
    cy = [Fps.formal_var(n2, k2, r + j, order) if j < k2 - r else Fps.zero(n2, k2, order) for j in range(k)]
    return Morphism((n2, k2), (n, k), tuple(cx), tuple(cy), order)


def _restrict(p: Poly, spec: SliceSpec) -> Poly:
    """Set every smooth coordinate beyond ``n'`` to zero and rename the rest to ``u``."""
    terms = {}
    for exps, c in p.terms.items():
        if not any(exps[spec.n_src:]):
            terms[exps[: spec.n_src]] = c
    return Poly(spec.n_src, terms)


def slice_pullback(spec: SliceSpec, f: Fps) -> Fps:
    """Pull back along the slice by Taylor expansion in the sliced-off directions.

    The coefficient of ``z^(I, J)`` is ``(d^I f_J / I!)`` restricted to the
    slice, where ``I`` runs over the last ``r`` smooth coordinates and ``J``
    over the formal coordinates that survive.
    """
    if f.shape != (spec.n, spec.k):
        raise ShapeMismatch(f"series of shape {f.shape} for a slice of ({spec.n}, {spec.k})")
    n2, k2, r = spec.n_src, spec.k_src, spec.r
    keep = k2 - r
    order = f.order
    coeffs: dict[tuple, Poly] = {}
    for J, p in f.coeffs.items():
        if any(J[keep:]):
            continue
        dJ = sum(J[:keep])
        for I in multi_indices_upto(r, order - dJ):
            q = p
            for t, e in zip(spec.tail, I):
                for _ in range(e):
                    q = q.diff(t)
                if q.is_zero():
                    break
            if q.is_zero():
                continue
            scale = 1
            for e in I:
                scale *= factorial(e)
            value = _restrict(q, spec) * Rational(1, scale)
            if value.is_zero():
                continue
            key = tuple(I) + tuple(J[:keep])
            coeffs[key] = coeffs[key] + value if key in coeffs else value
    return Fps(n2, k2, order, coeffs, f.precision)


def borel_preimage(spec: SliceSpec, g: Fps, order: int | None = None) -> Fps:
    """A target series whose slice pullback is ``g``.

    Each ``z^(I, J)`` coefficient becomes the same polynomial times
    ``x_tail^I * y^J``; no summation is needed for polynomial coefficients.
    """
    if g.shape != (spec.n_src, spec.k_src):
        raise ShapeMismatch(f"series of shape {g.shape} for a slice source ({spec.n_src}, {spec.k_src})")
    order = g.order if order is None else order
    if g.order < order:
        raise ShapeMismatch(f"input known only to order {g.order}, asked for {order}")
    n, k, r = spec.n, spec.k, spec.r
    positions = list(range(spec.n_src))
    coeffs: dict[tuple, Poly] = {}
    for JJ, p in g.coeffs.items():
        if sum(JJ) > order:
            continue
        I, J = JJ[:r], JJ[r:]
        mono = [0] * n
        for t, e in zip(spec.tail, I):
            mono[t] = e
        lifted = poly_lift(p, n, positions) * Poly(n, {tuple(mono): 1})
        key = tuple(J) + (0,) * (k - len(J))
        coeffs[key] = coeffs[key] + lifted if key in coeffs else lifted
    return Fps(n, k, order, coeffs)


def ideal_membership(spec: SliceSpec, f: Fps) -> bool:
    """Whether ``f`` lies in the kernel of the slice pullback, up to its order."""
    return slice_pullback(spec, f).is_zero()


@dataclass(frozen=True)
class LevelSetResult:
    fiber_dims: tuple[int, int]
    embedding: JetMap
    ideal_generators: tuple[Jet, ...]
    triple: tuple[int, int, int]

    @property
    def n1(self) -> int:
        return self.fiber_dims[0]

    @property
    def k1(self) -> int:
        return self.fiber_dims[1]


def level_set(m: Morphism, a: Sequence, b: Sequence, order: int | None = None, certificate_order: int | None = None) -> LevelSetResult:
    """Local model of the fiber over ``a`` through the fiber point ``b``.

    After standardizing, the fiber is the slice where the first ``r1``
    smooth and ``r2 + r3`` formal source coordinates vanish; the embedding
    is that slice pulled back through the source chart change.
    """
    b = _check_point(m, b)
    a = as_point(a)
    order = m.order if order is None else order
    if underlying_point(m, b) != a:
        raise FiberMismatch(f"the point maps to {[str(v) for v in underlying_point(m, b)]}, not {[str(v) for v in a]}")
    std = standardize(m, b, order, certificate_order)
    r1, r2, r3 = std.triple
    n2, k2 = m.src
    n1, k1 = n2 - r1, k2 - r2 - r3
    fdim = n1 + k1
    origin = (ZERO,) * fdim
    zero = Jet.constant(fdim, origin, 0, order)
    comps = [zero] * r1 + [Jet.coordinate(fdim, origin, i, order) for i in range(n1)]
    comps += [zero] * (r2 + r3) + [Jet.coordinate(fdim, origin, n1 + j, order) for j in range(k1)]
    zeta = JetMap((n1, k1), (n2, k2), tuple(comps), order, origin)
    embedding = jetmap_compose(jet_invert(std.source_chart_change), zeta)
    phi = morphism_to_jetmap(m, b, order)
    gens = tuple(c.drop_constant() for c in phi.components)
    return LevelSetResult((n1, k1), embedding, gens, std.triple)
