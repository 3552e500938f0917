from __future__ import annotations

import random

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from formalchart.errors import IllFormedMorphism, ShapeMismatch
from formalchart.exactalg import Rational
from formalchart.linalg import matmul
from formalchart.morphism import (
    Morphism,
    classify_at,
    compose,
    differential_at,
    jacobian,
    pullback,
    rank_at,
    underlying_point,
)
from formalchart.series import Fps, fps_to_poly

from randmorph import rand_dims, rand_fps, rand_morphism, rand_point
from test_exactalg import to_sympy


def u(n, k, i, D=6):
    return Fps.smooth_var(n, k, i, D)


def z(n, k, j, D=6):
    return Fps.formal_var(n, k, j, D)


def sym_rational(c):
    return sympy.Rational(int(c.numerator), int(c.denominator))


def sympy_jacobian(m: Morphism, b):
    n2, k2 = m.src
    syms = sympy.symbols(" ".join([f"u{i}" for i in range(n2)] + [f"z{j}" for j in range(k2)] + ["pad"]))[: n2 + k2]
    comps = sympy.Matrix([to_sympy(fps_to_poly(c), syms) for c in m.components])
    at = {s: sym_rational(v) for s, v in zip(syms, list(b) + [Rational(0)] * k2)}
    return comps.jacobian(sympy.Matrix(syms)).subs(at) if syms else sympy.zeros(len(comps), 0)


class TestConstruction:
    def test_formal_component_must_vanish(self):
        with pytest.raises(IllFormedMorphism):
            Morphism((1, 1), (0, 1), (), (u(1, 1, 0),), 6)

    def test_shape_checks(self):
        with pytest.raises(ShapeMismatch):
            Morphism((1, 1), (1, 0), (), (), 6)
        with pytest.raises(IllFormedMorphism):
            Morphism((1, 1), (1, 0), (u(2, 0, 0),), (), 6)

    def test_low_component_order(self):
        with pytest.raises(IllFormedMorphism):
            Morphism((0, 1), (0, 1), (), (z(0, 1, 0, 3),), 6)

    def test_identity_is_neutral(self):
        m = rand_morphism(random.Random(1), (2, 1), (1, 2), 5)
        assert compose(m, Morphism.identity(2, 1, 5)) == m
        assert compose(Morphism.identity(1, 2, 5), m) == m


class TestJacobian:
    def test_blocks(self):
        m = Morphism((1, 1), (1, 1), (u(1, 1, 0) ** 2 + u(1, 1, 0) * z(1, 1, 0),), (z(1, 1, 0) * (1 + u(1, 1, 0)),), 6)
        J = differential_at(m, [2]).rows()
        assert J == [[4, 2], [0, 3]]
        assert rank_at(m, [2]).as_tuple() == (2, 1, 1)

    def test_lower_left_block_vanishes(self):
        m = rand_morphism(random.Random(7), (2, 2), (2, 2), 4)
        J = differential_at(m, [1, 1]).rows()
        assert all(J[2 + j][i] == 0 for j in range(2) for i in range(2))

    @given(st.integers(0, 10**6))
    @settings(max_examples=30, deadline=None)
    def test_matches_sympy(self, seed):
        rng = random.Random(seed)
        m = rand_morphism(rng, rand_dims(rng), rand_dims(rng), 4)
        b = rand_point(rng, m.src[0])
        assert sympy.Matrix(differential_at(m, b).rows()) == sympy_jacobian(m, b) or not m.components

    @given(st.integers(0, 10**6))
    @settings(max_examples=30, deadline=None)
    def test_rank_inequality(self, seed):
        rng = random.Random(seed)
        m = rand_morphism(rng, rand_dims(rng), rand_dims(rng), 3)
        t = rank_at(m, rand_point(rng, m.src[0]))
        assert t.rank_total >= t.rank_reduced + t.rank_formal
        assert t.r2 >= 0


class TestCompose:
    def test_pullback_example(self):
        m = Morphism((1, 0), (1, 0), (u(1, 0, 0) + 1,), (), 4)
        assert pullback(m, u(1, 0, 0, 4) ** 2) == (u(1, 0, 0, 4) + 1) ** 2

    @given(st.integers(0, 10**6))
    @settings(max_examples=25, deadline=None)
    def test_chain_rule(self, seed):
        rng = random.Random(seed)
        a, b_, c = rand_dims(rng), rand_dims(rng), rand_dims(rng)
        inner = rand_morphism(rng, a, b_, 4)
        outer = rand_morphism(rng, b_, c, 4)
        p = rand_point(rng, a[0])
        lhs = differential_at(compose(outer, inner), p).rows()
        rhs = matmul(differential_at(outer, underlying_point(inner, p)).rows(), differential_at(inner, p).rows())
        assert lhs == rhs

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_associative(self, seed):
        rng = random.Random(seed)
        dims = [rand_dims(rng, 2) for _ in range(4)]
        f, g, h = (rand_morphism(rng, dims[i], dims[i + 1], 3) for i in range(3))
        assert compose(h, compose(g, f)) == compose(compose(h, g), f)

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_underlying_point_composes(self, seed):
        rng = random.Random(seed)
        dims = [rand_dims(rng, 2) for _ in range(3)]
        f, g = rand_morphism(rng, dims[0], dims[1], 3), rand_morphism(rng, dims[1], dims[2], 3)
        p = rand_point(rng, dims[0][0])
        assert underlying_point(compose(g, f), p) == underlying_point(g, underlying_point(f, p))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            compose(Morphism.identity(1, 1), Morphism.identity(2, 0))


class TestClassify:
    def test_bijective_with_smaller_reduced_rank(self):
        # x1 = u1, x2 = z1, y1 = z2: bijective but the reduced map drops a dimension
        n2, k2 = 1, 2
        m = Morphism((n2, k2), (2, 1), (u(n2, k2, 0), z(n2, k2, 0)), (z(n2, k2, 1),), 6)
        c = classify_at(m, [0])
        assert c.bijective_differential and c.regular is False
        assert c.triple.as_tuple() == (3, 1, 1)

    def test_point_morphism(self):
        m = Morphism((0, 0), (1, 0), (Fps.constant(0, 0, 3, 4),), (), 4)
        c = classify_at(m, [])
        assert c.immersion and not c.submersion
        assert underlying_point(m, []) == (3,)

    def test_wrong_point_length(self):
        with pytest.raises(ShapeMismatch):
            rank_at(Morphism.identity(2, 0), [1])

    def test_jacobian_arity(self):
        J = jacobian(Morphism.identity(2, 1))
        assert J.arity == 2 and J.dims == (2, 1, 2, 1)
