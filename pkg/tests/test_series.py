from __future__ import annotations

import math
import random

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from formalchart.errors import BasepointMismatch, FormalOrderViolation, IndexOutOfRange, NotLocal, ShapeMismatch
from formalchart.exactalg import Poly, Rational
from formalchart.series import (
    Fps,
    Jet,
    fps_diff_formal,
    fps_diff_smooth,
    fps_formal_order,
    fps_from_poly,
    fps_subst,
    fps_to_jet,
    fps_to_poly,
    fps_value,
    jet_mul,
    jet_subst,
)

from randmorph import rand_fps, rand_point, rand_poly

X = lambda n, k, i, D=8: Fps.smooth_var(n, k, i, D)  # noqa: E731
Y = lambda n, k, j, D=8: Fps.formal_var(n, k, j, D)  # noqa: E731


def seeds():
    return st.integers(0, 10**6)


class TestFpsArithmetic:
    def test_product_truncates(self):
        y = Y(0, 1, 0, 2)
        assert (1 + y) * (1 - y) == 1 - y * y
        assert ((1 + y) * (1 - y)).order == 2

    def test_unit(self):
        f = X(1, 1, 0) * Y(1, 1, 0) + 3
        assert f * 1 == f

    def test_square_at_order_one(self):
        f = X(1, 1, 0, 1) + Y(1, 1, 0, 1)
        assert f * f == X(1, 1, 0, 1) ** 2 + 2 * X(1, 1, 0, 1) * Y(1, 1, 0, 1)
        assert (f * f).coeff((2,)).is_zero()

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            X(1, 1, 0) + X(2, 1, 0)

    def test_result_order_is_minimum(self):
        assert (Y(0, 1, 0, 3) + Y(0, 1, 0, 5)).order == 3


class TestDerivatives:
    def test_formal(self):
        f = X(1, 1, 0) * Y(1, 1, 0) ** 2
        assert fps_diff_formal(f, 0) == 2 * X(1, 1, 0) * Y(1, 1, 0)

    def test_smooth_of_formal_var(self):
        assert fps_diff_smooth(Y(1, 1, 0), 0).is_zero()

    def test_mixed(self):
        f = Y(0, 2, 0) * Y(0, 2, 1)
        assert fps_diff_formal(fps_diff_formal(f, 0), 1) == Fps.constant(0, 2, 1)

    def test_formal_derivative_marks_top_degree(self):
        f = Y(0, 1, 0, 3) ** 3
        d = fps_diff_formal(f, 0)
        assert d.order == 3 and d.precision == 2

    def test_index_errors(self):
        with pytest.raises(IndexOutOfRange):
            fps_diff_formal(Y(0, 1, 0), 1)
        with pytest.raises(IndexOutOfRange):
            fps_diff_smooth(Y(0, 1, 0), 0)


class TestValueAndOrder:
    def test_value(self):
        assert fps_value(X(1, 1, 0) + Y(1, 1, 0), [2]) == 2
        assert fps_value(Y(1, 1, 0) ** 2, [5]) == 0
        f = X(1, 1, 0) ** 2 + X(1, 1, 0) * Y(1, 1, 0) + Y(1, 1, 0) ** 3
        assert fps_value(f, [3]) == 9

    def test_formal_order(self):
        y1, y2 = Y(0, 2, 0), Y(0, 2, 1)
        assert fps_formal_order(y1 * y2 + y1**3) == 2
        assert fps_formal_order(1 + y1) == 0
        assert fps_formal_order(Fps.zero(0, 2)) == math.inf

    @given(seeds())
    @settings(max_examples=40, deadline=None)
    def test_order_filtration_is_multiplicative(self, seed):
        rng = random.Random(seed)
        f = rand_fps(rng, 1, 2, 8, 3, 3, min_formal=rng.randint(0, 2))
        g = rand_fps(rng, 1, 2, 8, 3, 3, min_formal=rng.randint(0, 2))
        assert fps_formal_order(f * g) >= fps_formal_order(f) + fps_formal_order(g)


class TestToJet:
    def test_examples(self):
        j = fps_to_jet(X(1, 0, 0) ** 2, [1], 2)
        assert j.coeffs == {(0,): 1, (1,): 2, (2,): 1}
        j = fps_to_jet(Y(1, 1, 0), [Rational(7, 3)], 4)
        assert j.coeffs == {(0, 1): 1}
        j = fps_to_jet(X(1, 1, 0) * Y(1, 1, 0), [2], 2)
        assert j.coeffs == {(0, 1): 2, (1, 1): 1}

    def test_precision_guard(self):
        with pytest.raises(ShapeMismatch):
            fps_to_jet(Y(0, 1, 0, 2), [], 3)

    @given(seeds())
    @settings(max_examples=30, deadline=None)
    def test_ring_homomorphism(self, seed):
        rng = random.Random(seed)
        f, g = rand_fps(rng, 2, 1, 6), rand_fps(rng, 2, 1, 6)
        a = rand_point(rng, 2)
        assert fps_to_jet(f * g, a, 6) == jet_mul(fps_to_jet(f, a, 6), fps_to_jet(g, a, 6))
        assert fps_to_jet(f, a, 6).value() == fps_value(f, a)

    @given(seeds())
    @settings(max_examples=20, deadline=None)
    def test_taylor_oracle(self, seed):
        # re-expanding the jet in v - a gives back the polynomial when nothing is truncated
        rng = random.Random(seed)
        p = rand_poly(rng, 2, 1, 3, 4)
        f = fps_from_poly(p, 2, 1, 8)
        a = rand_point(rng, 2)
        j = fps_to_jet(f, a, 8)
        syms = sympy.symbols("x1 x2 y1")
        shift = [s - sympy.Rational(int(c.numerator), int(c.denominator)) for s, c in zip(syms, a + (Rational(0),))]
        expr = sum(
            sympy.Rational(int(c.numerator), int(c.denominator)) * sympy.Mul(*[s**e for s, e in zip(shift, exps)])
            for exps, c in j.coeffs.items()
        )
        target = sum(
            sympy.Rational(int(c.numerator), int(c.denominator)) * sympy.Mul(*[s**e for s, e in zip(syms, exps)])
            for exps, c in p.terms.items()
        )
        assert sympy.expand(expr - target) == 0


class TestSubst:
    def test_smooth_substitution(self):
        u, z = X(1, 1, 0, 2), Y(1, 1, 0, 2)
        f = Fps.smooth_var(1, 0, 0, 2) ** 2
        assert fps_subst(f, [u + z], []) == u * u + 2 * u * z + z * z

    def test_identity(self):
        f = X(2, 1, 0) * Y(2, 1, 0) ** 2 + X(2, 1, 1) ** 3
        assert fps_subst(f, [X(2, 1, 0), X(2, 1, 1)], [Y(2, 1, 0)]) == f

    def test_square_of_formal(self):
        z = Y(0, 1, 0, 3)
        f = Y(0, 1, 0, 3) ** 2
        assert fps_subst(f, [], [z + z * z]) == z**2 + 2 * z**3

    def test_formal_arguments_must_lie_in_ideal(self):
        z = Y(0, 1, 0, 3)
        with pytest.raises(FormalOrderViolation):
            fps_subst(Y(0, 1, 0, 3), [], [1 + z])

    @given(seeds())
    @settings(max_examples=25, deadline=None)
    def test_ring_homomorphism(self, seed):
        rng = random.Random(seed)
        f, g = rand_fps(rng, 1, 2, 5, 3, 3), rand_fps(rng, 1, 2, 5, 3, 3)
        sx = [rand_fps(rng, 2, 1, 5, 2, 3)]
        sy = [rand_fps(rng, 2, 1, 5, 2, 3, min_formal=1) for _ in range(2)]
        assert fps_subst(f * g, sx, sy) == fps_subst(f, sx, sy) * fps_subst(g, sx, sy)
        assert fps_subst(f + g, sx, sy) == fps_subst(f, sx, sy) + fps_subst(g, sx, sy)


class TestJets:
    def test_product(self):
        t = Jet.coordinate(1, [0], 0, 2)
        assert (1 + t) * (1 - t) == 1 - t * t

    def test_identity_substitution(self):
        a = [Rational(1, 2), Rational(-1)]
        f = fps_to_jet(fps_from_poly(rand_poly(random.Random(3), 2, 0, 3, 5), 2, 0), a, 5)
        ids = [Jet.coordinate(2, a, i, 5) for i in range(2)]
        assert jet_subst(f, ids) == f

    def test_square_of_series(self):
        t = Jet.coordinate(1, [0], 0, 4)
        assert jet_subst(t * t, [t + t * t]) == t**2 + 2 * t**3 + t**4

    def test_local_condition(self):
        t = Jet.coordinate(1, [0], 0, 4)
        with pytest.raises(NotLocal):
            jet_subst(t, [t + 1])

    def test_basepoint_mismatch(self):
        with pytest.raises(BasepointMismatch):
            jet_mul(Jet.coordinate(1, [0], 0, 2), Jet.coordinate(1, [1], 0, 2))

    def test_format_shifted(self):
        j = fps_to_jet(X(1, 0, 0) ** 2, [1], 2)
        assert j.format(["u1"]) == "1 + 2*(u1 - 1) + (u1 - 1)^2"


def test_poly_roundtrip():
    p = rand_poly(random.Random(5), 2, 2, 3, 6)
    assert fps_to_poly(fps_from_poly(p, 2, 2, 8)) == p
