from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formalchart.errors import (
    GradeMismatch,
    LimitExceeded,
    NotConstantRank,
    NotRegularSubmersion,
    NotStandardizable,
    OrderTooSmall,
    SingularDifferential,
)
from formalchart.exactalg import Rational
from formalchart.localforms import (
    constant_rank_check,
    graded_component_map,
    identity_jetmap,
    jet_invert,
    jetmap_compose,
    kernel_surjectivity_certificate,
    local_section,
    morphism_to_jetmap,
    normal_form_defects,
    rank_normal_form,
    stalk_surjective_mod,
    standard_form,
    standardize,
)
from formalchart.morphism import Morphism, classify_at, compose, pullback
from formalchart.series import Fps, Jet

from randmorph import rand_graded, rand_invertible_jetmap, rand_morphism, rand_point, rand_standardizable


def U(n, k, i, D=6):
    return Fps.smooth_var(n, k, i, D)


def Z(n, k, j, D=6):
    return Fps.formal_var(n, k, j, D)


def morph(src, tgt, cx, cy, D=6):
    return Morphism(src, tgt, tuple(cx), tuple(cy), D)


def is_identity(j):
    return j == identity_jetmap(*j.src, j.source_basepoint[: j.src[0]], j.order)


class TestInverse:
    def test_catalan_coefficients(self):
        # the inverse of w + w^2 has coefficients (-1)^(s-1) C_{s-1}
        w = Jet.coordinate(1, [0], 0, 5)
        j = identity_jetmap(0, 1, [], 5)
        j = type(j)((0, 1), (0, 1), (w + w * w,), 5, (0,))
        inv = jet_invert(j)
        assert inv.components[0] == w - w**2 + 2 * w**3 - 5 * w**4 + 14 * w**5

    def test_translated_point(self):
        m = morph((1, 1), (1, 1), [U(1, 1, 0) + Z(1, 1, 0) ** 2], [Z(1, 1, 0) + Z(1, 1, 0) ** 3])
        phi = morphism_to_jetmap(m, [Rational(3, 2)], 6)
        inv = jet_invert(phi)
        assert inv.source_basepoint == (Rational(3, 2), 0)
        assert is_identity(jetmap_compose(inv, phi)) and is_identity(jetmap_compose(phi, inv))

    def test_singular(self):
        m = morph((1, 0), (1, 0), [U(1, 0, 0) ** 2], [])
        with pytest.raises(SingularDifferential):
            jet_invert(morphism_to_jetmap(m, [0], 4))

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_roundtrip(self, seed):
        rng = random.Random(seed)
        n = rng.randint(0, 2)
        k = rng.randint(0 if n else 1, 2)
        j = rand_invertible_jetmap(rng, (n, k), (n, k), 5)
        inv = jet_invert(j)
        assert is_identity(jetmap_compose(inv, j)) and is_identity(jetmap_compose(j, inv))


class TestConstantRank:
    def test_immersion_with_jumping_formal_rank(self):
        # x = (u1, z1), y = (u1*z1, z2): H has rank 1 at u1 = 0 and 2 elsewhere
        n, k = 1, 2
        u, z1, z2 = U(n, k, 0), Z(n, k, 0), Z(n, k, 1)
        m = morph((n, k), (2, 2), [u, z1], [u * z1, z2])
        assert classify_at(m, [0]).immersion
        res = constant_rank_check(m, [0])
        assert res.triple.as_tuple() == (3, 1, 1)
        assert not res.constant
        assert res.witness["block"] == "H" and res.witness["minor"] == "u1"
        res = constant_rank_check(m, [1])
        assert res.triple.as_tuple() == (3, 1, 2) and res.constant

    @pytest.mark.parametrize("c", [0, 1])
    def test_submersion_with_jumping_reduced_rank(self, c):
        n, k = 2, 2
        u1, u2, z1, z2 = U(n, k, 0), U(n, k, 1), Z(n, k, 0), Z(n, k, 1)
        m = morph((n, k), (2, 1), [u1, u1 * u2 + z1], [z2])
        flags = classify_at(m, [0, c])
        assert flags.submersion and not flags.regular
        res = constant_rank_check(m, [0, c])
        assert not res.constant and res.witness["block"] == "F" and res.witness["minor"] == "u1"

    def test_reduced_block_witness(self):
        m = morph((2, 0), (1, 0), [U(2, 0, 0) * U(2, 0, 1)], [])
        res = constant_rank_check(m, [0, 1])
        assert res.constant
        res = constant_rank_check(m, [0, 0])
        assert not res.constant and res.witness["block"] == "F"

    def test_square_of_formal(self):
        m = morph((0, 1), (0, 1), [], [Z(0, 1, 0) ** 2])
        res = constant_rank_check(m, [])
        assert res.constant and res.triple.as_tuple() == (0, 0, 0)


class TestCertificate:
    def test_square_not_surjective(self):
        m = morph((0, 1), (0, 1), [], [Z(0, 1, 0) ** 2])
        cert = kernel_surjectivity_certificate(m, [], 4)
        assert cert.verdict == "not_surjective" and cert.witness == "y1"
        assert cert.dim_ker_deg2 == 1

    def test_zero_map_lifts(self):
        m = morph((0, 1), (0, 1), [], [Fps.zero(0, 1, 6)])
        cert = kernel_surjectivity_certificate(m, [], 4)
        assert cert.surjective and cert.lifted[0].lift is not None

    def test_order_guards(self):
        m = Morphism.identity(1, 1, 6)
        with pytest.raises(OrderTooSmall):
            kernel_surjectivity_certificate(m, [0], 1)

    def test_size_cap(self):
        m = Morphism.identity(4, 4, 12)
        with pytest.raises(LimitExceeded):
            stalk_surjective_mod(m, [0] * 4, 12)

    def test_stalk_surjectivity(self):
        m = morph((1, 0), (1, 0), [U(1, 0, 0) ** 2], [])
        assert stalk_surjective_mod(m, [1], 3)
        assert not stalk_surjective_mod(m, [0], 2)
        assert stalk_surjective_mod(m, [0], 1)


class TestNormalForm:
    def test_parabola(self):
        n, k = 1, 1
        m = morph((n, k), (2, 1), [U(n, k, 0), U(n, k, 0) ** 2], [Z(n, k, 0)])
        nf = rank_normal_form(m, [1])
        assert nf.r == (1, 0, 1)
        assert normal_form_defects(nf) == []

    @given(st.integers(0, 10**6))
    @settings(max_examples=15, deadline=None)
    def test_random_standardizable(self, seed):
        rng = random.Random(seed)
        m, b, r = rand_standardizable(rng, 4)
        nf = rank_normal_form(m, b, 4)
        assert nf.r == r and normal_form_defects(nf) == []
        lhs = jetmap_compose(nf.theta_tgt, morphism_to_jetmap(m, b, 4))
        assert lhs == jetmap_compose(nf.conjugated, nf.theta_src)


class TestStandardize:
    def test_model_is_fixed(self):
        m = morph((2, 2), (2, 1), [U(2, 2, 0), Z(2, 2, 0)], [Z(2, 2, 1)])
        std = standardize(m, [0, 0], 4)
        assert std.triple == (1, 1, 1)
        assert std.standardized == standard_form((2, 2), (2, 1), (1, 1, 1), 4)
        assert std.residual == 4

    def test_not_constant_rank(self):
        m = morph((2, 0), (1, 0), [U(2, 0, 0) * U(2, 0, 1)], [])
        with pytest.raises(NotConstantRank):
            standardize(m, [0, 0], 4)

    def test_square_not_standardizable(self):
        m = morph((0, 1), (0, 1), [], [Z(0, 1, 0) ** 2])
        with pytest.raises(NotStandardizable) as err:
            standardize(m, [], 4)
        assert err.value.witness == "y1"

    def test_hidden_dependence(self):
        n, k = 1, 1
        m = morph((n, k), (2, 0), [U(n, k, 0), Z(n, k, 0) ** 2], [])
        with pytest.raises(NotStandardizable) as err:
            standardize(m, [0], 4)
        assert err.value.witness == "x2"

    def test_formal_ideal_flag(self):
        z = Z(0, 1, 0)
        m = morph((0, 1), (1, 1), [z], [z * z])
        std = standardize(m, [], 4)
        assert std.triple == (0, 1, 0)
        assert std.residual == 4
        assert std.preserves_formal_ideal is False

    @given(st.integers(0, 10**6))
    @settings(max_examples=15, deadline=None)
    def test_conjugation(self, seed):
        rng = random.Random(seed)
        m, b, r = rand_standardizable(rng, 4)
        std = standardize(m, b, 4)
        assert std.triple == r and std.residual == 4
        lhs = jetmap_compose(std.target_chart_change, morphism_to_jetmap(m, b, 4))
        assert lhs == jetmap_compose(std.standardized, std.source_chart_change)


class TestSection:
    def test_projection(self):
        n, k = 2, 2
        m = morph((n, k), (1, 1), [U(n, k, 0) + U(n, k, 1) * Z(n, k, 1)], [Z(n, k, 0) + Z(n, k, 1) ** 2])
        b = [Rational(1), Rational(2)]
        s = local_section(m, b, 4)
        phi = morphism_to_jetmap(m, b, 4)
        assert is_identity(jetmap_compose(phi, s))

    def test_requires_regular_submersion(self):
        m = morph((1, 0), (2, 0), [U(1, 0, 0), U(1, 0, 0)], [])
        with pytest.raises(NotRegularSubmersion):
            local_section(m, [0], 4)


class TestGraded:
    def test_example(self):
        n, k = 0, 2
        m = morph((n, k), (n, k), [], [Z(n, k, 0), Z(n, k, 0) + Z(n, k, 1)])
        f = Fps.formal_var(0, 2, 0, 2) * Fps.formal_var(0, 2, 1, 2)
        out = graded_component_map(m, 2, f)
        z1, z2 = Z(0, 2, 0, 2), Z(0, 2, 1, 2)
        assert out == z1 * z1 + z1 * z2

    def test_grade_mismatch(self):
        m = Morphism.identity(0, 2)
        with pytest.raises(GradeMismatch):
            graded_component_map(m, 2, Fps.formal_var(0, 2, 0, 4))

    @given(st.integers(0, 10**6), st.integers(1, 3))
    @settings(max_examples=20, deadline=None)
    def test_matches_full_pullback(self, seed, r):
        rng = random.Random(seed)
        m = rand_morphism(rng, (1, 2), (1, 2), 4)
        f = rand_graded(rng, 1, 2, r, 4)
        full = pullback(m, f).homogeneous(r)
        assert graded_component_map(m, r, f) == full.truncate(r)


def test_compose_matches_jets():
    rng = random.Random(11)
    f = rand_morphism(rng, (1, 1), (2, 1), 4)
    g = rand_morphism(rng, (2, 1), (1, 1), 4)
    b = rand_point(rng, 1)
    jf = morphism_to_jetmap(f, b, 4)
    jg = morphism_to_jetmap(g, jf.target_basepoint[:2], 4)
    assert jetmap_compose(jg, jf) == morphism_to_jetmap(compose(g, f), b, 4)
