"""Exact jet calculus for morphisms of formal manifolds in a single chart."""

from .errors import FormalChartError
from .exactalg import Poly, Rational
from .localforms import (
    JetMap,
    constant_rank_check,
    graded_component_map,
    jet_invert,
    kernel_surjectivity_certificate,
    local_section,
    morphism_to_jetmap,
    rank_normal_form,
    standardize,
)
from .morphfile import parse_morphism, print_morphism
from .morphism import Morphism, classify_at, compose, differential_at, jacobian, pullback, rank_at, underlying_point
from .series import Fps, Jet
from .submanifold import SliceSpec, borel_preimage, ideal_membership, level_set, make_slice, slice_pullback

__all__ = [
    "FormalChartError",
    "Fps",
    "Jet",
    "JetMap",
    "Morphism",
    "Poly",
    "Rational",
    "SliceSpec",
    "borel_preimage",
    "classify_at",
    "compose",
    "constant_rank_check",
    "differential_at",
    "graded_component_map",
    "ideal_membership",
    "jacobian",
    "jet_invert",
    "kernel_surjectivity_certificate",
    "level_set",
    "local_section",
    "make_slice",
    "morphism_to_jetmap",
    "parse_morphism",
    "print_morphism",
    "pullback",
    "rank_at",
    "rank_normal_form",
    "slice_pullback",
    "standardize",
    "underlying_point",
]
