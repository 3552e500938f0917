"""Local structure at a point: jet maps, inversion, rank normal forms.

Everything here works on truncated stalks.  A ``JetMap`` records the Taylor
jets at a source point ``b`` of the target coordinates; composing jet maps is
substitution, and chart changes are invertible jet maps.  Normal forms are
built at the origin after translating both points to 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

from .errors import (
    GradeMismatch,
    OrderTooSmall,
    LimitExceeded,
    NotConstantRank,
    NotLocal,
    NotRegularSubmersion,
    NotStandardizable,
    ShapeMismatch,
    SingularDifferential,
)
from .exactalg import ONE, ZERO, Poly, Rational, as_point, format_terms, poly_subst
from .linalg import (
    first_nonzero_minor,
    independent_rows,
    inverse,
    nullspace,
    nullspace_sparse,
    poly_generic_rank,
    rank,
    solve,
    transpose,
)
from .morphism import (
    JacobianBlocks,
    Morphism,
    RankTriple,
    _check_point,
    classify_at,
    jacobian,
    rank_at,
    source_names,
    target_names,
    underlying_point,
)
from .series import (
    Fps,
    Jet,
    _mul_parts,
    _unit_key,
    fps_to_jet,
    jet_drop_vars,
    jet_reindex,
    jet_subst,
    jet_variables,
    multi_indices_upto,
    pack,
    unpack,
)

MATRIX_CAP = 5000


# --- jet maps ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JetMap:
    """Truncated local homomorphism given by the jets of the target coordinates.

    ``components`` holds ``n + k`` jets in the ``n' + k'`` source variables,
    expanded at ``source_basepoint`` (smooth coordinates of ``b`` followed
    by zeros for the formal ones).
    """

    src: tuple[int, int]
    tgt: tuple[int, int]
    components: tuple[Jet, ...]
    order: int
    source_basepoint: tuple[Rational, ...]

    def __post_init__(self):
        object.__setattr__(self, "src", tuple(self.src))
        object.__setattr__(self, "tgt", tuple(self.tgt))
        object.__setattr__(self, "components", tuple(c.truncate(self.order) for c in self.components))
        object.__setattr__(self, "source_basepoint", as_point(self.source_basepoint))
        n2, k2 = self.src
        n, k = self.tgt
        if len(self.source_basepoint) != n2 + k2:
            raise ShapeMismatch("source basepoint does not match the source dimensions")
        if any(self.source_basepoint[n2:]):
            raise NotLocal("formal coordinates of the source basepoint must vanish")
        if len(self.components) != n + k:
            raise ShapeMismatch(f"expected {n + k} components, got {len(self.components)}")
        for c in self.components:
            if c.arity != n2 + k2 or c.basepoint != self.source_basepoint:
                raise ShapeMismatch("component jets must live at the source basepoint")
            if c.order < self.order:
                raise ShapeMismatch("component order below the map order")
        for j, c in enumerate(self.components[n:]):
            if c.value():
                raise NotLocal(f"formal component {j + 1} has a nonzero constant term")

    @property
    def target_basepoint(self) -> tuple[Rational, ...]:
        return tuple(c.value() for c in self.components)

    @property
    def source_dim(self) -> int:
        return sum(self.src)

    @property
    def target_dim(self) -> int:
        return sum(self.tgt)

    def linear_matrix(self) -> list[list[Rational]]:
        """Differential at the basepoint: rows are target, columns source coordinates."""
        return [c.linear() for c in self.components]

    def __eq__(self, other) -> bool:
        if not isinstance(other, JetMap):
            return NotImplemented
        return (
            self.src == other.src
            and self.tgt == other.tgt
            and self.source_basepoint == other.source_basepoint
            and all(a == b for a, b in zip(self.components, other.components))
        )

    __hash__ = None

    def format_lines(self, src_names: Sequence[str] | None = None, tgt_names: Sequence[str] | None = None) -> list[str]:
        src_names = list(src_names or source_names(*self.src))
        tgt_names = list(tgt_names or target_names(*self.tgt))
        return [f"{t} = {c.format(src_names)}" for t, c in zip(tgt_names, self.components)]


def identity_jetmap(n: int, k: int, basepoint: Sequence, order: int) -> JetMap:
    bp = as_point(basepoint)
    if len(bp) == n:
        bp = bp + (ZERO,) * k
    comps = tuple(Jet.coordinate(n + k, bp, i, order) for i in range(n + k))
    return JetMap((n, k), (n, k), comps, order, bp)


def jetmap_compose(outer: JetMap, inner: JetMap) -> JetMap:
    """``outer o inner`` on stalks: substitute the inner jets into the outer ones."""
    if inner.tgt != outer.src:
        raise ShapeMismatch(f"cannot compose: inner target {inner.tgt} vs outer source {outer.src}")
    if inner.target_basepoint != outer.source_basepoint:
        raise NotLocal("inner map does not send its basepoint to the outer basepoint")
    order = min(outer.order, inner.order)
    comps = tuple(
        jet_subst(c, inner.components, basepoint=inner.source_basepoint, order=order) for c in outer.components
    )
    return JetMap(inner.src, outer.tgt, comps, order, inner.source_basepoint)


def morphism_to_jetmap(m: Morphism, b: Sequence, order: int | None = None) -> JetMap:
    """Taylor jets at ``b`` of all coordinate pullbacks."""
    b = _check_point(m, b)
    order = m.order if order is None else order
    if order > m.order:
        raise ShapeMismatch(f"jet order {order} exceeds the morphism order {m.order}")
    comps = tuple(fps_to_jet(c, b, order) for c in m.components)
    return JetMap(m.src, m.tgt, comps, order, b + (ZERO,) * m.src[1])


# --- inversion ---------------------------------------------------------------------


def jet_invert(j: JetMap, order: int | None = None) -> JetMap:
    """Two-sided inverse of a jet map with invertible differential.

    The linear part is inverted directly; the degree-``s`` part of the
    inverse then solves ``L iota_s = -[j(iota_{<s})]_s``.
    """
    order = j.order if order is None else min(order, j.order)
    if j.source_dim != j.target_dim:
        raise ShapeMismatch(f"cannot invert a map from dimension {j.source_dim} to {j.target_dim}")
    L = j.linear_matrix()
    Linv = inverse(L) if L else []
    if Linv is None:
        raise SingularDifferential("the differential at the basepoint is not invertible")
    size = j.source_dim
    a = j.target_basepoint
    b = j.source_basepoint
    parts = [[{} for _ in range(order + 1)] for _ in range(size)]
    for i in range(size):
        if b[i]:
            parts[i][0][0] = b[i]
        if order >= 1:
            parts[i][1] = {_unit_key(t): Linv[i][t] for t in range(size) if Linv[i][t]}
    iota = [Jet._raw(size, a, order, p) for p in parts]
    for s in range(2, order + 1):
        errs = [jet_subst(c, iota, order=s)._parts[s] for c in j.components]
        for i in range(size):
            corr: dict[int, Rational] = {}
            for t in range(size):
                f = Linv[i][t]
                if not f:
                    continue
                for key, c in errs[t].items():
                    corr[key] = corr.get(key, ZERO) - f * c
            parts[i][s] = {key: c for key, c in corr.items() if c}
    iota = tuple(Jet._raw(size, a, order, p) for p in parts)
    return JetMap(j.tgt, j.src, iota, order, a)


# --- constant rank -----------------------------------------------------------------


@dataclass(frozen=True)
class ConstantRankResult:
    constant: bool
    triple: RankTriple
    witness: dict | None = None


def _generic_check(name: str, block, rank_b: int, arity: int) -> dict | None:
    if not block or not block[0]:
        return None
    if poly_generic_rank(block, arity) == rank_b:
        return None
    hit = first_nonzero_minor(block, rank_b + 1, arity)
    rows, cols, det = hit
    names = [f"u{i + 1}" for i in range(arity)]
    return {
        "block": name,
        "size": rank_b + 1,
        "rows": [r + 1 for r in rows],
        "cols": [c + 1 for c in cols],
        "minor": det.format(names),
    }


def constant_rank_check(m: Morphism, b: Sequence) -> ConstantRankResult:
    """Compare the rank at ``b`` with the generic rank of F, H and J.

    Polynomial entries make "all (r+1)-minors vanish near b" the same as
    "all (r+1)-minors are the zero polynomial", i.e. generic rank ``r``.
    A failing block comes with its first nonzero minor.
    """
    triple = rank_at(m, b)
    J = jacobian(m)
    arity = m.src[0]
    for name, block, r in (
        ("F", J.F, triple.rank_reduced),
        ("H", J.H, triple.rank_formal),
        ("J", J.full(), triple.rank_total),
    ):
        witness = _generic_check(name, block, r, arity)
        if witness:
            return ConstantRankResult(False, triple, witness)
    return ConstantRankResult(True, triple)


# --- rank normal form --------------------------------------------------------------


@dataclass(frozen=True)
class RankNormalForm:
    theta_tgt: JetMap
    theta_src: JetMap
    conjugated: JetMap
    triple: RankTriple
    target_order: tuple[int, ...]
    source_order: tuple[int, ...]

    @property
    def r(self) -> tuple[int, int, int]:
        return (self.triple.r1, self.triple.r2, self.triple.r3)


def _coordinate(arity: int, index: int, order: int) -> Jet:
    return Jet.coordinate(arity, (ZERO,) * arity, index, order)


def _select(Jb, Fb, Hb, dims) -> tuple[list[int], list[int], list[int], list[int], list[int], list[int]]:
    """Lexicographically first nonsingular minors for F, H and their extension in J."""
    n, k, n2, k2 = dims
    I1 = independent_rows(Fb, range(n))
    C1 = independent_rows(transpose([Fb[i] for i in I1]), range(n2)) if I1 else []
    K3 = independent_rows(Hb, range(k))
    Z3 = independent_rows(transpose([Hb[j] for j in K3]), range(k2)) if K3 else []
    rows = independent_rows(Jb, [i for i in range(n) if i not in I1], I1 + [n + j for j in K3])
    I2 = rows[len(I1) + len(K3):]
    Jt = transpose(Jb) if Jb else [[] for _ in range(n2 + k2)]
    cols = independent_rows(Jt, [n2 + j for j in range(k2) if j not in Z3], C1 + [n2 + j for j in Z3])
    Z2 = [c - n2 for c in cols[len(C1) + len(Z3):]]
    return I1, C1, K3, Z3, sorted(I2), sorted(Z2)


def _translation(dims: tuple[int, int], order_list: Sequence[int], basepoint: Sequence, order: int) -> JetMap:
    """Chart change ``v -> (v[order_list] - basepoint[order_list])`` moving the point to 0."""
    size = sum(dims)
    bp = as_point(basepoint)
    comps = tuple(Jet.coordinate(size, bp, i, order) - bp[i] for i in order_list)
    return JetMap(dims, dims, comps, order, bp)


def _untranslation(dims: tuple[int, int], order_list: Sequence[int], basepoint: Sequence, order: int) -> JetMap:
    size = sum(dims)
    bp = as_point(basepoint)
    where = {old: new for new, old in enumerate(order_list)}
    comps = tuple(_coordinate(size, where[i], order) + bp[i] for i in range(size))
    return JetMap(dims, dims, comps, order, (ZERO,) * size)


def rank_normal_form(m: Morphism, b: Sequence, order: int | None = None) -> RankNormalForm:
    """Chart changes at ``b`` and ``phi(b)`` bringing a constant-rank map to normal form.

    In the new coordinates the map reads ``x = (u_{<r1}, g, z_{<r2})`` and
    ``y = (z_{r2..r2+r3}, h)`` with ``g, h`` in the formal ideal and ``h``
    free of linear ``z_{<r2}`` terms.
    """
    b = _check_point(m, b)
    order = m.order if order is None else order
    check = constant_rank_check(m, b)
    if not check.constant:
        raise NotConstantRank("the rank is not constant near the point", check.witness)
    triple = check.triple
    n2, k2 = m.src
    n, k = m.tgt
    r1, r2, r3 = triple.r1, triple.r2, triple.r3
    sdim, tdim = n2 + k2, n + k

    phi = morphism_to_jetmap(m, b, order)
    Jb = phi.linear_matrix()
    Fb = [row[:n2] for row in Jb[:n]]
    Hb = [row[n2:] for row in Jb[n:]]
    I1, C1, K3, Z3, I2, Z2 = _select(Jb, Fb, Hb, (n, k, n2, k2))
    assert len(I1) == r1 and len(K3) == r3 and len(I2) == r2 and len(Z2) == r2

    mid = [i for i in range(n) if i not in I1 and i not in I2]
    x_order = I1 + mid + I2
    y_order = K3 + [j for j in range(k) if j not in K3]
    u_order = C1 + [i for i in range(n2) if i not in C1]
    z_order = Z2 + Z3 + [j for j in range(k2) if j not in Z2 and j not in Z3]
    tgt_list = x_order + [n + j for j in y_order]
    src_list = u_order + [n2 + j for j in z_order]

    P_tgt = _translation((n, k), tgt_list, phi.target_basepoint, order)
    P_src = _translation((n2, k2), src_list, phi.source_basepoint, order)
    P_src_inv = _untranslation((n2, k2), src_list, phi.source_basepoint, order)
    phi0 = jetmap_compose(P_tgt, jetmap_compose(phi, P_src_inv))

    formal_src = range(n2, sdim)
    # straighten the smooth source coordinates along the first r1 reduced components
    sigma = tuple(
        jet_drop_vars(phi0.components[l], formal_src) if l < r1 else _coordinate(sdim, l, order)
        for l in range(sdim)
    )
    sigma1 = JetMap((n2, k2), (n2, k2), sigma, order, (ZERO,) * sdim)
    phi1 = jetmap_compose(phi0, jet_invert(sigma1))

    # subtract the reduced parts that depend only on the first r1 coordinates
    tau = []
    for j in range(tdim):
        coord = _coordinate(tdim, j, order)
        if r1 <= j < n:
            red = jet_drop_vars(phi1.components[j], formal_src)
            if any(v >= r1 for v in jet_variables(red)):
                raise NotConstantRank("reduced components do not factor through the leading coordinates")
            positions = [l if l < r1 else None for l in range(sdim)]
            coord = coord - jet_reindex(red, tdim, positions, (ZERO,) * tdim)
        tau.append(coord)
    tau1 = JetMap((n, k), (n, k), tuple(tau), order, (ZERO,) * tdim)
    phi2 = jetmap_compose(tau1, phi1)

    psi = []
    for l in range(sdim):
        if l < r1:
            psi.append(phi2.components[l])
        elif l < n2:
            psi.append(_coordinate(sdim, l, order))
        elif l - n2 < r2:
            psi.append(phi2.components[n - r2 + (l - n2)])
        elif l - n2 < r2 + r3:
            psi.append(phi2.components[n + (l - n2 - r2)])
        else:
            psi.append(_coordinate(sdim, l, order))
    psi_map = JetMap((n2, k2), (n2, k2), tuple(psi), order, (ZERO,) * sdim)
    phi3 = jetmap_compose(phi2, jet_invert(psi_map))

    theta_src = jetmap_compose(psi_map, jetmap_compose(sigma1, P_src))
    theta_tgt = jetmap_compose(tau1, P_tgt)
    result = RankNormalForm(theta_tgt, theta_src, phi3, triple, tuple(tgt_list), tuple(src_list))
    problems = normal_form_defects(result)
    if problems:
        raise AssertionError("normal form construction failed: " + "; ".join(problems))
    return result


def normal_form_defects(nf: RankNormalForm) -> list[str]:
    """Deviations of ``nf.conjugated`` from the constant-rank normal form."""
    phi = nf.conjugated
    n2, k2 = phi.src
    n, k = phi.tgt
    r1, r2, r3 = nf.r
    sdim = n2 + k2
    order = phi.order
    problems = []
    comps = phi.components
    for l in range(r1):
        if comps[l] != _coordinate(sdim, l, order):
            problems.append(f"x{l + 1} is not u{l + 1}")
    for i in range(r2):
        if comps[n - r2 + i] != _coordinate(sdim, n2 + i, order):
            problems.append(f"x{n - r2 + i + 1} is not z{i + 1}")
    for i in range(r3):
        if comps[n + i] != _coordinate(sdim, n2 + r2 + i, order):
            problems.append(f"y{i + 1} is not z{r2 + i + 1}")
    free = list(range(r1, n - r2)) + list(range(n + r3, n + k))
    for t in free:
        if not jet_drop_vars(comps[t], range(n2, sdim)).is_zero():
            problems.append(f"component {t + 1} is not in the formal ideal")
    for t in range(n + r3, n + k):
        lin = comps[t].linear()
        if any(lin[n2 + i] for i in range(r2)):
            problems.append(f"y{t - n + 1} has linear terms in z1..z{r2}")
    return problems


# --- kernel certificate ------------------------------------------------------------


@dataclass(frozen=True)
class KernelLift:
    vector: tuple[Rational, ...]
    lift: Jet | None


@dataclass(frozen=True)
class KernelCertificate:
    order: int
    dim_ker_deg2: int
    lifted: tuple[KernelLift, ...]
    verdict: str
    witness: str | None = None

    @property
    def surjective(self) -> bool:
        return self.verdict == "surjective_at_order_D"


def _linear_form(vec: Sequence[Rational], names: Sequence[str]) -> str:
    terms = [((0,) * i + (1,) + (0,) * (len(vec) - i - 1), c) for i, c in enumerate(vec) if c]
    return format_terms(terms, names)


def pullback_matrix(j: JetMap, top: int) -> tuple[list[tuple], list[tuple], list[dict[int, Rational]]]:
    """Matrix of ``phi_b^*`` from target monomials of degree 1..top to source monomials.

    Returns target monomials, source monomials, and the sparse rows (one per
    source monomial) indexed by target-monomial position.
    """
    tdim, sdim = j.target_dim, j.source_dim
    ntgt = comb(tdim + top, top) - 1
    nsrc = comb(sdim + top, top) - 1
    if max(ntgt, nsrc) > MATRIX_CAP:
        raise LimitExceeded(f"truncated stalk matrix of size {nsrc} x {ntgt} exceeds the cap {MATRIX_CAP}")
    tgt_monos = multi_indices_upto(tdim, top, 1)
    src_monos = multi_indices_upto(sdim, top, 1)
    src_index = {pack(e): i for i, e in enumerate(src_monos)}
    centered = [c.drop_constant().truncate(top)._parts for c in j.components]
    cache: dict[tuple, list[dict]] = {}
    rows: list[dict[int, Rational]] = [{} for _ in src_monos]
    for col, e in enumerate(tgt_monos):
        t = max(i for i, v in enumerate(e) if v)
        prev = e[:t] + (e[t] - 1,) + e[t + 1:]
        if sum(prev) == 0:
            parts = centered[t]
        else:
            parts = _mul_parts(cache[prev], centered[t], top)
        cache[e] = parts
        for d in range(1, top + 1):
            for key, c in parts[d].items():
                rows[src_index[key]][col] = c
    return tgt_monos, src_monos, rows


def kernel_surjectivity_certificate(m: Morphism, b: Sequence, order: int = 4) -> KernelCertificate:
    """Try to lift each element of the kernel on cotangent spaces to the truncated stalk kernel.

    A basis vector with no lift refutes surjectivity of the kernel map for
    good; lifts at every basis vector only certify order ``order``.
    """
    if order < 2:
        raise OrderTooSmall("the kernel certificate needs order at least 2")
    if order > m.order:
        raise ShapeMismatch(f"certificate order {order} exceeds the morphism order {m.order}")
    phi = morphism_to_jetmap(m, b, order)
    tdim = phi.target_dim
    Jb = phi.linear_matrix()
    ker2 = nullspace(transpose(Jb), tdim) if Jb else [[ONE if i == t else ZERO for i in range(tdim)] for t in range(tdim)]
    triple = rank_at(m, b)
    assert len(ker2) == tdim - triple.rank_total
    names = target_names(*m.tgt)
    if not ker2:
        return KernelCertificate(order, 0, (), "surjective_at_order_D")
    tgt_monos, _, rows = pullback_matrix(phi, order)
    kernel = nullspace_sparse(rows, len(tgt_monos))
    # degree-one projections of the truncated kernel, as columns of a tdim x len(kernel) system
    proj = [[vec.get(i, ZERO) for vec in kernel] for i in range(tdim)]
    a = phi.target_basepoint
    lifts = []
    witness = None
    for v in ker2:
        coeffs = solve(proj, v, len(kernel)) if kernel else None
        if coeffs is None:
            lifts.append(KernelLift(tuple(v), None))
            if witness is None:
                witness = _linear_form(v, names)
            continue
        combo: dict[tuple, Rational] = {}
        for c, vec in zip(coeffs, kernel):
            if c:
                for col, val in vec.items():
                    combo[tgt_monos[col]] = combo.get(tgt_monos[col], ZERO) + c * val
        lifts.append(KernelLift(tuple(v), Jet(tdim, a, order, combo)))
    verdict = "not_surjective" if witness else "surjective_at_order_D"
    return KernelCertificate(order, len(ker2), tuple(lifts), verdict, witness)


def stalk_surjective_mod(m: Morphism, b: Sequence, power: int) -> bool:
    """Whether ``phi_b^*`` induces a surjection modulo the ``power``-th power of the maximal ideals."""
    if power < 1:
        raise ShapeMismatch("the power must be positive")
    top = power - 1
    if top == 0:
        return True
    phi = morphism_to_jetmap(m, b, min(top, m.order))
    _, src_monos, rows = pullback_matrix(phi, top)
    dense = [[r.get(c, ZERO) for c in range(comb(phi.target_dim + top, top) - 1)] for r in rows]
    return rank(dense) == len(src_monos)


# --- standardization ---------------------------------------------------------------


@dataclass(frozen=True)
class StandardizationResult:
    triple: tuple[int, int, int]
    rank_triple: RankTriple
    target_chart_change: JetMap
    source_chart_change: JetMap
    standardized: JetMap
    residual: int
    certificate: KernelCertificate
    preserves_formal_ideal: bool = field(default=True)


def standard_form(src: tuple[int, int], tgt: tuple[int, int], r: tuple[int, int, int], order: int) -> JetMap:
    """The model map ``x = (u_{<r1}, 0, z_{<r2})``, ``y = (z_{r2..r2+r3}, 0)`` at the origin."""
    n2, k2 = src
    n, k = tgt
    r1, r2, r3 = r
    sdim = n2 + k2
    zero = Jet.constant(sdim, (ZERO,) * sdim, 0, order)
    comps = []
    for i in range(n):
        if i < r1:
            comps.append(_coordinate(sdim, i, order))
        elif i >= n - r2:
            comps.append(_coordinate(sdim, n2 + i - (n - r2), order))
        else:
            comps.append(zero)
    for j in range(k):
        comps.append(_coordinate(sdim, n2 + r2 + j, order) if j < r3 else zero)
    return JetMap(src, tgt, tuple(comps), order, (ZERO,) * sdim)


def _in_formal_ideal(j: JetMap, formal: range) -> bool:
    """Whether every formal component is divisible by the formal variables."""
    return all(jet_drop_vars(c, formal).is_zero() for c in j.components[j.tgt[0]:])


def _matching_degree(a: JetMap, b: JetMap) -> int:
    top = -1
    for d in range(min(a.order, b.order) + 1):
        if any(x._parts[d] != y._parts[d] for x, y in zip(a.components, b.components)):
            break
        top = d
    return top


def standardize(
    m: Morphism, b: Sequence, order: int | None = None, certificate_order: int | None = None
) -> StandardizationResult:
    """Chart changes bringing the map to the model map of its rank triple.

    Requires constant rank and a surjective kernel certificate, computed at
    ``certificate_order`` (default: ``order``).
    """
    b = _check_point(m, b)
    order = m.order if order is None else order
    check = constant_rank_check(m, b)
    if not check.constant:
        raise NotConstantRank("the rank is not constant near the point", check.witness)
    cert = kernel_surjectivity_certificate(m, b, certificate_order or order)
    if not cert.surjective:
        raise NotStandardizable(
            f"the cotangent kernel element {cert.witness} has no lift to the truncated stalk kernel",
            certificate=cert,
            witness=cert.witness,
        )
    nf = rank_normal_form(m, b, order)
    phi3 = nf.conjugated
    n2, k2 = m.src
    n, k = m.tgt
    r1, r2, r3 = nf.r
    sdim, tdim = n2 + k2, n + k
    kept = set(range(r1)) | set(range(n2, n2 + r2 + r3))
    positions: list[int | None] = [None] * sdim
    for l in range(r1):
        positions[l] = l
    for j in range(r2):
        positions[n2 + j] = n - r2 + j
    for j in range(r3):
        positions[n2 + r2 + j] = n + j
    tau = []
    for t in range(tdim):
        coord = _coordinate(tdim, t, order)
        if r1 <= t < n - r2 or t >= n + r3:
            comp = phi3.components[t]
            extra = jet_variables(comp) - kept
            if extra:
                name = target_names(n, k)[t]
                raise NotStandardizable(
                    f"normal-form component {name} depends on non-image source directions up to order {order}",
                    certificate=cert,
                    witness=name,
                )
            coord = coord - jet_reindex(comp, tdim, positions, (ZERO,) * tdim)
        tau.append(coord)
    tau2 = JetMap((n, k), (n, k), tuple(tau), order, (ZERO,) * tdim)
    standardized = jetmap_compose(tau2, phi3)
    theta_tgt = jetmap_compose(tau2, nf.theta_tgt)
    residual = _matching_degree(standardized, standard_form(m.src, m.tgt, nf.r, order))
    preserves = _in_formal_ideal(theta_tgt, range(n, tdim)) and _in_formal_ideal(nf.theta_src, range(n2, sdim))
    return StandardizationResult(nf.r, nf.triple, theta_tgt, nf.theta_src, standardized, residual, cert, preserves)


def local_section(m: Morphism, b: Sequence, order: int | None = None) -> JetMap:
    """A jet-level right inverse of a regular submersion at ``b``."""
    b = _check_point(m, b)
    order = m.order if order is None else order
    flags = classify_at(m, b)
    if not (flags.regular and flags.submersion):
        raise NotRegularSubmersion("a local section needs a regular submersion at the point")
    std = standardize(m, b, order)
    n2, k2 = m.src
    n, k = m.tgt
    tdim = n + k
    zero = Jet.constant(tdim, (ZERO,) * tdim, 0, order)
    comps = [_coordinate(tdim, i, order) if i < n else zero for i in range(n2)]
    comps += [_coordinate(tdim, n + j, order) if j < k else zero for j in range(k2)]
    sigma0 = JetMap((n, k), (n2, k2), tuple(comps), order, (ZERO,) * tdim)
    back = jet_invert(std.source_chart_change)
    return jetmap_compose(back, jetmap_compose(sigma0, std.target_chart_change))


# --- graded pieces -----------------------------------------------------------------


def graded_component_map(m: Morphism, r: int, f: Fps) -> Fps:
    """Induced map on ``m^r / m^(r+1)``: ``sum_J (phi^* f_J)|_red * H(z)^J``."""
    n2, k2 = m.src
    n, k = m.tgt
    if f.shape != (n, k):
        raise ShapeMismatch(f"series of shape {f.shape} for target {(n, k)}")
    if any(sum(J) != r for J in f.coeffs):
        raise GradeMismatch(f"every formal monomial must have degree {r}")
    order = max(r, 1)
    reds = [c.reduction() for c in m.cx]
    J = jacobian(m)
    hz = [
        Fps(n2, k2, order, {tuple(1 if t == jj else 0 for t in range(k2)): J.H[j][jj] for jj in range(k2)})
        for j in range(k)
    ]
    out = Fps.zero(n2, k2, order)
    for idx, p in f.sorted_coeffs():
        base = poly_subst(p, reds) if n else Poly.constant(n2, p.constant_term())
        term = Fps.constant(n2, k2, base, order)
        for j, e in enumerate(idx):
            for _ in range(e):
                term = term * hz[j]
        out = out + term
    return out.homogeneous(r).truncate(r)
