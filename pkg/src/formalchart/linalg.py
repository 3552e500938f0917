"""Exact linear algebra over Q and over Q[x].

Rational matrices are lists of rows.  Ranks use fraction-free (Bareiss)
elimination on integer-scaled rows with first-nonzero pivoting, so results
are deterministic.  Kernels and solves use a sparse row-reduced echelon form.

Polynomial matrices (entries ``Poly``) get determinants and generic ranks
(rank over the rational function field) from the same fraction-free scheme
with exact polynomial division.
"""

from __future__ import annotations

from itertools import combinations
from math import lcm
from typing import Sequence

import gmpy2

from .exactalg import ONE, ZERO, Poly, Rational, as_rational, poly_div_exact

Matrix = list[list[Rational]]


def to_matrix(rows: Sequence[Sequence]) -> Matrix:
    return [[as_rational(v) for v in row] for row in rows]


def identity(size: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(size)] for i in range(size)]


def transpose(rows: Sequence[Sequence], ncols: int | None = None) -> Matrix:
    if not rows:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*rows)]


def matmul(a: Sequence[Sequence], b: Sequence[Sequence], inner: int | None = None) -> Matrix:
    """Product of an (r x s) and an (s x c) matrix.

    ``inner`` disambiguates shapes when ``b`` has no rows.
    """
    ncols = len(b[0]) if b else 0
    return [[sum((row[t] * b[t][j] for t in range(len(row))), ZERO) for j in range(ncols)] for row in a]


def _integer_rows(rows: Sequence[Sequence[Rational]]) -> list[list]:
    out = []
    for row in rows:
        den = lcm(*(int(as_rational(v).denominator) for v in row)) if row else 1
        out.append([gmpy2.mpz(as_rational(v) * den) for v in row])
    return out


def rank(rows: Sequence[Sequence]) -> int:
    """Rank over Q by fraction-free elimination."""
    m = _integer_rows(rows)
    if not m or not m[0]:
        return 0
    nrows, ncols = len(m), len(m[0])
    r = 0
    prev = gmpy2.mpz(1)
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        for i in range(r + 1, nrows):
            a = m[i][c]
            row_i, row_r = m[i], m[r]
            for j in range(c + 1, ncols):
                row_i[j] = (p * row_i[j] - a * row_r[j]) // prev
            row_i[c] = gmpy2.mpz(0)
        prev = p
        r += 1
        if r == nrows:
            break
    return r


def rref_sparse(rows: Sequence[dict[int, Rational]]) -> tuple[list[dict[int, Rational]], list[int]]:
    """Reduced row echelon form of sparse rows (``col -> value`` dicts).

    Pivot columns are chosen smallest-first, which makes the result unique.
    """
    work = [dict(r) for r in rows if r]
    pivots: list[int] = []
    reduced: list[dict[int, Rational]] = []
    # incremental elimination: each new row is reduced against the basis so far
    for row in work:
        for prow, pc in zip(reduced, pivots):
            f = row.get(pc)
            if f:
                for c, v in prow.items():
                    nv = row.get(c, ZERO) - f * v
                    if nv:
                        row[c] = nv
                    else:
                        row.pop(c, None)
        if not row:
            continue
        pc = min(row)
        inv = ONE / row[pc]
        row = {c: v * inv for c, v in row.items()}
        for prow in reduced:
            f = prow.get(pc)
            if f:
                for c, v in row.items():
                    nv = prow.get(c, ZERO) - f * v
                    if nv:
                        prow[c] = nv
                    else:
                        prow.pop(c, None)
        reduced.append(row)
        pivots.append(pc)
    order = sorted(range(len(pivots)), key=pivots.__getitem__)
    return [reduced[i] for i in order], [pivots[i] for i in order]


def _dense_to_sparse(rows: Sequence[Sequence]) -> list[dict[int, Rational]]:
    return [{j: as_rational(v) for j, v in enumerate(row) if v} for row in rows]


def rref(rows: Sequence[Sequence]) -> tuple[Matrix, list[int]]:
    ncols = len(rows[0]) if rows else 0
    red, piv = rref_sparse(_dense_to_sparse(rows))
    dense = [[r.get(j, ZERO) for j in range(ncols)] for r in red]
    return dense, piv


def nullspace_sparse(rows: Sequence[dict[int, Rational]], ncols: int) -> list[dict[int, Rational]]:
    """Basis of ``{v : A v = 0}``, one vector per free column, in column order."""
    red, pivots = rref_sparse(rows)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = {free: ONE}
        for prow, pc in zip(red, pivots):
            v = prow.get(free)
            if v:
                vec[pc] = -v
        basis.append(vec)
    return basis


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> Matrix:
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    basis = nullspace_sparse(_dense_to_sparse(rows), ncols)
    return [[v.get(j, ZERO) for j in range(ncols)] for v in basis]


def solve(rows: Sequence[Sequence], rhs: Sequence, ncols: int | None = None) -> list[Rational] | None:
    """One solution of ``A v = rhs`` (free variables set to zero), or ``None``."""
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    aug = []
    for row, b in zip(rows, rhs):
        d = {j: as_rational(v) for j, v in enumerate(row) if v}
        b = as_rational(b)
        if b:
            d[ncols] = b
        aug.append(d)
    red, pivots = rref_sparse(aug)
    if ncols in pivots:
        return None
    sol = [ZERO] * ncols
    for prow, pc in zip(red, pivots):
        sol[pc] = prow.get(ncols, ZERO)
    return sol


def inverse(rows: Sequence[Sequence]) -> Matrix | None:
    """Inverse of a square matrix, ``None`` when singular."""
    size = len(rows)
    aug = []
    for i, row in enumerate(rows):
        if len(row) != size:
            raise ValueError("inverse of a non-square matrix")
        d = {j: as_rational(v) for j, v in enumerate(row) if v}
        d[size + i] = ONE
        aug.append(d)
    red, pivots = rref_sparse(aug)
    if pivots[:size] != list(range(size)):
        return None
    return [[red[i].get(size + j, ZERO) for j in range(size)] for i in range(size)]


def independent_rows(rows: Sequence[Sequence], candidates: Sequence[int], start: Sequence[int] = ()) -> list[int]:
    """Greedy extension of ``start`` by candidates (in order) that raise the rank.

    The greedy choice is the lexicographically first basis of the row matroid.
    """
    chosen = list(start)
    current = rank([rows[i] for i in chosen]) if chosen else 0
    for i in candidates:
        if i in chosen:
            continue
        trial = rank([rows[j] for j in chosen + [i]])
        if trial > current:
            chosen.append(i)
            current = trial
    return chosen


# --- polynomial matrices -------------------------------------------------------


def poly_det(entries: Sequence[Sequence[Poly]], arity: int) -> Poly:
    """Determinant of a square polynomial matrix (Bareiss with exact division)."""
    n = len(entries)
    if n == 0:
        return Poly.constant(arity, 1)
    m = [list(row) for row in entries]
    sign = 1
    prev = Poly.constant(arity, 1)
    for k in range(n - 1):
        piv = next((i for i in range(k, n) if not m[i][k].is_zero()), None)
        if piv is None:
            return Poly.zero(arity)
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        p = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = poly_div_exact(p * m[i][j] - m[i][k] * m[k][j], prev)
            m[i][k] = Poly.zero(arity)
        prev = p
    det = m[n - 1][n - 1]
    return det if sign > 0 else -det


def poly_generic_rank(entries: Sequence[Sequence[Poly]], arity: int) -> int:
    """Rank over the field of rational functions Q(x).

    Equals the largest size of a minor that is not the zero polynomial.
    """
    m = [list(row) for row in entries]
    if not m or not m[0]:
        return 0
    nrows, ncols = len(m), len(m[0])
    r = 0
    prev = Poly.constant(arity, 1)
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if not m[i][c].is_zero()), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        for i in range(r + 1, nrows):
            a = m[i][c]
            for j in range(c + 1, ncols):
                m[i][j] = poly_div_exact(p * m[i][j] - a * m[r][j], prev)
            m[i][c] = Poly.zero(arity)
        prev = p
        r += 1
        if r == nrows:
            break
    return r


def first_nonzero_minor(entries: Sequence[Sequence[Poly]], size: int, arity: int):
    """Lexicographically first ``size``-minor that is a nonzero polynomial.

    Returns ``(rows, cols, determinant)`` or ``None``.
    """
    nrows = len(entries)
    ncols = len(entries[0]) if entries else 0
    if size > min(nrows, ncols) or size <= 0:
        return None
    for rows_idx in combinations(range(nrows), size):
        for cols_idx in combinations(range(ncols), size):
            sub = [[entries[i][j] for j in cols_idx] for i in rows_idx]
            det = poly_det(sub, arity)
            if not det.is_zero():
                return rows_idx, cols_idx, det
    return None
