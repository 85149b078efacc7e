"""Exact integer and rational linear algebra.

Sparse integer matrices, ranks (modular with an exact fallback), saturated
integer kernels, Smith normal form divisors and determinant signs of linear
maps restricted to a subspace.  Nothing here touches floating point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

Matrix = list[list[int]]


class SingularRestriction(ValueError):
    pass


class NotInSpan(ValueError):
    pass


@dataclass(frozen=True)
class SparseIntMatrix:
    """Coordinate-sorted sparse integer matrix with no stored zeros."""

    nrows: int
    ncols: int
    entries: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        prev = None
        for r, c, v in self.entries:
            if v == 0:
                raise ValueError("explicit zero stored")
            if not (0 <= r < self.nrows and 0 <= c < self.ncols):
                raise ValueError(f"entry ({r}, {c}) out of bounds")
            if prev is not None and (r, c) <= prev:
                raise ValueError("entries not strictly sorted")
            prev = (r, c)

    @classmethod
    def from_dict(cls, nrows: int, ncols: int, d: dict) -> "SparseIntMatrix":
        ents = tuple(sorted((r, c, v) for (r, c), v in d.items() if v != 0))
        return cls(nrows, ncols, ents)

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[int]], ncols: int | None = None) -> "SparseIntMatrix":
        nrows = len(rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        ents = tuple((i, j, int(v)) for i, row in enumerate(rows) for j, v in enumerate(row) if v)
        return cls(nrows, ncols, ents)

    @classmethod
    def identity(cls, k: int) -> "SparseIntMatrix":
        return cls(k, k, tuple((i, i, 1) for i in range(k)))

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def to_dense(self) -> Matrix:
        out = [[0] * self.ncols for _ in range(self.nrows)]
        for r, c, v in self.entries:
            out[r][c] = v
        return out

    def row_dicts(self) -> list[dict[int, int]]:
        rows: list[dict[int, int]] = [dict() for _ in range(self.nrows)]
        for r, c, v in self.entries:
            rows[r][c] = v
        return rows

    def transpose(self) -> "SparseIntMatrix":
        return SparseIntMatrix(self.ncols, self.nrows, tuple(sorted((c, r, v) for r, c, v in self.entries)))

    def __matmul__(self, other: "SparseIntMatrix") -> "SparseIntMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        brows = other.row_dicts()
        acc: dict[tuple[int, int], int] = {}
        for r, k, v in self.entries:
            for c, w in brows[k].items():
                acc[r, c] = acc.get((r, c), 0) + v * w
        return SparseIntMatrix.from_dict(self.nrows, other.ncols, acc)

    def apply(self, vec: Sequence[int]) -> list[int]:
        out = [0] * self.nrows
        for r, c, v in self.entries:
            out[r] += v * vec[c]
        return out

    def is_zero(self) -> bool:
        return not self.entries


@dataclass
class ElementaryDivisorList:
    """Smith normal form diagonal as ``(divisor, multiplicity)`` pairs."""

    pairs: list[tuple[int, int]] = field(default_factory=list)

    @classmethod
    def from_diagonal(cls, diag: Iterable[int]) -> "ElementaryDivisorList":
        counts: dict[int, int] = {}
        for d in diag:
            d = abs(d)
            if d:
                counts[d] = counts.get(d, 0) + 1
        return cls(sorted(counts.items()))

    @property
    def rank(self) -> int:
        return sum(m for _, m in self.pairs)

    def expanded(self) -> list[int]:
        return [d for d, m in self.pairs for _ in range(m)]

    def torsion(self) -> "ElementaryDivisorList":
        return ElementaryDivisorList([(d, m) for d, m in self.pairs if d > 1])

    def __str__(self) -> str:
        return ", ".join(f"{d}({m})" for d, m in self.pairs)


# ---------------------------------------------------------------- small dense


def bareiss_det(mat: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix by fraction-free elimination."""
    n = len(mat)
    if n == 0:
        return 1
    a = [list(row) for row in mat]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k]:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        rowk = a[k]
        for i in range(k + 1, n):
            ai = a[i]
            aik = ai[k]
            for j in range(k + 1, n):
                ai[j] = (ai[j] * akk - aik * rowk[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1]


def dense_rank(rows: Sequence[Sequence[int]]) -> int:
    """Exact rank over Q of a small dense integer matrix (fraction-free)."""
    a = [list(r) for r in rows if any(r)]
    if not a:
        return 0
    ncols = len(a[0])
    rank = 0
    for col in range(ncols):
        piv = None
        for i in range(rank, len(a)):
            if a[i][col]:
                piv = i
                break
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank]
        pv = p[col]
        for i in range(rank + 1, len(a)):
            r = a[i]
            f = r[col]
            if f:
                g = gcd(pv, f)
                mp, mf = pv // g, f // g
                a[i] = [mp * x - mf * y for x, y in zip(r, p)]
        rank += 1
        if rank == len(a):
            break
    return rank


def independent_subset(vectors: Sequence[Sequence[int]]) -> list[int]:
    """Indices of the lexicographically first maximal independent subset."""
    basis: list[tuple[int, list[int]]] = []  # (pivot col, primitive reduced row)
    chosen: list[int] = []
    for idx, v in enumerate(vectors):
        w = [int(x) for x in v]
        for pc, row in basis:
            f = w[pc]
            if f:
                pv = row[pc]
                g = gcd(pv, f)
                a, b = pv // g, f // g
                w = [a * x - b * y for x, y in zip(w, row)]
        pc = next((j for j, x in enumerate(w) if x), None)
        if pc is None:
            continue
        g = 0
        for x in w:
            g = gcd(g, x)
        basis.append((pc, [x // g for x in w]))
        chosen.append(idx)
    return chosen


def solve_rational(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> list[list[Fraction]] | None:
    """Solve ``a X = b`` for square nonsingular ``a``; None if singular."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(x) for x in brow] for row, brow in zip(a, b)]
    width = len(m[0]) if m else 0
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col]), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for i in range(n):
            if i != col and m[i][col]:
                f = m[i][col]
                mc = m[col]
                m[i] = [x - f * y for x, y in zip(m[i], mc)]
    return [row[n:width] for row in m]


# ---------------------------------------------------------------- rank


def _random_prime(rng: random.Random, lo: int = 2**30, hi: int = 2**31) -> int:
    while True:
        p = rng.randrange(lo, hi) | 1
        if _is_prime(p):
            return p


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def rank_mod_p(m: SparseIntMatrix, p: int) -> int:
    """Rank over GF(p) by sparse elimination with a Markowitz-flavoured pivot."""
    rows = [{c: v % p for c, v in r.items() if v % p} for r in m.row_dicts()]
    rows = [r for r in rows if r]
    rank = 0
    while rows:
        # shortest row first; within it pick the column with the fewest
        # occurrences, which keeps fill-in low
        rows.sort(key=len)
        colcount: dict[int, int] = {}
        for r in rows:
            for c in r:
                colcount[c] = colcount.get(c, 0) + 1
        prow = rows[0]
        pc = min(prow, key=lambda c: (colcount[c], c))
        inv = pow(prow[pc], p - 2, p)
        rest = []
        for r in rows[1:]:
            f = r.get(pc)
            if f:
                f = f * inv % p
                for c, v in prow.items():
                    nv = (r.get(c, 0) - f * v) % p
                    if nv:
                        r[c] = nv
                    else:
                        r.pop(c, None)
            if r:
                rest.append(r)
        rows = rest
        rank += 1
    return rank


def rank_exact(m: SparseIntMatrix) -> int:
    """Fraction-free exact rank over Q (slow, unconditional)."""
    rows = [dict(r) for r in m.row_dicts() if r]
    rank = 0
    while rows:
        rows.sort(key=len)
        prow = rows[0]
        pc = min(prow)
        pv = prow[pc]
        rest = []
        for r in rows[1:]:
            f = r.get(pc)
            if f:
                g = gcd(pv, f)
                a, b = pv // g, f // g
                new = {}
                for c in set(r) | set(prow):
                    nv = a * r.get(c, 0) - b * prow.get(c, 0)
                    if nv:
                        new[c] = nv
                cont = 0
                for v in new.values():
                    cont = gcd(cont, v)
                if cont > 1:
                    new = {c: v // cont for c, v in new.items()}
                r = new
            if r:
                rest.append(r)
        rows = rest
        rank += 1
    return rank


def rank(m: SparseIntMatrix, rng: random.Random | None = None) -> int:
    """Exact rank over Q.

    Two independent random primes in (2^30, 2^31); on disagreement the
    fraction-free elimination decides.
    """
    if not m.entries:
        return 0
    rng = rng or random.Random(0x5EED ^ m.nnz ^ (m.nrows << 20) ^ m.ncols)
    p1 = _random_prime(rng)
    p2 = _random_prime(rng)
    while p2 == p1:
        p2 = _random_prime(rng)
    r1 = rank_mod_p(m, p1)
    r2 = rank_mod_p(m, p2)
    if r1 == r2:
        return r1
    return rank_exact(m)


# ---------------------------------------------------------------- kernel


def _column_echelon_with_transform(a: Matrix, ncols: int) -> tuple[Matrix, Matrix, int]:
    """Unimodular column reduction of ``a``; returns (a*V, V, rank)."""
    a = [list(r) for r in a]
    nrows = len(a)
    v = [[int(i == j) for j in range(ncols)] for i in range(ncols)]

    def colop(dst: int, src: int, q: int):
        # column dst -= q * column src
        for row in a:
            row[dst] -= q * row[src]
        for row in v:
            row[dst] -= q * row[src]

    def swap(i: int, j: int):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    piv_col = 0
    for r in range(nrows):
        if piv_col >= ncols:
            break
        while True:
            nz = [j for j in range(piv_col, ncols) if a[r][j]]
            if not nz:
                break
            j0 = min(nz, key=lambda j: abs(a[r][j]))
            if j0 != piv_col:
                swap(j0, piv_col)
            done = True
            for j in range(piv_col + 1, ncols):
                if a[r][j]:
                    colop(j, piv_col, a[r][j] // a[r][piv_col])
                    if a[r][j]:
                        done = False
            if done:
                break
        if any(a[r][j] for j in range(piv_col, ncols)):
            piv_col += 1
    return a, v, piv_col


def _hnf_rows(vecs: Matrix) -> Matrix:
    """Row Hermite normal form of a full-row-rank integer matrix."""
    a = [list(r) for r in vecs]
    if not a:
        return a
    ncols = len(a[0])
    out_row = 0
    for col in range(ncols):
        if out_row >= len(a):
            break
        while True:
            nz = [i for i in range(out_row, len(a)) if a[i][col]]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(a[i][col]))
            a[out_row], a[i0] = a[i0], a[out_row]
            done = True
            for i in range(out_row + 1, len(a)):
                if a[i][col]:
                    q = a[i][col] // a[out_row][col]
                    a[i] = [x - q * y for x, y in zip(a[i], a[out_row])]
                    if a[i][col]:
                        done = False
            if done:
                break
        if out_row < len(a) and a[out_row][col]:
            if a[out_row][col] < 0:
                a[out_row] = [-x for x in a[out_row]]
            p = a[out_row][col]
            for i in range(out_row):
                q = a[i][col] // p
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[out_row])]
            out_row += 1
    return a


def kernel_basis(m: SparseIntMatrix) -> list[list[int]]:
    """Z-basis of ``ker(M) ∩ Z^n`` in row Hermite form.

    Each vector is primitive with its first nonzero coordinate positive; the
    basis is canonical for the kernel lattice.
    """
    n = m.ncols
    if n == 0:
        return []
    dense = m.to_dense()
    _, v, r = _column_echelon_with_transform(dense, n)
    kern = [[v[i][j] for i in range(n)] for j in range(r, n)]
    kern = _hnf_rows(kern)
    out = []
    for vec in kern:
        g = 0
        for x in vec:
            g = gcd(g, x)
        vec = [x // g for x in vec] if g > 1 else vec
        first = next(x for x in vec if x)
        if first < 0:
            vec = [-x for x in vec]
        out.append(vec)
    return out


# ---------------------------------------------------------------- Smith form


def _unit_pre_elimination(rows: list[dict[int, int]]) -> tuple[list[dict[int, int]], int]:
    """Eliminate ±1 pivots (Markowitz order); returns residual rows and count."""
    rows = [r for r in rows if r]
    units = 0
    colrows: dict[int, set[int]] = {}
    live = dict(enumerate(rows))
    for i, r in live.items():
        for c in r:
            colrows.setdefault(c, set()).add(i)
    while True:
        best = None
        for i, r in live.items():
            lr = len(r) - 1
            for c, v in r.items():
                if v == 1 or v == -1:
                    cost = lr * (len(colrows[c]) - 1)
                    if best is None or cost < best[0]:
                        best = (cost, i, c)
                        if cost == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        _, pi, pc = best
        prow = live.pop(pi)
        for c in prow:
            colrows[c].discard(pi)
        pv = prow[pc]
        for i in list(colrows[pc]):
            r = live[i]
            f = r[pc] * pv  # pv = ±1 so f = r[pc]/pv
            for c, v in prow.items():
                nv = r.get(c, 0) - f * v
                if nv:
                    if c not in r:
                        colrows.setdefault(c, set()).add(i)
                    r[c] = nv
                elif c in r:
                    del r[c]
                    colrows[c].discard(i)
            if not r:
                del live[i]
        units += 1
    return [r for r in live.values() if r], units


def _dense_snf_diagonal(a: Matrix) -> list[int]:
    """Smith diagonal of a dense integer matrix (Kannan–Bachem style)."""
    a = [list(r) for r in a if any(r)]
    diag: list[int] = []
    content_scale = 1
    while a:
        ncols = len(a[0])
        # periodic content extraction keeps the entries small
        g = 0
        for row in a:
            for x in row:
                if x:
                    g = gcd(g, x)
                    if g == 1:
                        break
            if g == 1:
                break
        if g > 1:
            a = [[x // g for x in row] for row in a]
            content_scale *= g
        # pivot: smallest nonzero absolute value
        bi, bj, bv = -1, -1, 0
        for i, row in enumerate(a):
            for j, x in enumerate(row):
                if x and (bv == 0 or abs(x) < bv):
                    bi, bj, bv = i, j, abs(x)
                    if bv == 1:
                        break
            if bv == 1:
                break
        if bv == 0:
            break
        a[0], a[bi] = a[bi], a[0]
        for row in a:
            row[0], row[bj] = row[bj], row[0]
        while True:
            p = a[0][0]
            changed = False
            for i in range(1, len(a)):
                if a[i][0]:
                    q = a[i][0] // p
                    a[i] = [x - q * y for x, y in zip(a[i], a[0])]
                    if a[i][0]:
                        changed = True
            r0 = a[0]
            for j in range(1, ncols):
                if r0[j]:
                    q = r0[j] // p
                    for row in a:
                        row[j] -= q * row[0]
                    if r0[j]:
                        changed = True
            if not changed:
                # divisibility: p must divide every remaining entry
                bad = None
                for i in range(1, len(a)):
                    for j in range(1, ncols):
                        if a[i][j] % p:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is None:
                    break
                a[0] = [x + y for x, y in zip(a[0], a[bad])]
                continue
            # move the smallest entry of row/col 0 to the pivot
            cands = [(abs(a[i][0]), i, 0) for i in range(len(a)) if a[i][0]]
            cands += [(abs(a[0][j]), 0, j) for j in range(ncols) if a[0][j]]
            _, i, j = min(cands)
            a[0], a[i] = a[i], a[0]
            for row in a:
                row[0], row[j] = row[j], row[0]
        diag.append(abs(a[0][0]) * content_scale)
        a = [row[1:] for row in a[1:]]
        a = [r for r in a if any(r)]
        if a and not a[0]:
            break
    return diag


def elementary_divisors(m: SparseIntMatrix) -> ElementaryDivisorList:
    """Exact Smith normal form divisors of ``m``."""
    rows, units = _unit_pre_elimination(m.row_dicts())
    diag = [1] * units
    if rows:
        cols = sorted({c for r in rows for c in r})
        cidx = {c: j for j, c in enumerate(cols)}
        dense = [[0] * len(cols) for _ in rows]
        for i, r in enumerate(rows):
            for c, v in r.items():
                dense[i][cidx[c]] = v
        diag += _dense_snf_diagonal(dense)
    diag.sort()
    # the dense routine yields a divisibility chain per block; enforce it globally
    return ElementaryDivisorList.from_diagonal(_normalize_chain(diag))


def _normalize_chain(diag: list[int]) -> list[int]:
    """Turn any diagonal into its Smith divisibility chain (same group)."""
    d = [x for x in diag if x]
    n = len(d)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = d[i], d[j]
            if b % a:
                g = gcd(a, b)
                d[i], d[j] = g, a * b // g
    return sorted(d)


# ---------------------------------------------------------------- restriction


def restriction_det_sign(domain_basis: Sequence[Sequence[int]], images: Sequence[Sequence[int]]) -> int:
    """Sign of det of the change of basis expressing ``images`` in ``domain_basis``.

    Elements are flattened integer vectors (for symmetric matrices use
    :func:`sym_coords`).  Raises NotInSpan or SingularRestriction.
    """
    if len(domain_basis) != len(images):
        raise ValueError("domain_basis and images differ in length")
    k = len(domain_basis)
    if k == 0:
        return 1
    basis = [list(b) for b in domain_basis]
    piv = independent_subset(list(zip(*basis)))  # pivot coordinates
    if len(piv) != k:
        raise ValueError("domain_basis is not linearly independent")
    bsq = [[basis[j][p] for j in range(k)] for p in piv]
    isq = [[list(images[j])[p] for j in range(k)] for p in piv]
    coeffs = solve_rational(bsq, isq)
    assert coeffs is not None
    dim = len(basis[0])
    for j in range(k):
        img = images[j]
        for t in range(dim):
            s = sum(coeffs[i][j] * basis[i][t] for i in range(k))
            if s != img[t]:
                raise NotInSpan(f"image {j} not in span of domain basis")
    d_img = bareiss_det(isq)
    if d_img == 0:
        raise SingularRestriction("images are linearly dependent")
    d_b = bareiss_det(bsq)
    return 1 if (d_img > 0) == (d_b > 0) else -1


class RestrictionFrame:
    """A fixed domain basis prepared for repeated :func:`restriction_det_sign` calls.

    When the images are known to lie in the span, the sign only needs the
    pivot coordinates: ``det C = det(images_P) / det(basis_P)``.
    """

    def __init__(self, domain_basis: Sequence[Sequence[int]]):
        self.basis = [list(b) for b in domain_basis]
        self.k = len(self.basis)
        self.piv = independent_subset(list(zip(*self.basis))) if self.k else []
        if len(self.piv) != self.k:
            raise ValueError("domain_basis is not linearly independent")
        self.sign_b = 1 if bareiss_det([[b[p] for b in self.basis] for p in self.piv]) > 0 else -1

    def sign(self, images: Sequence[Sequence[int]], check: bool = False) -> int:
        if check:
            return restriction_det_sign(self.basis, images)
        if len(images) != self.k:
            raise ValueError("domain_basis and images differ in length")
        d = bareiss_det([[img[p] for img in images] for p in self.piv])
        if d == 0:
            raise SingularRestriction("images are linearly dependent")
        return self.sign_b if d > 0 else -self.sign_b


def sym_coords(mat: Sequence[Sequence[int]]) -> list[int]:
    """Upper-triangular coordinates of a symmetric matrix."""
    n = len(mat)
    return [mat[i][j] for i in range(n) for j in range(i, n)]


# ---------------------------------------------------------------- Matrix Market


MM_HEADER = "%%MatrixMarket matrix coordinate integer general"


def write_matrix_market(m: SparseIntMatrix) -> str:
    lines = [MM_HEADER, f"{m.nrows} {m.ncols} {m.nnz}"]
    lines += [f"{r + 1} {c + 1} {v}" for r, c, v in m.entries]
    return "\n".join(lines) + "\n"


def read_matrix_market(text: str) -> SparseIntMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != MM_HEADER:
        raise ValueError("not a coordinate integer MatrixMarket file")
    body = [ln for ln in lines[1:] if not ln.startswith("%")]
    nrows, ncols, nnz = map(int, body[0].split())
    ents = []
    for ln in body[1 : 1 + nnz]:
        r, c, v = ln.split()
        ents.append((int(r) - 1, int(c) - 1, int(v)))
    if len(ents) != nnz:
        raise ValueError("truncated MatrixMarket file")
    return SparseIntMatrix(nrows, ncols, tuple(ents))
