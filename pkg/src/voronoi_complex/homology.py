"""Differentials of the Voronoi complex, homology and the cohomology degree report."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .cells import Cell, NotAFace, VoronoiComplex, WitnessInvalid
from .exact_linalg import (
    ElementaryDivisorList,
    SparseIntMatrix,
    elementary_divisors,
    rank,
    restriction_det_sign,
)
from .forms import normalize_vector, vhat_coords
from .isometry import mat_vec, transpose


def _sign_images(target: Cell, images: Sequence[Sequence[int]]) -> int:
    return restriction_det_sign(target.basis_rays(), images)


def epsilon(face: Cell, sigma: Cell, *, check_all: bool = False) -> int:
    """Sign of (positive basis of R(face), v̂) against σ's orientation, v ∈ m(σ) \\ m(face)."""
    fv = set(face.vectors)
    if not fv <= set(sigma.vectors) or face.dim != sigma.dim - 1:
        raise NotAFace("not a codimension-one face")
    base = face.basis_rays()
    outside = [v for v in sigma.vectors if v not in fv]
    signs = {_sign_images(sigma, base + [vhat_coords(v)]) for v in (outside if check_all else outside[:1])}
    if len(signs) != 1:
        raise AssertionError("epsilon depends on the appended vector")
    return signs.pop()


def eta(rep: Cell, face: Cell, gamma: Sequence[Sequence[int]]) -> int:
    """+1 iff ``γ`` (with ``face = rep·γ``) carries rep's orientation to face's."""
    m = transpose(gamma)
    fv = set(face.vectors)
    images = [normalize_vector(mat_vec(m, v)) for v in rep.vectors]
    if len(images) != len(fv) or set(images) != fv:
        raise WitnessInvalid("witness does not map the representative onto the face")
    return _sign_images(face, [vhat_coords(images[i]) for i in rep.orientation_basis])


@dataclass
class Differential:
    n: int
    matrix: SparseIntMatrix
    row_labels: list[int]
    col_labels: list[int]

    @property
    def omega(self) -> int:
        return self.matrix.nnz


def differential(cx: VoronoiComplex, n: int) -> Differential:
    """``d_n : V_n -> V_{n-1}`` with rows Σ_{n-1}, columns Σ_n (cell ids are level indices)."""
    cols = cx.sigma(n)
    rows = cx.sigma(n - 1)
    ci = {s: j for j, s in enumerate(cols)}
    ri = {t: i for i, t in enumerate(rows)}
    entries: dict[tuple[int, int], int] = {}
    for inc in cx.incidences.get(n, []):
        if inc.sigma in ci and inc.tau in ri and inc.signed:
            key = (ri[inc.tau], ci[inc.sigma])
            entries[key] = entries.get(key, 0) + inc.signed
    return Differential(n, SparseIntMatrix.from_dict(len(rows), len(cols), entries), rows, cols)


def all_differentials(cx: VoronoiComplex) -> dict[int, Differential]:
    lo, hi = min(cx.levels), max(cx.levels)
    return {n: differential(cx, n) for n in range(lo, hi + 2)}


def verify_chain(cx: VoronoiComplex, diffs: dict[int, Differential] | None = None) -> bool:
    diffs = diffs or all_differentials(cx)
    for n, d in diffs.items():
        nxt = diffs.get(n + 1)
        if nxt is None or d.matrix.ncols == 0 or nxt.matrix.ncols == 0 or d.matrix.nrows == 0:
            continue
        if not (d.matrix @ nxt.matrix).is_zero():
            return False
    return True


@dataclass
class DifferentialRow:
    """One line of a differential table: Ω, n (columns), m (rows), rank, ker, divisors."""

    n: int
    omega: int
    ncols: int
    nrows: int
    rank: int
    ker: int
    divisors: ElementaryDivisorList

    def as_tuple(self) -> tuple:
        return (self.omega, self.ncols, self.nrows, self.rank, self.ker, str(self.divisors))


def differential_row(d: Differential, *, divisors: bool = True, rng: random.Random | None = None) -> DifferentialRow:
    m = d.matrix
    if divisors:
        ed = elementary_divisors(m)
        r = ed.rank
    else:
        ed = ElementaryDivisorList(())
        r = rank(m, rng)
    return DifferentialRow(d.n, m.nnz, m.ncols, m.nrows, r, m.ncols - r, ed)


def differential_table(cx: VoronoiComplex, diffs: dict[int, Differential] | None = None) -> list[DifferentialRow]:
    """Rows for every degree where Σ_n or Σ_{n-1} is nonempty."""
    diffs = diffs or all_differentials(cx)
    return [differential_row(d) for n, d in sorted(diffs.items()) if d.matrix.ncols or d.matrix.nrows]


@dataclass
class HomologyGroup:
    n: int
    free_rank: int
    torsion: ElementaryDivisorList = field(default_factory=lambda: ElementaryDivisorList(()))

    def torsion_primes(self) -> set[int]:
        out = set()
        for d, _ in self.torsion.pairs:
            p = 2
            while d > 1:
                while d % p == 0:
                    out.add(p)
                    d //= p
                p += 1
        return out

    def __str__(self) -> str:
        parts = []
        if self.free_rank:
            parts.append("Z" if self.free_rank == 1 else f"Z^{self.free_rank}")
        for d, k in self.torsion.pairs:
            parts.append(f"(Z/{d})" + (f"^{k}" if k > 1 else ""))
        return " + ".join(parts) or "0"


def homology(cx: VoronoiComplex, table: Sequence[DifferentialRow] | None = None) -> list[HomologyGroup]:
    """``H_n = ker d_n / im d_{n+1}`` from ranks and elementary divisors."""
    rows = {r.n: r for r in (table or differential_table(cx))}
    out = []
    for n in sorted(cx.levels):
        size = len(cx.sigma(n))
        rk_n = rows[n].rank if n in rows else 0
        nxt = rows.get(n + 1)
        rk_next = nxt.rank if nxt else 0
        tors = nxt.divisors.torsion() if nxt else ElementaryDivisorList(())
        out.append(HomologyGroup(n, size - rk_n - rk_next, tors))
    return out


def small_primes_only(groups: Sequence[HomologyGroup], bound: int) -> bool:
    """True iff every torsion prime is at most ``bound`` (the class 𝒮_{bound})."""
    return all(p <= bound for g in groups for p in g.torsion_primes())


@dataclass
class CohomologyLine:
    vor_degree: int
    degree: int
    rank: int
    coefficients: str


def v_dim(n: int) -> int:
    """v(N) = N(N-1)/2, the virtual cohomological dimension."""
    return n * (n - 1) // 2


def cohomology_report(cx: VoronoiComplex, groups: Sequence[HomologyGroup]) -> list[CohomologyLine]:
    """``H_m(Vor) -> H^{v(N)+N-1-m}(Γ)`` modulo 𝒮_{N+1}, nonzero free parts only.

    Coefficients are trivial for SL or odd N and the orientation module
    Z~ for GL with even N.
    """
    coeff = "Z~" if cx.group == "GL" and cx.N % 2 == 0 else "Z"
    out = []
    for g in sorted(groups, key=lambda g: -g.n):
        if g.free_rank:
            out.append(CohomologyLine(g.n, v_dim(cx.N) + cx.N - 1 - g.n, g.free_rank, coeff))
    return out


def trivial_from_index_two(sl_lines: Sequence[CohomologyLine], gl_twisted: Sequence[CohomologyLine], n: int) -> list[CohomologyLine]:
    """Free ranks of ``H^*(GL_N(Z), Z)`` for even ``N`` (rationally, modulo small primes).

    SL_N(Z) has index two in GL_N(Z), so Shapiro's lemma gives
    ``H^q(SL_N) = H^q(GL_N; Z) + H^q(GL_N; Z~)`` up to 2-torsion.
    """
    sl = {c.degree: c.rank for c in sl_lines}
    tw = {c.degree: c.rank for c in gl_twisted}
    out = []
    for q in sorted(set(sl) | set(tw)):
        r = sl.get(q, 0) - tw.get(q, 0)
        if r < 0:
            raise ValueError(f"twisted rank exceeds SL_{n} rank in degree {q}")
        if r:
            out.append(CohomologyLine(v_dim(n) + n - 1 - q, q, r, "Z"))
    return out


def cohomology_caveat(n: int) -> str:
    return f"isomorphisms hold modulo the class S_{n + 1} of finite groups with primes <= {n + 1}"


def reorient(cx: VoronoiComplex, n: int, i: int) -> None:
    """Flip the reference orientation of cell ``i`` in dimension ``n`` in place."""
    cell = cx.levels[n][i]
    b = list(cell.orientation_basis)
    b[0], b[1] = b[1], b[0]
    cell.orientation_basis = tuple(b)
    for k in (n, n + 1):
        for inc in cx.incidences.get(k, []):
            if (k == n and inc.sigma == i) or (k == n + 1 and inc.tau == i):
                inc.signed = -inc.signed
    for k in (n, n + 1):
        for o in cx.face_orbits.get(k, []):
            if (k == n and o.sigma == i) or (k == n + 1 and o.tau == i):
                o.signed = -o.signed


__all__ = [
    "Differential",
    "DifferentialRow",
    "HomologyGroup",
    "CohomologyLine",
    "epsilon",
    "eta",
    "differential",
    "all_differentials",
    "verify_chain",
    "differential_row",
    "differential_table",
    "homology",
    "cohomology_report",
    "cohomology_caveat",
    "trivial_from_index_two",
    "small_primes_only",
    "reorient",
    "v_dim",
]
