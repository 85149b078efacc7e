"""Global consistency checks: mass formula, top class, explicit classes, splitting, prime audit."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Sequence

from .cells import Cell, VoronoiComplex, _isometry_vec, inflate_cell, orientation_sign, top_dim
from .exact_linalg import SparseIntMatrix, kernel_basis, rank
from .homology import Differential, DifferentialRow, all_differentials, differential
from .isometry import transpose


class StructuralViolation(AssertionError):
    pass


class MatchFailure(AssertionError):
    pass


class NotFound(LookupError):
    pass


def prime_factors(n: int) -> set[int]:
    out = set()
    p = 2
    while p * p <= n:
        while n % p == 0:
            out.add(p)
            n //= p
        p += 1
    if n > 1:
        out.add(n)
    return out


# ---------------------------------------------------------------- mass formula


@dataclass
class MassFormulaReport:
    partial: dict[int, Fraction]
    total: Fraction

    @property
    def ok(self) -> bool:
        return self.total == 0


def sl_mass_terms(cx: VoronoiComplex) -> dict[int, Fraction]:
    """``sum_{σ ∈ Σ_n*(SL)} 1/|Γ_σ|`` per dimension.

    From a GL complex: a GL cell with a determinant -1 stabilizer element is
    one SL cell of half the order, otherwise it splits into two SL cells of
    the same order; either way it contributes ``2/|Γ_σ^GL|``.
    """
    scale = 1 if cx.group == "SL" else 2
    return {n: sum((Fraction(scale, c.order) for c in cells), Fraction(0)) for n, cells in cx.levels.items()}


def mass_formula(cx: VoronoiComplex) -> MassFormulaReport:
    partial = sl_mass_terms(cx)
    total = sum(((-1) ** n * v for n, v in partial.items()), Fraction(0))
    return MassFormulaReport(dict(sorted(partial.items())), total)


# ---------------------------------------------------------------- top class


@dataclass
class TopClass:
    coefficients: list[int]
    signs: list[int]
    normalization: int
    kernel_rank: int
    in_kernel: bool
    proportional: bool
    structural: bool
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.in_kernel and self.proportional and self.structural


def top_class(cx: VoronoiComplex) -> TopClass:
    """Check that ``sum 1/|Γ_σ| [σ]`` spans the kernel of the top differential.

    Also checks the row structure: two nonzeros per row with opposite signs
    once the columns are signed like the kernel vector, and
    ``|d(τ,σ)| = |Γ_σ|/|Γ_τ|``.
    """
    top = top_dim(cx.N)
    d = differential(cx, top)
    cells = cx.levels[top]
    cols = [cells[j] for j in d.col_labels]
    rows = [cx.levels[top - 1][i] for i in d.row_labels]
    if len(cols) != len(cells):
        return TopClass([], [], 0, 0, False, False, False, ["some top cell is not orientable"])
    norm = lcm(*(c.order for c in cols))
    coeff = [norm // c.order for c in cols]
    msgs: list[str] = []
    ker = kernel_basis(d.matrix)
    if d.matrix.nrows == 0:
        return TopClass(coeff, [1] * len(coeff), norm, len(ker), True, True, True, ["top differential has no rows"])
    if len(ker) != 1:
        msgs.append(f"kernel rank {len(ker)}")
    signs = [1] * len(cols)
    proportional = False
    if ker:
        k = ker[0]
        signs = [1 if x > 0 else -1 for x in k]
        ab = [abs(x) for x in k]
        proportional = len(ker) == 1 and all(x * c.order == ab[0] * cols[0].order for x, c in zip(ab, cols))
    signed = [s * c for s, c in zip(signs, coeff)]
    in_kernel = not any(d.matrix.apply(signed))
    structural = True
    for i, row in enumerate(d.matrix.row_dicts()):
        nz = sorted(row.items())
        if len(nz) != 2:
            structural = False
            msgs.append(f"row {i}: {len(nz)} nonzero entries")
            continue
        vals = [v * signs[j] for j, v in nz]
        if vals[0] * vals[1] >= 0:
            structural = False
            msgs.append(f"row {i}: entries do not have opposite signs")
        for j, v in nz:
            q, r = divmod(cols[j].order, rows[i].order)
            if r or abs(v) != q:
                structural = False
                msgs.append(f"row {i}: |{v}| != |Γ_σ|/|Γ_τ| = {cols[j].order}/{rows[i].order}")
    return TopClass(coeff, signs, norm, len(ker), in_kernel, proportional, structural, msgs)


# ---------------------------------------------------------------- matrix comparison


def signed_permutation_equivalent(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> bool:
    """Is ``b = P D1 a D2 Q`` for permutations P, Q and sign diagonals D1, D2?"""
    if len(a) != len(b) or (a and len(a[0]) != len(b[0])):
        return False
    if not a:
        return True
    nr, nc = len(a), len(a[0])
    arow = [sorted(abs(x) for x in r) for r in a]
    brow = [sorted(abs(x) for x in r) for r in b]
    acol = [sorted(abs(a[i][j]) for i in range(nr)) for j in range(nc)]
    bcol = [sorted(abs(b[i][j]) for i in range(nr)) for j in range(nc)]
    if sorted(arow) != sorted(brow) or sorted(acol) != sorted(bcol):
        return False

    def signs_ok(p, q) -> bool:
        # solve b[p[i]][q[j]] = r_i c_j a[i][j] over the bipartite graph of nonzeros
        r: dict[int, int] = {}
        c: dict[int, int] = {}
        for i in range(nr):
            if i in r:
                continue
            r[i] = 1
            stack = [("r", i)]
            while stack:
                kind, k = stack.pop()
                if kind == "r":
                    for j in range(nc):
                        if a[k][j]:
                            s = r[k] * (1 if a[k][j] * b[p[k]][q[j]] > 0 else -1)
                            if j in c:
                                if c[j] != s:
                                    return False
                            else:
                                c[j] = s
                                stack.append(("c", j))
                else:
                    for i2 in range(nr):
                        if a[i2][k]:
                            s = c[k] * (1 if a[i2][k] * b[p[i2]][q[k]] > 0 else -1)
                            if i2 in r:
                                if r[i2] != s:
                                    return False
                            else:
                                r[i2] = s
                                stack.append(("r", i2))
        return True

    def cols_match(p) -> bool:
        used = [False] * nc
        q = [0] * nc

        def rec(j: int) -> bool:
            if j == nc:
                return signs_ok(p, q)
            col = [abs(a[i][j]) for i in range(nr)]
            for t in range(nc):
                if not used[t] and all(abs(b[p[i]][t]) == col[i] for i in range(nr)):
                    used[t] = True
                    q[j] = t
                    if rec(j + 1):
                        return True
                    used[t] = False
            return False

        return rec(0)

    used = [False] * nr
    p = [0] * nr

    def rows_rec(i: int) -> bool:
        if i == nr:
            return cols_match(p)
        for t in range(nr):
            if not used[t] and brow[t] == arow[i]:
                used[t] = True
                p[i] = t
                if rows_rec(i + 1):
                    return True
                used[t] = False
        return False

    return rows_rec(0)


def same_up_to_signed_permutation(u: Sequence[int], v: Sequence[int]) -> bool:
    return sorted(abs(x) for x in u) == sorted(abs(x) for x in v)


# ---------------------------------------------------------------- explicit GL5 class


@dataclass
class ExplicitClass:
    vector: list[int]
    kernel: list[list[int]]
    cycle: bool
    boundary: bool


def explicit_class_gl5(cx: VoronoiComplex, pattern: Sequence[int] = (5, 1, -8, 16, 15, 2, 2), search: int = 40) -> ExplicitClass:
    """Find the pattern in the kernel of the transpose of ``d_10``.

    ``d_10`` maps the six orientable 10-cells to the seven 9-cells; the
    pattern lives on the 9-cells.  Returns whether it is a cycle
    (``d_9 x = 0``) and a boundary (in the image of ``d_10``).
    """
    d10 = differential(cx, 10).matrix
    ker = kernel_basis(d10.transpose())
    target = sorted(abs(x) for x in pattern)
    found = None
    for coeffs in itertools.product(range(-search, search + 1), repeat=len(ker)):
        if not any(coeffs):
            continue
        vec = [sum(c * k[i] for c, k in zip(coeffs, ker)) for i in range(d10.nrows)]
        if sorted(abs(x) for x in vec) == target:
            found = vec
            break
    if found is None:
        raise NotFound("no kernel vector matches the coefficient pattern")
    d9 = differential(cx, 9).matrix
    cycle = not any(d9.apply(found))
    cols = d10.row_dicts()
    ext = {(i, j): v for i, row in enumerate(cols) for j, v in row.items()}
    for i, x in enumerate(found):
        if x:
            ext[(i, d10.ncols)] = x
    augmented = SparseIntMatrix.from_dict(d10.nrows, d10.ncols + 1, ext)
    boundary = rank(augmented) == rank(d10)
    return ExplicitClass(found, ker, cycle, boundary)


# ---------------------------------------------------------------- splitting


@dataclass
class SplittingReport:
    mapping: dict[tuple[int, int], int]
    matched: bool
    orientable: bool
    incidences_match: bool
    direct_factor: bool
    components_small: int
    components_large: int
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.matched and self.orientable and self.incidences_match and self.direct_factor


def locate(cell: Cell, cx: VoronoiComplex) -> int | None:
    for i, rep in enumerate(cx.levels.get(cell.dim, [])):
        if rep.key == cell.key and _isometry_vec(rep, cell, cx.group) is not None:
            return i
    return None


def _components(cx: VoronoiComplex, diffs: dict[int, Differential]) -> int:
    nodes = [(n, i) for n in cx.levels for i in cx.sigma(n)]
    parent = {v: v for v in nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for n, d in diffs.items():
        for i, row in enumerate(d.matrix.row_dicts()):
            for j in row:
                a, b = find((n - 1, d.row_labels[i])), find((n, d.col_labels[j]))
                parent[a] = b
    return len({find(v) for v in nodes})


def splitting_check(small: VoronoiComplex, large: VoronoiComplex) -> SplittingReport:
    """Inflate every orientable cell of ``small`` into ``large`` (dimension +1).

    Checks that images are orientable representatives, that the differentials
    agree up to a consistent sign per cell, and that no incidence joins an
    image cell to a cell outside the image.
    """
    mapping: dict[tuple[int, int], int] = {}
    msgs: list[str] = []
    matched = orientable = True
    for n in sorted(small.levels):
        for i in small.sigma(n):
            j = locate(inflate_cell(small.levels[n][i]), large)
            if j is None:
                matched = False
                msgs.append(f"cell {i} of dim {n} has no inflated match")
                continue
            mapping[(n, i)] = j
            if not large.levels[n + 1][j].orientable:
                orientable = False
                msgs.append(f"inflated cell {i} of dim {n} is not orientable")
    ds, dl = all_differentials(small), all_differentials(large)
    sign: dict[tuple[int, int], int] = {}
    incid_ok = True
    # edges: (cell a, cell b, small entry, large entry); propagate a sign per small cell
    edges: list[tuple[tuple[int, int], tuple[int, int], int, int]] = []
    for n, d in ds.items():
        if n + 1 not in dl:
            continue
        big = dl[n + 1]
        bi = {t: k for k, t in enumerate(big.row_labels)}
        bj = {s: k for k, s in enumerate(big.col_labels)}
        bd = big.matrix.row_dicts()
        sd = d.matrix.row_dicts()
        for ri, tau in enumerate(d.row_labels):
            for ci, sig in enumerate(d.col_labels):
                x = sd[ri].get(ci, 0)
                mt, ms = mapping.get((n - 1, tau)), mapping.get((n, sig))
                if mt is None or ms is None:
                    continue
                y = bd[bi[mt]].get(bj[ms], 0)
                if abs(x) != abs(y):
                    incid_ok = False
                    msgs.append(f"d_{n}[{tau},{sig}] = {x} but inflated entry is {y}")
                elif x:
                    edges.append(((n - 1, tau), (n, sig), x, y))
    adj: dict[tuple[int, int], list[tuple[tuple[int, int], int]]] = {}
    for a, b, x, y in edges:
        s = 1 if x == y else -1
        adj.setdefault(a, []).append((b, s))
        adj.setdefault(b, []).append((a, s))
    for start in adj:
        if start in sign:
            continue
        sign[start] = 1
        stack = [start]
        while stack:
            u = stack.pop()
            for w, s in adj[u]:
                want = sign[u] * s
                if w not in sign:
                    sign[w] = want
                    stack.append(w)
                elif sign[w] != want:
                    incid_ok = False
                    msgs.append("inconsistent signs between the two complexes")
    image = {(n + 1, j) for (n, _), j in mapping.items()}
    direct = True
    for n, d in dl.items():
        for i, row in enumerate(d.matrix.row_dicts()):
            for j in row:
                a = (n - 1, d.row_labels[i]) in image
                b = (n, d.col_labels[j]) in image
                if a != b:
                    direct = False
                    msgs.append(f"d_{n} joins image and non-image cells")
    return SplittingReport(mapping, matched, orientable, incid_ok, direct, _components(small, ds), _components(large, dl), msgs)


@dataclass
class NegativeControl:
    once_orientable: bool
    twice_orientable: bool
    swap_sign: int

    @property
    def ok(self) -> bool:
        return self.once_orientable and not self.twice_orientable and self.swap_sign == -1


def inflation_negative_control(cx3: VoronoiComplex, cx4: VoronoiComplex, cx5: VoronoiComplex) -> NegativeControl:
    """The top GL3 cell inflates to an orientable GL4 cell but not further.

    The twice-inflated cell is reversed by swapping the last two coordinates.
    """
    top3 = cx3.levels[top_dim(3)][0]
    once = inflate_cell(top3)
    twice = inflate_cell(once)
    i4 = locate(once, cx4)
    i5 = locate(twice, cx5)
    if i4 is None or i5 is None:
        raise MatchFailure("inflated cell not found")
    swap = [[int(i == j) for j in range(5)] for i in range(5)]
    swap[3][3] = swap[4][4] = 0
    swap[3][4] = swap[4][3] = 1
    return NegativeControl(cx4.levels[once.dim][i4].orientable, cx5.levels[twice.dim][i5].orientable, orientation_sign(swap, twice))


# ---------------------------------------------------------------- audits and tables


def prime_audit(cx: VoronoiComplex) -> list[tuple[int, int, int]]:
    """Cells whose stabilizer order has a prime factor above N+1 (should be empty)."""
    bad = []
    for n, cells in cx.levels.items():
        for i, c in enumerate(cells):
            if any(p > cx.N + 1 for p in prime_factors(c.order)):
                bad.append((n, i, c.order))
    return bad


def cardinality_csv(cx: VoronoiComplex) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "sigma_star", "sigma"])
    for n in sorted(cx.levels):
        cells = cx.levels[n]
        w.writerow([n, len(cells), sum(c.orientable for c in cells)])
    return buf.getvalue()


def differential_csv(rows: Sequence[DifferentialRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["A", "Omega", "n", "m", "rank", "ker", "divisors"])
    for r in rows:
        w.writerow([f"d_{r.n}", r.omega, r.ncols, r.nrows, r.rank, r.ker, str(r.divisors)])
    return buf.getvalue()


def witness_checks(cx: VoronoiComplex) -> int:
    """Verify every stored face witness maps its representative onto the face; returns the count."""
    from .forms import normalize_vector
    from .isometry import mat_vec

    k = 0
    for n, orbs in cx.face_orbits.items():
        for o in orbs:
            sigma = cx.levels[n][o.sigma]
            face = {sigma.vectors[i] for i in range(len(sigma.vectors)) if o.face >> i & 1}
            m = transpose(o.witness)
            img = {normalize_vector(mat_vec(m, v)) for v in cx.levels[n - 1][o.tau].vectors}
            if img != face:
                raise MatchFailure(f"witness of face orbit of cell {o.sigma} in dim {n} is wrong")
            k += 1
    return k
